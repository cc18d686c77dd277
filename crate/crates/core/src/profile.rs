//! A decoder-locking profile modelled on a locked RISC-V core: a 1024-bit
//! locking key, the compressed-decoder front end locked with 128 key gates on
//! bits 0..128 and the 32-bit decoder front end with 128 gates on bits
//! 128..256. The remaining key bits drive no gate here and are filled from the
//! same seeded generator.
//!
//! [`MaskDeriver`] turns a (possibly wrong) locking key into the
//! [`KeyGateMask`] that the compressed decoder applies to each fetched word, by
//! simulating the locked front end on that word.

use std::ops::Range;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuits;
use crate::locking::{
    key_net_index, lock, LockKey, LockOptions, Locked, LockingError, DECODER_KEY_GATES,
    DEFAULT_KEY_WIDTH,
};
use crate::netlist::{CompiledNetlist, Netlist};
use crate::rvc::{KeyGateMask, CA_FIELD_BITS};

pub const PROFILE_SEED: u64 = 0x6d69_6776_0000_0001;
pub const RVC_SEGMENT: Range<usize> = 0..DECODER_KEY_GATES;
pub const DEC32_SEGMENT: Range<usize> = DECODER_KEY_GATES..2 * DECODER_KEY_GATES;

/// Output line carrying instruction bit 5 into the CA logic-group decode.
pub const FUNCT2_LINE: &str = "ca[5]";

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Locking(#[from] LockingError),
    #[error("decoder front end lacks port `{0}`")]
    MissingPort(String),
    #[error("front end uses key bit {index} but the key has {width} bits")]
    KeyTooNarrow { index: usize, width: usize },
}

#[derive(Debug, Clone)]
pub struct DecoderProfile {
    pub key: LockKey,
    pub rvc: Locked,
    pub dec32: Locked,
}

impl DecoderProfile {
    pub fn build(seed: u64) -> Result<DecoderProfile, ProfileError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rvc_seed: u64 = rng.gen();
        let dec_seed: u64 = rng.gen();
        let mut key = LockKey::from_bits((0..DEFAULT_KEY_WIDTH).map(|_| rng.gen()).collect())?;
        let segment = |name: &str, seed, key_offset| {
            let n = circuits::load(name).expect("bundled decoder circuit");
            lock(
                &n,
                LockOptions {
                    count: DECODER_KEY_GATES,
                    seed,
                    key_offset,
                    key_width: DEFAULT_KEY_WIDTH,
                },
            )
        };
        let mut rvc = segment("rvc_front", rvc_seed, RVC_SEGMENT.start)?;
        let mut dec32 = segment("dec32_front", dec_seed, DEC32_SEGMENT.start)?;
        for r in rvc.plan.records.iter().chain(&dec32.plan.records) {
            key.set_bit(r.key_index, r.correct_bit)?;
        }
        rvc.key = key.clone();
        dec32.key = key.clone();
        Ok(DecoderProfile { key, rvc, dec32 })
    }

    /// The profile built from [`PROFILE_SEED`].
    pub fn bundled() -> &'static DecoderProfile {
        static P: OnceLock<DecoderProfile> = OnceLock::new();
        P.get_or_init(|| DecoderProfile::build(PROFILE_SEED).expect("bundled profile builds"))
    }

    /// Key bits of the compressed front end whose gate reaches `line` and no
    /// other output.
    pub fn coupled_bits(&self, line: &str) -> Vec<usize> {
        let mut bits: Vec<usize> = self
            .rvc
            .plan
            .records
            .iter()
            .filter(|r| {
                let cone = self.rvc.netlist.output_cone(&r.locked_net);
                cone.len() == 1 && cone.contains(line)
            })
            .map(|r| r.key_index)
            .collect();
        bits.sort_unstable();
        bits
    }

    /// Key bits whose flip swaps `c.or` and `c.and` in the decoder.
    pub fn funct2_bits(&self) -> Vec<usize> {
        self.coupled_bits(FUNCT2_LINE)
    }
}

/// Derives per-word decoder masks from a locked compressed front end with
/// inputs `instr[0..16]`, outputs `fetch[0..16]` and any of the CA-group
/// lines `ca[2]`..`ca[9]`.
#[derive(Debug, Clone)]
pub struct MaskDeriver {
    compiled: CompiledNetlist,
    key_bits: Vec<usize>,
    fetch: Vec<usize>,
    ca: Vec<Option<usize>>,
}

impl MaskDeriver {
    pub fn new(front: &Netlist) -> Result<MaskDeriver, ProfileError> {
        let compiled = front.compile();
        for i in 0..16 {
            let want = format!("instr[{i}]");
            if compiled.inputs().get(i) != Some(&want) {
                return Err(ProfileError::MissingPort(want));
            }
        }
        let out_pos = |name: &str| compiled.outputs().iter().position(|o| o == name);
        let fetch = (0..16)
            .map(|i| {
                let name = format!("fetch[{i}]");
                out_pos(&name).ok_or(ProfileError::MissingPort(name))
            })
            .collect::<Result<_, _>>()?;
        let ca = (0..16).map(|i| out_pos(&format!("ca[{i}]"))).collect();
        let key_bits = compiled
            .keys()
            .iter()
            .map(|k| {
                key_net_index(k)
                    .ok_or_else(|| ProfileError::Locking(LockingError::ForeignKeyNet(k.clone())))
            })
            .collect::<Result<_, _>>()?;
        Ok(MaskDeriver {
            compiled,
            key_bits,
            fetch,
            ca,
        })
    }

    /// Masks seen by each of `words` under `key`. `fetch` is the difference
    /// on the fetch lines; `logic` the difference on the CA lines, limited to
    /// [`CA_FIELD_BITS`]. A missing CA line follows its fetch line.
    pub fn masks(&self, words: &[u16], key: &LockKey) -> Result<Vec<KeyGateMask>, ProfileError> {
        let key_words = self
            .key_bits
            .iter()
            .map(|&i| match key.bit(i) {
                Ok(b) => Ok(if b { u64::MAX } else { 0 }),
                Err(_) => Err(ProfileError::KeyTooNarrow {
                    index: i,
                    width: key.width(),
                }),
            })
            .collect::<Result<Vec<u64>, _>>()?;
        let mut masks = Vec::with_capacity(words.len());
        let (mut scratch, mut out) = (Vec::new(), Vec::new());
        for chunk in words.chunks(64) {
            let pi: Vec<u64> = (0..16)
                .map(|b| {
                    chunk
                        .iter()
                        .enumerate()
                        .fold(0u64, |acc, (lane, &w)| acc | ((w >> b & 1) as u64) << lane)
                })
                .collect();
            self.compiled
                .eval_into(&pi, &key_words, &mut scratch, &mut out);
            for (lane, &w) in chunk.iter().enumerate() {
                let bit = |slot: usize| (out[slot] >> lane & 1) as u16;
                let mut fetched = 0u16;
                let mut ca = 0u16;
                for b in 0..16 {
                    let f = bit(self.fetch[b]);
                    fetched |= f << b;
                    ca |= self.ca[b].map_or(f, bit) << b;
                }
                // `logic` is applied on top of the fetch mask, so express the
                // CA lines relative to the fetched word.
                masks.push(KeyGateMask {
                    fetch: w ^ fetched,
                    logic: (fetched ^ ca) & CA_FIELD_BITS,
                });
            }
        }
        Ok(masks)
    }
}
