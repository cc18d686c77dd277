//! Single-bit locking-key flip sweeps.
//!
//! Every bit in range is flipped on its own, the target runs under the
//! flipped key, and the run is classified against a baseline obtained with
//! the unmodified key. Runs are independent; the parallel mode only changes
//! scheduling, never the report.

mod config;
mod report;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use config::{
    counter_words, parse_chacha_key, parse_layout, parse_nonce, parse_plaintext, parse_range,
    ChaChaTargetConfig, ConfigError, NetlistTargetConfig, PlaintextSource, SweepConfig,
    TargetConfig, DEFAULT_VECTORS,
};
pub use report::{BitResult, MaskRecord, Percentages, SweepReport, Tallies};

use crate::chacha::{encrypt_with, init_state, ChaChaError, ChaChaKey, ChaChaState};
use crate::leakage::{classify, classify_with_leak, Category, LeakageError, RunOutcome, RunStatus};
use crate::locking::{key_net_index, LockKey, LockingError};
use crate::netlist::{parse, CompiledNetlist, NetlistError};
use crate::profile::{DecoderProfile, MaskDeriver, ProfileError};
use crate::rvc::{boots, Interpreted, KeyGateMask, Program};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Locking(#[from] LockingError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    ChaCha(#[from] ChaChaError),
    #[error(transparent)]
    Leakage(#[from] LeakageError),
    #[error("reading {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("baseline run with the unmodified key did not complete")]
    BaselineFailed,
    #[error("bit range ends at {end} but the key has {width} bits")]
    RangeBeyondKey { end: usize, width: usize },
}

pub(crate) fn read(path: &Path) -> Result<String, SweepError> {
    std::fs::read_to_string(path).map_err(|source| SweepError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Something executed once per key variant.
pub trait Target: Sync {
    fn name(&self) -> &'static str;

    fn run(&self, key: &LockKey) -> RunOutcome;

    /// Bytes searched for in changed outputs.
    fn secret(&self) -> Option<&[u8]> {
        None
    }

    /// Decoder mask implied by `key`, for targets that have one.
    fn mask(&self, _key: &LockKey) -> Option<KeyGateMask> {
        None
    }

    /// Key bits that can affect the target at all, or `None` for every bit.
    fn key_bits(&self) -> Option<BTreeSet<usize>> {
        None
    }
}

/// ChaCha encryption on the interpreter, with each fetched instruction
/// passed through a locked compressed-decoder front end. The boot self-test
/// runs first through the same decoder; if it diverges the run counts as a
/// boot failure.
pub struct ChaChaTarget {
    deriver: MaskDeriver,
    words: Vec<u16>,
    state: ChaChaState,
    plaintext: Vec<u8>,
    secret: [u8; 32],
}

impl ChaChaTarget {
    pub fn new(
        deriver: MaskDeriver,
        key: &ChaChaKey,
        nonce: &[u32],
        counter: &[u32],
        layout: crate::chacha::Layout,
        plaintext: Vec<u8>,
    ) -> Result<ChaChaTarget, SweepError> {
        let words: BTreeSet<u16> = Program::quarter_round()
            .words
            .iter()
            .chain(&Program::boot_check().words)
            .map(|w| w.word())
            .collect();
        Ok(ChaChaTarget {
            deriver,
            words: words.into_iter().collect(),
            state: init_state(key, nonce, counter, layout)?,
            plaintext,
            secret: key.to_bytes(),
        })
    }

    pub fn from_config(c: &ChaChaTargetConfig) -> Result<ChaChaTarget, SweepError> {
        let front = match &c.decoder {
            Some(p) => parse(&read(p)?)?,
            None => DecoderProfile::bundled().rvc.netlist.clone(),
        };
        ChaChaTarget::new(
            MaskDeriver::new(&front)?,
            &c.chacha_key,
            &c.nonce,
            &c.counter,
            c.layout,
            c.plaintext.bytes(),
        )
    }

    fn mask_table(&self, key: &LockKey) -> Result<HashMap<u16, KeyGateMask>, ProfileError> {
        let masks = self.deriver.masks(&self.words, key)?;
        Ok(self.words.iter().copied().zip(masks).collect())
    }
}

impl Target for ChaChaTarget {
    fn name(&self) -> &'static str {
        "chacha"
    }

    fn run(&self, key: &LockKey) -> RunOutcome {
        let Ok(table) = self.mask_table(key) else {
            return RunOutcome::trapped();
        };
        if !boots(|w| table[&w]) {
            return RunOutcome::trapped();
        }
        let mut q = Interpreted::new(|w| table[&w]);
        match encrypt_with(&self.state, &self.plaintext, &mut q) {
            Ok(ct) if ct.is_empty() => RunOutcome::no_output(),
            Ok(ct) => RunOutcome::completed(ct),
            Err(_) => RunOutcome::trapped(),
        }
    }

    fn secret(&self) -> Option<&[u8]> {
        Some(&self.secret)
    }

    /// Union over the masks of all program words.
    fn mask(&self, key: &LockKey) -> Option<KeyGateMask> {
        let table = self.mask_table(key).ok()?;
        Some(
            table
                .values()
                .fold(KeyGateMask::ZERO, |acc, m| KeyGateMask {
                    fetch: acc.fetch | m.fetch,
                    logic: acc.logic | m.logic,
                }),
        )
    }
}

/// Seeded random input vectors through a locked netlist. The output is the
/// concatenated output bits of every vector, packed LSB-first into bytes.
pub struct NetlistTarget {
    compiled: CompiledNetlist,
    key_bits: Vec<usize>,
    chunks: Vec<(Vec<u64>, usize)>,
}

impl NetlistTarget {
    pub fn new(
        n: &crate::netlist::Netlist,
        vectors: usize,
        seed: u64,
    ) -> Result<NetlistTarget, SweepError> {
        let compiled = n.compile();
        let key_bits = compiled
            .keys()
            .iter()
            .map(|k| key_net_index(k).ok_or_else(|| LockingError::ForeignKeyNet(k.clone())))
            .collect::<Result<_, _>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chunks = Vec::new();
        let mut left = vectors;
        while left > 0 {
            let lanes = left.min(64);
            let live = if lanes == 64 {
                u64::MAX
            } else {
                (1 << lanes) - 1
            };
            chunks.push((
                (0..compiled.inputs().len())
                    .map(|_| rng.gen::<u64>() & live)
                    .collect(),
                lanes,
            ));
            left -= lanes;
        }
        Ok(NetlistTarget {
            compiled,
            key_bits,
            chunks,
        })
    }

    pub fn from_config(c: &NetlistTargetConfig) -> Result<NetlistTarget, SweepError> {
        NetlistTarget::new(&parse(&read(&c.netlist)?)?, c.vectors, c.seed)
    }
}

impl Target for NetlistTarget {
    fn name(&self) -> &'static str {
        "netlist"
    }

    fn run(&self, key: &LockKey) -> RunOutcome {
        let Some(kw) = self
            .key_bits
            .iter()
            .map(|&i| key.bit(i).ok().map(|b| if b { u64::MAX } else { 0 }))
            .collect::<Option<Vec<u64>>>()
        else {
            return RunOutcome::trapped();
        };
        let mut bits = Vec::new();
        let (mut scratch, mut out) = (Vec::new(), Vec::new());
        for (pi, lanes) in &self.chunks {
            self.compiled.eval_into(pi, &kw, &mut scratch, &mut out);
            for lane in 0..*lanes {
                bits.extend(out.iter().map(|w| w >> lane & 1 == 1));
            }
        }
        let bytes = bits
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b as u8) << i)
            })
            .collect();
        RunOutcome::completed(bytes)
    }

    fn key_bits(&self) -> Option<BTreeSet<usize>> {
        Some(self.key_bits.iter().copied().collect())
    }
}

/// Which bits to sweep: `range` (default: the whole key), restricted to the
/// target's key bits when it declares them.
pub fn bits_to_sweep(
    target: &dyn Target,
    width: usize,
    range: Option<std::ops::RangeInclusive<usize>>,
) -> Result<Vec<usize>, SweepError> {
    if width == 0 {
        return Ok(Vec::new());
    }
    let range = range.unwrap_or(0..=width - 1);
    if *range.end() >= width {
        return Err(SweepError::RangeBeyondKey {
            end: *range.end(),
            width,
        });
    }
    let used = target.key_bits();
    Ok(range
        .filter(|b| used.as_ref().is_none_or(|u| u.contains(b)))
        .collect())
}

fn sweep_bit(target: &dyn Target, baseline: &RunOutcome, key: &LockKey, bit: usize) -> BitResult {
    let Ok(flipped) = key.flip_key_bit(bit) else {
        return BitResult::new(bit, Category::BootFailure, None, None);
    };
    let run = target.run(&flipped);
    let verdict = match target.secret() {
        Some(s) => classify_with_leak(baseline, &run, s),
        None => classify(baseline, &run).map(|c| (c, None)),
    };
    match verdict {
        Ok((category, leak)) => BitResult::new(bit, category, target.mask(&flipped), leak),
        Err(_) => BitResult::new(bit, Category::BootFailure, None, None),
    }
}

/// Run the sweep. The report lists `bits` in ascending order whatever the
/// execution order.
pub fn run_sweep(
    target: &dyn Target,
    key: &LockKey,
    bits: &[usize],
    parallel: bool,
) -> Result<SweepReport, SweepError> {
    let baseline = target.run(key);
    if baseline.status != RunStatus::Completed {
        return Err(SweepError::BaselineFailed);
    }
    let mut bits = bits.to_vec();
    bits.sort_unstable();
    bits.dedup();
    let per_bit: Vec<BitResult> = if parallel {
        bits.par_iter()
            .map(|&b| sweep_bit(target, &baseline, key, b))
            .collect()
    } else {
        bits.iter()
            .map(|&b| sweep_bit(target, &baseline, key, b))
            .collect()
    };
    Ok(SweepReport::new(target.name(), key.width(), per_bit))
}

/// The configured target and the correct locking key (the bundled profile's
/// when no key file is given).
pub fn load_target(c: &SweepConfig) -> Result<(Box<dyn Target>, LockKey), SweepError> {
    let key = match &c.key_file {
        Some(p) => LockKey::parse_file(&read(p)?)?,
        None => DecoderProfile::bundled().key.clone(),
    };
    let target: Box<dyn Target> = match &c.target {
        TargetConfig::ChaCha(t) => Box::new(ChaChaTarget::from_config(t)?),
        TargetConfig::Netlist(t) => Box::new(NetlistTarget::from_config(t)?),
    };
    Ok((target, key))
}

/// Build the configured target and run it.
pub fn sweep_from_config(c: &SweepConfig) -> Result<SweepReport, SweepError> {
    let (target, key) = load_target(c)?;
    let bits = bits_to_sweep(target.as_ref(), key.width(), c.bit_range.clone())?;
    run_sweep(target.as_ref(), &key, &bits, c.parallel)
}
