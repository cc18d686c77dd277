//! Run classification, secret-leak scanning and key recovery from faulted
//! ChaCha output.

use std::collections::BTreeSet;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::chacha::{ChaChaKey, BLOCK_BYTES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LeakageError {
    #[error("baseline run did not complete with output")]
    InvalidBaseline,
    #[error("secret length {0} is not a multiple of 4 bytes")]
    UnalignedSecret(usize),
    #[error("need at least {needed} bytes of known plaintext and ciphertext, got {got}")]
    Insufficient { needed: usize, got: usize },
    #[error("keystream word {0} is odd: not produced by the doubled-key fault")]
    OddDoubledWord(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Completed,
    Trapped,
    NoOutput,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub output: Vec<u8>,
}

impl RunOutcome {
    pub fn completed(output: Vec<u8>) -> RunOutcome {
        RunOutcome {
            status: RunStatus::Completed,
            output,
        }
    }

    pub fn trapped() -> RunOutcome {
        RunOutcome {
            status: RunStatus::Trapped,
            output: Vec::new(),
        }
    }

    pub fn no_output() -> RunOutcome {
        RunOutcome {
            status: RunStatus::NoOutput,
            output: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    BootFailure,
    NoOutput,
    Unchanged,
    Changed,
    Leak,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::BootFailure,
        Category::NoOutput,
        Category::Unchanged,
        Category::Changed,
        Category::Leak,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::BootFailure => "boot_failure",
            Category::NoOutput => "no_output",
            Category::Unchanged => "unchanged",
            Category::Changed => "changed",
            Category::Leak => "leak",
        }
    }
}

/// Compare a run against the baseline. A trap maps to `BootFailure`; a
/// completed run whose output is empty while the baseline's is not maps to
/// `NoOutput`. `Leak` is only assigned by [`classify_with_leak`].
pub fn classify(baseline: &RunOutcome, run: &RunOutcome) -> Result<Category, LeakageError> {
    if baseline.status != RunStatus::Completed {
        return Err(LeakageError::InvalidBaseline);
    }
    Ok(match run.status {
        RunStatus::Trapped => Category::BootFailure,
        RunStatus::NoOutput => Category::NoOutput,
        RunStatus::Completed if run.output.is_empty() && !baseline.output.is_empty() => {
            Category::NoOutput
        }
        RunStatus::Completed if run.output == baseline.output => Category::Unchanged,
        RunStatus::Completed => Category::Changed,
    })
}

/// [`classify`], refined to `Leak` when a changed output contains at least
/// one word of `secret`.
pub fn classify_with_leak(
    baseline: &RunOutcome,
    run: &RunOutcome,
    secret: &[u8],
) -> Result<(Category, Option<LeakFinding>), LeakageError> {
    let cat = classify(baseline, run)?;
    if cat != Category::Changed {
        return Ok((cat, None));
    }
    let finding = scan_leak(&run.output, secret)?;
    if finding.words_leaked > 0 {
        Ok((Category::Leak, Some(finding)))
    } else {
        Ok((cat, Some(finding)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transform {
    Identity,
    /// Output word equals `2 * w mod 2^32` for a secret word `w`.
    DoubledWord,
}

impl Transform {
    pub fn as_str(self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::DoubledWord => "doubled",
        }
    }

    fn apply(self, w: u32) -> u32 {
        match self {
            Transform::Identity => w,
            Transform::DoubledWord => w.wrapping_mul(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    fn word(self, b: &[u8]) -> u32 {
        let b: [u8; 4] = b.try_into().unwrap();
        match self {
            ByteOrder::Little => u32::from_le_bytes(b),
            ByteOrder::Big => u32::from_be_bytes(b),
        }
    }
}

/// A contiguous run of secret words found in the output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LeakRange {
    /// Byte offset into the output.
    pub offset: usize,
    /// Length in bytes.
    pub length: usize,
    /// Index of the first secret word of the run.
    pub secret_word: usize,
    pub transform: Transform,
    pub byte_order: ByteOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakFinding {
    pub fraction_of_secret_leaked: f64,
    /// Transform covering the most secret words (identity on ties or when
    /// nothing matched).
    pub matched_transform: Transform,
    pub ranges: Vec<LeakRange>,
    /// `fraction_of_secret_leaked` as an exact ratio.
    pub words_leaked: usize,
    pub words_total: usize,
}

impl LeakFinding {
    pub fn fraction(&self) -> f64 {
        self.fraction_of_secret_leaked
    }
}

/// `{"fraction": .., "transform": "identity"|"doubled", "ranges": [[off,len],..],
/// "range_transforms": [..]}`
impl Serialize for LeakFinding {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LeakFinding", 4)?;
        st.serialize_field("fraction", &self.fraction_of_secret_leaked)?;
        st.serialize_field("transform", self.matched_transform.as_str())?;
        let ranges: Vec<[usize; 2]> = self.ranges.iter().map(|r| [r.offset, r.length]).collect();
        st.serialize_field("ranges", &ranges)?;
        let kinds: Vec<&str> = self.ranges.iter().map(|r| r.transform.as_str()).collect();
        st.serialize_field("range_transforms", &kinds)?;
        st.end()
    }
}

#[derive(Debug, Clone)]
struct Run {
    out_word: usize,
    secret_word: usize,
    len: usize,
    transform: Transform,
    order: ByteOrder,
}

/// Search `output` for the 32-bit words of `secret`, aligned to 4 bytes,
/// unmodified or doubled, reading words in both byte orders.
pub fn scan_leak(output: &[u8], secret: &[u8]) -> Result<LeakFinding, LeakageError> {
    if !secret.len().is_multiple_of(4) {
        return Err(LeakageError::UnalignedSecret(secret.len()));
    }
    let total = secret.len() / 4;
    let mut runs = Vec::new();
    let variants = [
        (Transform::Identity, ByteOrder::Little),
        (Transform::DoubledWord, ByteOrder::Little),
        (Transform::DoubledWord, ByteOrder::Big),
    ];
    for (transform, order) in variants {
        let sec: Vec<u32> = secret
            .chunks_exact(4)
            .map(|c| transform.apply(order.word(c)))
            .collect();
        let out: Vec<u32> = output.chunks_exact(4).map(|c| order.word(c)).collect();
        let hit = |p: usize, j: usize| out[p] == sec[j];
        for p in 0..out.len() {
            for j in 0..sec.len() {
                // only start at the head of a diagonal run
                if !hit(p, j) || (p > 0 && j > 0 && hit(p - 1, j - 1)) {
                    continue;
                }
                let len = (0..)
                    .take_while(|&t| p + t < out.len() && j + t < sec.len() && hit(p + t, j + t))
                    .count();
                runs.push(Run {
                    out_word: p,
                    secret_word: j,
                    len,
                    transform,
                    order,
                });
            }
        }
    }

    let mut covered = BTreeSet::new();
    let mut chosen: Vec<Run> = Vec::new();
    loop {
        let gain = |r: &Run| {
            (r.secret_word..r.secret_word + r.len)
                .filter(|j| !covered.contains(j))
                .count()
        };
        let best = runs
            .iter()
            .filter(|r| gain(r) > 0)
            .max_by(|a, b| {
                gain(a)
                    .cmp(&gain(b))
                    .then(b.transform.cmp(&a.transform))
                    .then(b.out_word.cmp(&a.out_word))
                    .then(b.order.cmp(&a.order))
            })
            .cloned();
        let Some(best) = best else { break };
        covered.extend(best.secret_word..best.secret_word + best.len);
        chosen.push(best);
    }
    chosen.sort_by_key(|r| (r.out_word, r.secret_word));

    let words_by = |t: Transform| {
        chosen
            .iter()
            .filter(|r| r.transform == t)
            .map(|r| r.len)
            .sum::<usize>()
    };
    let matched_transform = if words_by(Transform::DoubledWord) > words_by(Transform::Identity) {
        Transform::DoubledWord
    } else {
        Transform::Identity
    };
    let leaked = covered.len();
    Ok(LeakFinding {
        fraction_of_secret_leaked: if total == 0 {
            0.0
        } else {
            leaked as f64 / total as f64
        },
        matched_transform,
        ranges: chosen
            .into_iter()
            .map(|r| LeakRange {
                offset: 4 * r.out_word,
                length: 4 * r.len,
                secret_word: r.secret_word,
                transform: r.transform,
                byte_order: r.order,
            })
            .collect(),
        words_leaked: leaked,
        words_total: total,
    })
}

/// Candidate encryption keys behind a first block produced under the
/// OR-to-AND fault: key words 0..3 are keystream words 4..7 and key words
/// 4..7 are halves of keystream words 8..11, each with an unknown top bit.
pub fn recover_key(ciphertext: &[u8], plaintext: &[u8]) -> Result<Vec<ChaChaKey>, LeakageError> {
    let got = ciphertext.len().min(plaintext.len());
    if got < BLOCK_BYTES {
        return Err(LeakageError::Insufficient {
            needed: BLOCK_BYTES,
            got,
        });
    }
    let ks: Vec<u32> = ciphertext[..BLOCK_BYTES]
        .chunks_exact(4)
        .zip(plaintext[..BLOCK_BYTES].chunks_exact(4))
        .map(|(c, p)| {
            let x: Vec<u8> = c.iter().zip(p).map(|(a, b)| a ^ b).collect();
            ByteOrder::Little.word(&x)
        })
        .collect();
    for (i, &w) in ks.iter().enumerate().take(12).skip(8) {
        if w & 1 == 1 {
            return Err(LeakageError::OddDoubledWord(i));
        }
    }
    let mut out = Vec::with_capacity(16);
    for top in 0u32..16 {
        let mut k = [0u32; 8];
        k[..4].copy_from_slice(&ks[4..8]);
        for j in 0..4 {
            k[4 + j] = (ks[8 + j] >> 1) | (((top >> j) & 1) << 31);
        }
        out.push(ChaChaKey(k));
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chacha::{encrypt, FaultSpec, Layout};

    fn done(b: &[u8]) -> RunOutcome {
        RunOutcome::completed(b.to_vec())
    }

    #[test]
    fn classification() {
        let base = done(b"abcd");
        assert_eq!(
            classify(&base, &done(b"abcd")).unwrap(),
            Category::Unchanged
        );
        assert_eq!(
            classify(&base, &RunOutcome::trapped()).unwrap(),
            Category::BootFailure
        );
        assert_eq!(classify(&base, &done(b"abce")).unwrap(), Category::Changed);
        assert_eq!(
            classify(&base, &RunOutcome::no_output()).unwrap(),
            Category::NoOutput
        );
        assert_eq!(classify(&base, &done(b"")).unwrap(), Category::NoOutput);
        assert_eq!(
            classify(&RunOutcome::trapped(), &base),
            Err(LeakageError::InvalidBaseline)
        );
    }

    #[test]
    fn secret_itself_is_full_identity_leak() {
        let secret: Vec<u8> = (1..=32).collect();
        let f = scan_leak(&secret, &secret).unwrap();
        assert_eq!(f.fraction(), 1.0);
        assert_eq!(f.matched_transform, Transform::Identity);
        assert_eq!(f.ranges.len(), 1);
        assert_eq!((f.ranges[0].offset, f.ranges[0].length), (0, 32));
    }

    #[test]
    fn faulted_ciphertext_leaks_whole_key() {
        let key = ChaChaKey([
            0x03020100, 0x07060504, 0x0b0a0908, 0x0f0e0d0c, 0x13121110, 0x17161514, 0x1b1a1918,
            0x1f1e1d1c,
        ]);
        let ct = encrypt(
            &key,
            &[5, 6, 7, 8],
            &[1, 2, 3, 4],
            &[0; 64],
            &FaultSpec::OrToAnd,
            Layout::NonceFirst,
        )
        .unwrap();
        let f = scan_leak(&ct, &key.to_bytes()).unwrap();
        assert_eq!(f.fraction(), 1.0);
        let r: Vec<(usize, usize, Transform)> = f
            .ranges
            .iter()
            .map(|r| (r.offset, r.length, r.transform))
            .collect();
        assert_eq!(
            r,
            [
                (16, 16, Transform::Identity),
                (32, 16, Transform::DoubledWord)
            ]
        );
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(
            json,
            r#"{"fraction":1.0,"transform":"identity","ranges":[[16,16],[32,16]],"range_transforms":["identity","doubled"]}"#
        );
    }

    #[test]
    fn unaligned_secret_rejected() {
        assert_eq!(
            scan_leak(&[0; 8], &[0; 5]),
            Err(LeakageError::UnalignedSecret(5))
        );
    }

    #[test]
    fn zero_keystream_gives_degenerate_candidates() {
        let c = recover_key(&[7; 64], &[7; 64]).unwrap();
        assert_eq!(c.len(), 16);
        for k in &c {
            assert_eq!(&k.0[..4], &[0; 4]);
            assert!(k.0[4..].iter().all(|&w| w == 0 || w == 1 << 31));
        }
    }

    #[test]
    fn odd_doubled_word_is_inconsistent() {
        let mut ct = [0u8; 64];
        ct[36] = 1; // word 9, little-endian low byte
        assert_eq!(
            recover_key(&ct, &[0; 64]),
            Err(LeakageError::OddDoubledWord(9))
        );
        assert!(matches!(
            recover_key(&[0; 63], &[0; 63]),
            Err(LeakageError::Insufficient { .. })
        ));
    }
}
