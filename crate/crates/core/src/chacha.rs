//! ChaCha block function with a pluggable logic-operation fault.
//!
//! The quarter round is written against the [`QuarterRound`] trait so the
//! same 20-round schedule can be driven either by the behavioural model in
//! this module or by the instruction-level interpreter in [`crate::rvc`].

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::fmt;

use thiserror::Error;

/// `"expand 32-byte k"` as little-endian words.
pub const SIGMA: [u32; 4] = [0x6170_7865, 0x3320_646e, 0x7962_2d32, 0x6b20_6574];

pub const BLOCK_BYTES: usize = 64;

/// Column then diagonal quarter-round index sets of one double round.
pub const DOUBLE_ROUND: [[usize; 4]; 8] = [
    [0, 4, 8, 12],
    [1, 5, 9, 13],
    [2, 6, 10, 14],
    [3, 7, 11, 15],
    [0, 5, 10, 15],
    [1, 6, 11, 12],
    [2, 7, 8, 13],
    [3, 4, 9, 14],
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChaChaError {
    #[error("rotation amount {0} outside 1..=31")]
    RotationRange(u32),
    #[error(
        "{layout:?} layout expects {nonce_words} nonce word(s) and {counter_words} counter word(s)"
    )]
    OperandShape {
        layout: Layout,
        nonce_words: usize,
        counter_words: usize,
    },
    #[error("malformed test vector line {line}: {message}")]
    VectorFormat { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogicOp {
    And,
    Or,
    Xor,
}

impl LogicOp {
    pub fn apply(self, a: u32, b: u32) -> u32 {
        match self {
            LogicOp::And => a & b,
            LogicOp::Or => a | b,
            LogicOp::Xor => a ^ b,
        }
    }
}

/// Substitution of the logic operations used inside the quarter round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum FaultSpec {
    #[default]
    None,
    /// The rotation merge (and any other OR) executes as AND.
    OrToAnd,
    Custom(BTreeMap<LogicOp, LogicOp>),
}

impl FaultSpec {
    pub fn substitute(&self, op: LogicOp) -> LogicOp {
        match self {
            FaultSpec::None => op,
            FaultSpec::OrToAnd if op == LogicOp::Or => LogicOp::And,
            FaultSpec::OrToAnd => op,
            FaultSpec::Custom(map) => map.get(&op).copied().unwrap_or(op),
        }
    }

    pub fn apply(&self, op: LogicOp, a: u32, b: u32) -> u32 {
        self.substitute(op).apply(a, b)
    }
}

/// Rotate left by `n` as `(p << n) | (p >> (32 - n))`, with the merge routed
/// through the fault.
pub fn rotl(p: u32, n: u32, f: &FaultSpec) -> Result<u32, ChaChaError> {
    if !(1..=31).contains(&n) {
        return Err(ChaChaError::RotationRange(n));
    }
    Ok(f.apply(LogicOp::Or, p << n, p >> (32 - n)))
}

/// 256-bit encryption key as eight little-endian words.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ChaChaKey(pub [u32; 8]);

impl ChaChaKey {
    pub fn from_bytes(bytes: &[u8; 32]) -> ChaChaKey {
        let mut w = [0u32; 8];
        for (i, chunk) in bytes.chunks_exact(4).enumerate() {
            w[i] = u32::from_le_bytes(chunk.try_into().unwrap());
        }
        ChaChaKey(w)
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, w) in self.0.iter().enumerate() {
            out[4 * i..4 * i + 4].copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn words(&self) -> &[u32; 8] {
        &self.0
    }
}

impl fmt::Debug for ChaChaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChaChaKey({})", hex::encode(self.to_bytes()))
    }
}

/// Matrix layout of the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Row 0 nonce x4, rows 1-2 key, row 3 counter x4.
    NonceFirst,
    /// Published ChaCha20: constants, key, key, 32-bit counter then 96-bit nonce.
    Standard,
}

impl Layout {
    /// `(nonce words, counter words)`.
    pub fn shape(self) -> (usize, usize) {
        match self {
            Layout::NonceFirst => (4, 4),
            Layout::Standard => (3, 1),
        }
    }
}

/// 4x4 matrix of words, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaChaState {
    pub m: [u32; 16],
    pub layout: Layout,
}

impl ChaChaState {
    pub fn row(&self, r: usize) -> [u32; 4] {
        self.m[4 * r..4 * r + 4].try_into().unwrap()
    }

    /// Advance the block counter by one. Standard: the 32-bit counter word.
    /// Nonce-first: row 3 read as a 128-bit little-endian integer.
    pub fn increment_counter(&mut self) {
        match self.layout {
            Layout::Standard => self.m[12] = self.m[12].wrapping_add(1),
            Layout::NonceFirst => {
                for w in &mut self.m[12..16] {
                    let (v, carry) = w.overflowing_add(1);
                    *w = v;
                    if !carry {
                        break;
                    }
                }
            }
        }
    }
}

/// Build the initial matrix. Nonce-first layout takes four nonce and four counter
/// words; standard takes three nonce words and one counter word.
pub fn init_state(
    key: &ChaChaKey,
    nonce: &[u32],
    counter: &[u32],
    layout: Layout,
) -> Result<ChaChaState, ChaChaError> {
    let (nn, nc) = layout.shape();
    if nonce.len() != nn || counter.len() != nc {
        return Err(ChaChaError::OperandShape {
            layout,
            nonce_words: nn,
            counter_words: nc,
        });
    }
    let mut m = [0u32; 16];
    m[4..12].copy_from_slice(&key.0);
    match layout {
        Layout::NonceFirst => {
            m[0..4].copy_from_slice(nonce);
            m[12..16].copy_from_slice(counter);
        }
        Layout::Standard => {
            m[0..4].copy_from_slice(&SIGMA);
            m[12] = counter[0];
            m[13..16].copy_from_slice(nonce);
        }
    }
    Ok(ChaChaState { m, layout })
}

/// Something that can execute one quarter round on four words.
pub trait QuarterRound {
    type Error;

    fn quarter_round(&mut self, w: [u32; 4]) -> Result<[u32; 4], Self::Error>;
}

/// Reference quarter round with a logic-operation fault.
#[derive(Debug, Clone, Default)]
pub struct Behavioral(pub FaultSpec);

impl QuarterRound for Behavioral {
    type Error = Infallible;

    fn quarter_round(&mut self, w: [u32; 4]) -> Result<[u32; 4], Infallible> {
        Ok(quarter_round_words(w, &self.0))
    }
}

pub fn quarter_round_words([mut a, mut b, mut c, mut d]: [u32; 4], f: &FaultSpec) -> [u32; 4] {
    let rot = |x: u32, n: u32| f.apply(LogicOp::Or, x << n, x >> (32 - n));
    let xor = |x: u32, y: u32| f.apply(LogicOp::Xor, x, y);
    a = a.wrapping_add(b);
    d = rot(xor(d, a), 16);
    c = c.wrapping_add(d);
    b = rot(xor(b, c), 12);
    a = a.wrapping_add(b);
    d = rot(xor(d, a), 8);
    c = c.wrapping_add(d);
    b = rot(xor(b, c), 7);
    [a, b, c, d]
}

/// Quarter round on state positions `idx` (must be distinct and < 16).
pub fn quarter_round(state: &ChaChaState, idx: [usize; 4], f: &FaultSpec) -> ChaChaState {
    assert!(
        idx.iter().all(|&i| i < 16),
        "quarter-round index out of range"
    );
    assert!(
        (0..4).all(|i| (i + 1..4).all(|j| idx[i] != idx[j])),
        "quarter-round indices must be distinct"
    );
    let mut out = *state;
    let r = quarter_round_words(idx.map(|i| state.m[i]), f);
    for (slot, v) in idx.into_iter().zip(r) {
        out.m[slot] = v;
    }
    out
}

/// The 20-round permutation without the final feed-forward addition.
pub fn permute_with<Q: QuarterRound>(s0: &ChaChaState, q: &mut Q) -> Result<ChaChaState, Q::Error> {
    let mut s = *s0;
    for _ in 0..10 {
        for idx in DOUBLE_ROUND {
            let r = q.quarter_round(idx.map(|i| s.m[i]))?;
            for (slot, v) in idx.into_iter().zip(r) {
                s.m[slot] = v;
            }
        }
    }
    Ok(s)
}

pub fn permute(s0: &ChaChaState, f: &FaultSpec) -> ChaChaState {
    let Ok(s) = permute_with(s0, &mut Behavioral(f.clone()));
    s
}

pub fn keystream_block_with<Q: QuarterRound>(
    s0: &ChaChaState,
    q: &mut Q,
) -> Result<[u32; 16], Q::Error> {
    let s = permute_with(s0, q)?;
    Ok(std::array::from_fn(|i| s.m[i].wrapping_add(s0.m[i])))
}

/// 20 rounds (ten column/diagonal double rounds) plus the initial state.
pub fn keystream_block(s0: &ChaChaState, f: &FaultSpec) -> [u32; 16] {
    let Ok(ks) = keystream_block_with(s0, &mut Behavioral(f.clone()));
    ks
}

pub fn serialize_block(words: &[u32; 16]) -> [u8; BLOCK_BYTES] {
    let mut out = [0u8; BLOCK_BYTES];
    for (i, w) in words.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&w.to_le_bytes());
    }
    out
}

/// XOR `plaintext` with consecutive keystream blocks produced by `q`,
/// advancing the counter after each block.
pub fn encrypt_with<Q: QuarterRound>(
    s0: &ChaChaState,
    plaintext: &[u8],
    q: &mut Q,
) -> Result<Vec<u8>, Q::Error> {
    let mut state = *s0;
    let mut out = Vec::with_capacity(plaintext.len());
    for chunk in plaintext.chunks(BLOCK_BYTES) {
        let ks = serialize_block(&keystream_block_with(&state, q)?);
        out.extend(chunk.iter().zip(ks).map(|(p, k)| p ^ k));
        state.increment_counter();
    }
    Ok(out)
}

pub fn encrypt(
    key: &ChaChaKey,
    nonce: &[u32],
    counter: &[u32],
    plaintext: &[u8],
    f: &FaultSpec,
    layout: Layout,
) -> Result<Vec<u8>, ChaChaError> {
    let s0 = init_state(key, nonce, counter, layout)?;
    let Ok(ct) = encrypt_with(&s0, plaintext, &mut Behavioral(f.clone()));
    Ok(ct)
}

/// One published-style block vector: key bytes, 96-bit nonce bytes, block
/// counter and the first keystream block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVector {
    pub key: [u8; 32],
    pub nonce: [u8; 12],
    pub counter: u32,
    pub keystream: [u8; 64],
}

impl TestVector {
    /// Nonce as the three little-endian words of the standard layout.
    pub fn nonce_words(&self) -> [u32; 3] {
        std::array::from_fn(|i| {
            u32::from_le_bytes(self.nonce[4 * i..4 * i + 4].try_into().unwrap())
        })
    }
}

/// Parse `key=<64 hex> nonce=<24 hex> counter=<8 hex> keystream=<128 hex>`
/// lines; `#` comments and blank lines are skipped.
pub fn parse_test_vectors(text: &str) -> Result<Vec<TestVector>, ChaChaError> {
    fn field<const N: usize>(
        line: usize,
        map: &BTreeMap<&str, &str>,
        name: &str,
    ) -> Result<[u8; N], ChaChaError> {
        let err = |message: String| ChaChaError::VectorFormat { line, message };
        let hex_str = map
            .get(name)
            .ok_or_else(|| err(format!("missing `{name}`")))?;
        let bytes = hex::decode(hex_str).map_err(|e| err(format!("`{name}`: {e}")))?;
        bytes
            .try_into()
            .map_err(|b: Vec<u8>| err(format!("`{name}` has {} bytes, expected {N}", b.len())))
    }
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let code = raw.split('#').next().unwrap_or("").trim();
        if code.is_empty() {
            continue;
        }
        let mut map = BTreeMap::new();
        for tok in code.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| ChaChaError::VectorFormat {
                    line,
                    message: format!("expected key=value, got `{tok}`"),
                })?;
            map.insert(k, v);
        }
        let counter: [u8; 4] = field(line, &map, "counter")?;
        out.push(TestVector {
            key: field(line, &map, "key")?,
            nonce: field(line, &map, "nonce")?,
            counter: u32::from_be_bytes(counter),
            keystream: field(line, &map, "keystream")?,
        });
    }
    Ok(out)
}

/// Vectors shipped with the crate (RFC 8439 block test plus extra cases).
pub const BUNDLED_VECTORS: &str = include_str!("../fixtures/chacha20_vectors.txt");
