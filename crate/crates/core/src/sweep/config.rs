//! Line-based `key = value` sweep configuration.
//!
//! ```text
//! # common
//! target    = chacha            # or `netlist`
//! key_file  = profile.key       # correct locking key (chacha: optional)
//! bit_range = 0..127            # inclusive; default: the whole key
//! report    = sweep.json        # optional report path
//! parallel  = false
//!
//! # chacha target
//! decoder    = rvc_front.locked.net   # optional; default: bundled profile
//! chacha_key = 000102...1f            # 64 hex digits
//! nonce      = 00000000...            # hex bytes: 16 (nonce-first) or 12 (standard)
//! counter    = 1                      # decimal or 0x-prefixed
//! layout     = nonce-first            # or `standard`
//! plaintext  = zeros:64               # or `hex:<bytes>`
//!
//! # netlist target
//! netlist = locked.net
//! vectors = 256
//! seed    = 1
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::chacha::{ChaChaKey, Layout};

pub const DEFAULT_VECTORS: usize = 256;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaintextSource {
    Zeros(usize),
    Bytes(Vec<u8>),
}

impl PlaintextSource {
    pub fn bytes(&self) -> Vec<u8> {
        match self {
            PlaintextSource::Zeros(n) => vec![0; *n],
            PlaintextSource::Bytes(b) => b.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaChaTargetConfig {
    pub decoder: Option<PathBuf>,
    pub chacha_key: ChaChaKey,
    pub nonce: Vec<u32>,
    pub counter: Vec<u32>,
    pub layout: Layout,
    pub plaintext: PlaintextSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetlistTargetConfig {
    pub netlist: PathBuf,
    pub vectors: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetConfig {
    ChaCha(ChaChaTargetConfig),
    Netlist(NetlistTargetConfig),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub key_file: Option<PathBuf>,
    pub bit_range: Option<RangeInclusive<usize>>,
    pub target: TargetConfig,
    pub report_path: Option<PathBuf>,
    pub parallel: bool,
}

const KEYS: &[&str] = &[
    "target",
    "key_file",
    "bit_range",
    "report",
    "parallel",
    "decoder",
    "chacha_key",
    "nonce",
    "counter",
    "layout",
    "plaintext",
    "netlist",
    "vectors",
    "seed",
];

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_owned(),
        message: message.into(),
    }
}

pub fn parse_int<T: TryFrom<u128>>(key: &str, s: &str) -> Result<T, ConfigError> {
    let v = match s.strip_prefix("0x") {
        Some(h) => u128::from_str_radix(h, 16),
        None => s.parse::<u128>(),
    }
    .map_err(|e| invalid(key, e.to_string()))?;
    T::try_from(v).map_err(|_| invalid(key, format!("{s} out of range")))
}

/// `a..b` (inclusive) or a single index.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, ConfigError> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (
            parse_int("bit_range", a.trim())?,
            parse_int("bit_range", b.trim())?,
        ),
        None => {
            let v = parse_int("bit_range", s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(invalid("bit_range", format!("empty range {s}")));
    }
    Ok(lo..=hi)
}

pub fn parse_layout(s: &str) -> Result<Layout, ConfigError> {
    match s {
        "nonce-first" => Ok(Layout::NonceFirst),
        "standard" => Ok(Layout::Standard),
        _ => Err(invalid(
            "layout",
            format!("expected `nonce-first` or `standard`, got `{s}`"),
        )),
    }
}

pub fn parse_chacha_key(s: &str) -> Result<ChaChaKey, ConfigError> {
    let bytes: [u8; 32] = hex::decode(s)
        .map_err(|e| invalid("chacha_key", e.to_string()))?
        .try_into()
        .map_err(|_| invalid("chacha_key", "expected 32 bytes"))?;
    Ok(ChaChaKey::from_bytes(&bytes))
}

/// Nonce hex bytes as little-endian words.
pub fn parse_nonce(s: &str, layout: Layout) -> Result<Vec<u32>, ConfigError> {
    let want = match layout {
        Layout::NonceFirst => 16,
        Layout::Standard => 12,
    };
    let bytes = hex::decode(s).map_err(|e| invalid("nonce", e.to_string()))?;
    if bytes.len() != want {
        return Err(invalid(
            "nonce",
            format!("expected {want} bytes, got {}", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Nonce-first layout: a 128-bit counter split into four little-endian words.
/// Standard layout: one 32-bit word.
pub fn counter_words(value: u128, layout: Layout) -> Result<Vec<u32>, ConfigError> {
    match layout {
        Layout::NonceFirst => Ok((0..4).map(|i| (value >> (32 * i)) as u32).collect()),
        Layout::Standard => {
            let v = u32::try_from(value).map_err(|_| invalid("counter", "exceeds 32 bits"))?;
            Ok(vec![v])
        }
    }
}

pub fn parse_plaintext(s: &str) -> Result<PlaintextSource, ConfigError> {
    if let Some(n) = s.strip_prefix("zeros:") {
        return Ok(PlaintextSource::Zeros(parse_int("plaintext", n)?));
    }
    if let Some(h) = s.strip_prefix("hex:") {
        return hex::decode(h)
            .map(PlaintextSource::Bytes)
            .map_err(|e| invalid("plaintext", e.to_string()));
    }
    Err(invalid(
        "plaintext",
        "expected `zeros:<n>` or `hex:<bytes>`",
    ))
}

fn parse_bool(key: &str, s: &str) -> Result<bool, ConfigError> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, format!("expected true/false, got `{s}`"))),
    }
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<SweepConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        SweepConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base: &Path) -> Result<SweepConfig, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_owned()));
            }
            if map.insert(k, v.trim()).is_some() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("`{k}` given twice"),
                });
            }
        }
        let path = |k: &str| map.get(k).map(|v| base.join(v));
        let target = match map.get("target").copied() {
            None => return Err(ConfigError::Missing("target")),
            Some("chacha") => {
                let layout = map
                    .get("layout")
                    .map_or(Ok(Layout::NonceFirst), |s| parse_layout(s))?;
                let nonce = match map.get("nonce") {
                    Some(s) => parse_nonce(s, layout)?,
                    None => vec![0; layout.shape().0],
                };
                let counter = counter_words(
                    map.get("counter")
                        .map_or(Ok(0), |s| parse_int("counter", s))?,
                    layout,
                )?;
                let chacha_key = parse_chacha_key(
                    map.get("chacha_key")
                        .ok_or(ConfigError::Missing("chacha_key"))?,
                )?;
                let plaintext = map
                    .get("plaintext")
                    .map_or(Ok(PlaintextSource::Zeros(64)), |s| parse_plaintext(s))?;
                TargetConfig::ChaCha(ChaChaTargetConfig {
                    decoder: path("decoder"),
                    chacha_key,
                    nonce,
                    counter,
                    layout,
                    plaintext,
                })
            }
            Some("netlist") => {
                let vectors = map
                    .get("vectors")
                    .map_or(Ok(DEFAULT_VECTORS), |s| parse_int("vectors", s))?;
                if vectors == 0 {
                    return Err(invalid("vectors", "must be at least 1"));
                }
                TargetConfig::Netlist(NetlistTargetConfig {
                    netlist: path("netlist").ok_or(ConfigError::Missing("netlist"))?,
                    vectors,
                    seed: map.get("seed").map_or(Ok(0), |s| parse_int("seed", s))?,
                })
            }
            Some(other) => {
                return Err(invalid(
                    "target",
                    format!("expected `chacha` or `netlist`, got `{other}`"),
                ))
            }
        };
        if matches!(target, TargetConfig::Netlist(_)) && !map.contains_key("key_file") {
            return Err(ConfigError::Missing("key_file"));
        }
        Ok(SweepConfig {
            key_file: path("key_file"),
            bit_range: map.get("bit_range").map(|s| parse_range(s)).transpose()?,
            target,
            report_path: path("report"),
            parallel: map
                .get("parallel")
                .map_or(Ok(false), |s| parse_bool("parallel", s))?,
        })
    }
}
