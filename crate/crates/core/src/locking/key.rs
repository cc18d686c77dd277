use std::fmt;

use crate::netlist::{Assignment, Netlist};

use super::{LockingError, Result};

/// Prefix of every key input inserted by the locker. The suffix is the bit's
/// index in the [`LockKey`].
pub const KEY_NET_PREFIX: &str = "lolo_key_bit";

pub fn key_net_name(index: usize) -> String {
    format!("{KEY_NET_PREFIX}{index}")
}

/// Parse `lolo_key_bit<N>` back to `N`.
pub fn key_net_index(net: &str) -> Option<usize> {
    let digits = net.strip_prefix(KEY_NET_PREFIX)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Logic-locking key. Bit `i` is bit `i` of the key's integer value
/// (LSB-first indexing).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LockKey {
    bits: Vec<bool>,
}

impl LockKey {
    pub fn zeros(width: usize) -> Result<LockKey> {
        if width == 0 {
            return Err(LockingError::InvalidWidth);
        }
        Ok(LockKey {
            bits: vec![false; width],
        })
    }

    pub fn from_bits(bits: Vec<bool>) -> Result<LockKey> {
        if bits.is_empty() {
            return Err(LockingError::InvalidWidth);
        }
        Ok(LockKey { bits })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, index: usize) -> Result<bool> {
        self.bits
            .get(index)
            .copied()
            .ok_or(LockingError::KeyIndexOutOfRange {
                index,
                width: self.width(),
            })
    }

    pub fn set_bit(&mut self, index: usize, value: bool) -> Result<()> {
        let width = self.width();
        let slot = self
            .bits
            .get_mut(index)
            .ok_or(LockingError::KeyIndexOutOfRange { index, width })?;
        *slot = value;
        Ok(())
    }

    /// Copy of the key with bit `index` inverted.
    pub fn flip_key_bit(&self, index: usize) -> Result<LockKey> {
        let mut out = self.clone();
        let old = self.bit(index)?;
        out.bits[index] = !old;
        Ok(out)
    }

    pub fn hamming_distance(&self, other: &LockKey) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
            + self.width().abs_diff(other.width())
    }

    /// Lowercase hex, most significant digit first, `ceil(width / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.width().div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = (0..4).fold(0u32, |acc, b| {
                    let i = 4 * d + b;
                    acc | ((self.bits.get(i).copied().unwrap_or(false) as u32) << b)
                });
                char::from_digit(nibble, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(width: usize, hex: &str) -> Result<LockKey> {
        if width == 0 {
            return Err(LockingError::InvalidWidth);
        }
        let hex = hex.trim();
        let digits = width.div_ceil(4);
        if hex.len() != digits {
            return Err(LockingError::KeyFormat(format!(
                "expected {digits} hex digits for width {width}, got {}",
                hex.len()
            )));
        }
        let mut bits = vec![false; width];
        for (pos, c) in hex.chars().enumerate() {
            if c.is_ascii_uppercase() {
                return Err(LockingError::KeyFormat(format!(
                    "uppercase hex digit `{c}`"
                )));
            }
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| LockingError::KeyFormat(format!("bad hex digit `{c}`")))?;
            let d = digits - 1 - pos;
            for b in 0..4 {
                let i = 4 * d + b;
                let set = (nibble >> b) & 1 == 1;
                if i < width {
                    bits[i] = set;
                } else if set {
                    return Err(LockingError::KeyFormat(format!(
                        "bit {i} set beyond width {width}"
                    )));
                }
            }
        }
        Ok(LockKey { bits })
    }

    /// Key file contents: `width:<n>\n<hex>\n`.
    pub fn to_file_string(&self) -> String {
        format!("width:{}\n{}\n", self.width(), self.to_hex())
    }

    pub fn parse_file(text: &str) -> Result<LockKey> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| LockingError::KeyFormat("empty key file".into()))?;
        let width: usize = header
            .trim()
            .strip_prefix("width:")
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| LockingError::KeyFormat(format!("bad header `{header}`")))?;
        let hex = lines
            .next()
            .ok_or_else(|| LockingError::KeyFormat("missing hex line".into()))?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(LockingError::KeyFormat("trailing content after key".into()));
        }
        LockKey::from_hex(width, hex)
    }

    /// Assignment for the key inputs of `n`. Every key input must be named
    /// `lolo_key_bit<N>` with `N < width`.
    pub fn assignment_for(&self, n: &Netlist) -> Result<Assignment> {
        n.key_inputs()
            .iter()
            .map(|net| {
                let idx =
                    key_net_index(net).ok_or_else(|| LockingError::ForeignKeyNet(net.clone()))?;
                Ok((net.clone(), self.bit(idx)?))
            })
            .collect()
    }
}

impl fmt::Debug for LockKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LockKey({}:{})", self.width(), self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flip_sets_single_lsb_first_bit() {
        let k = LockKey::zeros(8).unwrap();
        let f = k.flip_key_bit(3).unwrap();
        let s: String = f
            .bits()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        assert_eq!(s, "00010000");
        assert_eq!(f.to_hex(), "08");
        assert!(k.bits().iter().all(|&b| !b), "input untouched");
        assert!(matches!(
            k.flip_key_bit(8),
            Err(LockingError::KeyIndexOutOfRange { index: 8, width: 8 })
        ));
    }

    #[test]
    fn all_single_flips_are_distinct() {
        let bits: Vec<bool> = (0..1024).map(|i| (i * 7 + i / 3) % 5 < 2).collect();
        let k = LockKey::from_bits(bits).unwrap();
        let flipped: std::collections::HashSet<LockKey> = (0..1024)
            .map(|i| {
                let f = k.flip_key_bit(i).unwrap();
                assert_eq!(f.hamming_distance(&k), 1);
                f
            })
            .collect();
        assert_eq!(flipped.len(), 1024);
    }

    #[test]
    fn hex_file_format() {
        let mut k = LockKey::zeros(10).unwrap();
        k.set_bit(0, true).unwrap();
        k.set_bit(9, true).unwrap();
        assert_eq!(k.to_file_string(), "width:10\n201\n");
        assert_eq!(LockKey::parse_file("width:10\n201\n").unwrap(), k);
        assert!(
            LockKey::parse_file("width:10\n401\n").is_err(),
            "bit beyond width"
        );
        assert!(LockKey::parse_file("width:10\n20A\n").is_err(), "uppercase");
        assert!(LockKey::parse_file("width:10\n01\n").is_err(), "short");
        assert!(LockKey::zeros(0).is_err());
    }

    #[test]
    fn key_net_names() {
        assert_eq!(key_net_index(&key_net_name(127)), Some(127));
        assert_eq!(key_net_index("lolo_key_bit"), None);
        assert_eq!(key_net_index("lolo_key_bitx"), None);
        assert_eq!(key_net_index("k3"), None);
    }

    proptest! {
        #[test]
        fn flip_is_involution(bits in proptest::collection::vec(any::<bool>(), 1..300), seed in any::<usize>()) {
            let k = LockKey::from_bits(bits).unwrap();
            let i = seed % k.width();
            prop_assert_eq!(k.flip_key_bit(i).unwrap().flip_key_bit(i).unwrap(), k.clone());
            prop_assert_eq!(LockKey::parse_file(&k.to_file_string()).unwrap(), k);
        }
    }
}
