//! ROM-backed key multiplexer Trojan.
//!
//! Up to 1024 adversarial keys sit in a ROM addressed by a 10-bit select.
//! While `enable` is clear the multiplexer passes the original key through.

use super::key::LockKey;
use super::{LockingError, Result};

pub const ROM_CAPACITY: usize = 1024;
pub const ADDRESS_BITS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrojanKeyMux {
    width: usize,
    rom: Vec<LockKey>,
    select: u16,
    enable: bool,
}

impl TrojanKeyMux {
    pub fn new(width: usize, rom: Vec<LockKey>) -> Result<TrojanKeyMux> {
        if width == 0 {
            return Err(LockingError::InvalidWidth);
        }
        if rom.len() > ROM_CAPACITY {
            return Err(LockingError::RomTooLarge(rom.len()));
        }
        if let Some(k) = rom.iter().find(|k| k.width() != width) {
            return Err(LockingError::WidthMismatch {
                expected: width,
                found: k.width(),
            });
        }
        Ok(TrojanKeyMux {
            width,
            rom,
            select: 0,
            enable: false,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rom(&self) -> &[LockKey] {
        &self.rom
    }

    pub fn select(&self) -> u16 {
        self.select
    }

    pub fn enabled(&self) -> bool {
        self.enable
    }

    /// Write the control register: address and enable flag.
    pub fn configure(&mut self, select: u16, enable: bool) -> Result<()> {
        check_address(select, self.rom.len(), enable)?;
        self.select = select;
        self.enable = enable;
        Ok(())
    }

    /// Key currently presented to the locked design.
    pub fn output(&self, original: &LockKey) -> Result<LockKey> {
        trojan_select(
            self,
            if self.enable { Some(self.select) } else { None },
            original,
        )
    }

    /// One ROM key per line, hex as in the key file; line `n` is address `n`.
    pub fn parse_rom(text: &str, width: usize) -> Result<Vec<LockKey>> {
        let lines: Vec<&str> = text
            .strip_suffix('\n')
            .unwrap_or(text)
            .split('\n')
            .collect();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        lines
            .iter()
            .enumerate()
            .map(|(addr, l)| {
                LockKey::from_hex(width, l.trim_end_matches('\r')).map_err(|e| {
                    LockingError::RomFormat {
                        address: addr,
                        message: e.to_string(),
                    }
                })
            })
            .collect()
    }

    pub fn rom_to_text(rom: &[LockKey]) -> String {
        rom.iter().map(|k| k.to_hex() + "\n").collect()
    }
}

fn check_address(address: u16, len: usize, enable: bool) -> Result<()> {
    if address >= 1 << ADDRESS_BITS {
        return Err(LockingError::AddressOutOfRange {
            address: address as usize,
            len,
        });
    }
    if enable && address as usize >= len {
        return Err(LockingError::AddressOutOfRange {
            address: address as usize,
            len,
        });
    }
    Ok(())
}

/// Pure read of the multiplexer: `None` models a cleared enable flag and
/// returns `original`; `Some(address)` returns the ROM entry.
pub fn trojan_select(
    mux: &TrojanKeyMux,
    address: Option<u16>,
    original: &LockKey,
) -> Result<LockKey> {
    if original.width() != mux.width {
        return Err(LockingError::WidthMismatch {
            expected: mux.width,
            found: original.width(),
        });
    }
    match address {
        None => Ok(original.clone()),
        Some(a) => {
            check_address(a, mux.rom.len(), true)?;
            Ok(mux.rom[a as usize].clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rom(n: usize) -> Vec<LockKey> {
        (0..n)
            .map(|i| {
                let mut k = LockKey::zeros(16).unwrap();
                for b in 0..10 {
                    k.set_bit(b, (i >> b) & 1 == 1).unwrap();
                }
                k
            })
            .collect()
    }

    #[test]
    fn disabled_is_transparent() {
        let mut mux = TrojanKeyMux::new(16, rom(4)).unwrap();
        let orig = LockKey::from_hex(16, "beef").unwrap();
        for a in [0u16, 3, 1023] {
            assert_eq!(trojan_select(&mux, None, &orig).unwrap(), orig);
            mux.configure(a, false).unwrap();
            assert_eq!(mux.output(&orig).unwrap(), orig);
        }
    }

    #[test]
    fn enabled_reads_rom() {
        let mut mux = TrojanKeyMux::new(16, rom(ROM_CAPACITY)).unwrap();
        let orig = LockKey::zeros(16).unwrap();
        assert_eq!(trojan_select(&mux, Some(5), &orig).unwrap(), rom(6)[5]);
        mux.configure(1023, true).unwrap();
        assert_eq!(mux.output(&orig).unwrap(), rom(1024)[1023]);
        assert!(mux.configure(1024, true).is_err());
    }

    #[test]
    fn bounds_and_shapes() {
        let mux = TrojanKeyMux::new(16, rom(4)).unwrap();
        let orig = LockKey::zeros(16).unwrap();
        assert!(matches!(
            trojan_select(&mux, Some(4), &orig),
            Err(LockingError::AddressOutOfRange { address: 4, len: 4 })
        ));
        assert!(trojan_select(&mux, Some(1023), &orig).is_err());
        assert!(TrojanKeyMux::new(16, rom(ROM_CAPACITY + 1)).is_err());
        assert!(TrojanKeyMux::new(8, rom(2)).is_err());
        assert!(trojan_select(&mux, None, &LockKey::zeros(8).unwrap()).is_err());
    }

    #[test]
    fn rom_file_round_trip() {
        let r = rom(3);
        let text = TrojanKeyMux::rom_to_text(&r);
        assert_eq!(text, "0000\n0001\n0002\n");
        assert_eq!(TrojanKeyMux::parse_rom(&text, 16).unwrap(), r);
        assert!(matches!(
            TrojanKeyMux::parse_rom("0000\nzzzz\n", 16),
            Err(LockingError::RomFormat { address: 1, .. })
        ));
    }
}
