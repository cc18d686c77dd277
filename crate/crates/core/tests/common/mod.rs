//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lockfault::chacha::ChaChaKey;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_key(r: &mut impl Rng) -> ChaChaKey {
    ChaChaKey(r.gen())
}

/// Table-driven RVC disassembler for the supported subset, written from the
/// encoding tables only. Returns `None` for anything outside the subset.
pub mod disasm {
    #[derive(Clone, Copy)]
    enum Format {
        /// rd' at 9:7, rs2' at 4:2.
        Ca,
        /// rd at 11:7, signed imm at 12|6:2.
        CiImm,
        /// rd at 11:7, shamt at 12|6:2.
        CiShift,
        /// rd' at 9:7, shamt at 12|6:2.
        CbShift,
        /// rd' at 9:7, signed imm at 12|6:2.
        CbImm,
        /// rd at 11:7, rs2 at 6:2.
        Cr,
    }

    const TABLE: &[(u16, u16, &str, Format)] = &[
        (0xFC63, 0x8C01, "c.sub", Format::Ca),
        (0xFC63, 0x8C21, "c.xor", Format::Ca),
        (0xFC63, 0x8C41, "c.or", Format::Ca),
        (0xFC63, 0x8C61, "c.and", Format::Ca),
        (0xE003, 0x4001, "c.li", Format::CiImm),
        (0xE003, 0x0002, "c.slli", Format::CiShift),
        (0xEC03, 0x8001, "c.srli", Format::CbShift),
        (0xEC03, 0x8801, "c.andi", Format::CbImm),
        (0xF003, 0x8002, "c.mv", Format::Cr),
        (0xF003, 0x9002, "c.add", Format::Cr),
    ];

    fn field(w: u16, hi: u32, lo: u32) -> u32 {
        (w as u32 >> lo) & ((1 << (hi - lo + 1)) - 1)
    }

    fn six(w: u16) -> u32 {
        field(w, 12, 12) << 5 | field(w, 6, 2)
    }

    fn signed6(v: u32) -> i32 {
        if v & 0x20 != 0 {
            v as i32 - 64
        } else {
            v as i32
        }
    }

    /// Registers of the 16-entry file; x0 is not a valid destination.
    fn full(r: u32) -> Option<u32> {
        (1..16).contains(&r).then_some(r)
    }

    pub fn disassemble(w: u16) -> Option<String> {
        let &(_, _, name, fmt) = TABLE.iter().find(|(mask, m, _, _)| w & mask == *m)?;
        let rdp = 8 + field(w, 9, 7);
        Some(match fmt {
            Format::Ca => format!("{name} x{rdp}, x{}", 8 + field(w, 4, 2)),
            Format::CiImm => format!("{name} x{}, {}", full(field(w, 11, 7))?, signed6(six(w))),
            Format::CiShift => {
                let rd = full(field(w, 11, 7))?;
                let sh = six(w);
                if sh == 0 || sh > 31 {
                    return None;
                }
                format!("{name} x{rd}, {sh}")
            }
            Format::CbShift => {
                let sh = six(w);
                if sh == 0 || sh > 31 {
                    return None;
                }
                format!("{name} x{rdp}, {sh}")
            }
            Format::CbImm => format!("{name} x{rdp}, {}", signed6(six(w))),
            Format::Cr => format!(
                "{name} x{}, x{}",
                full(field(w, 11, 7))?,
                full(field(w, 6, 2))?
            ),
        })
    }
}
