//! RV32 compressed-instruction decoder with key-gate fault masks.
//!
//! Only the handful of instructions a register-only ChaCha quarter round
//! needs are decoded; everything else is [`DecodedInstr::Illegal`]. The
//! register file is the 16-register (x0..x15) profile, so any encoding that
//! names x16..x31 is also illegal here.
//!
//! A [`KeyGateMask`] models wrong locking-key bits in the decoder front end
//! as XOR layers on instruction bit lines. `fetch` inverts bits of every
//! fetched word. `logic` inverts bits only on the decode path of the CA
//! arithmetic/logic group (`c.sub`, `c.xor`, `c.or`, `c.and`), i.e. after
//! the group has been selected from the `fetch`-masked word.

mod exec;

use std::fmt;

use thiserror::Error;

pub use exec::{
    boots, parse_program, run_quarter_round, run_quarter_round_with, step, CoreState, Interpreted,
    Program, RunError, Trap, BOOT_FIXTURE, QUARTER_ROUND_FIXTURE, STEP_LIMIT,
};

/// Bits of a CA-group word that a `logic` mask can reach: rd'/rs1'
/// (9:7), funct2 (6:5) and rs2' (4:2).
pub const CA_FIELD_BITS: u16 = 0x03FC;

/// Bit 5: funct2 low bit of the CA group, the only difference between
/// `c.or` and `c.and` (and between `c.sub` and `c.xor`).
pub const FUNCT2_LOW_BIT: u16 = 1 << 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RvcError {
    #[error("{0:#06x} is a 32-bit instruction (low bits 11)")]
    NotCompressed(u16),
    #[error("cannot encode {0}")]
    Unencodable(String),
    #[error("fixture line {line}: {message}")]
    Fixture { line: usize, message: String },
}

/// A 16-bit instruction word whose low two bits are not `11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompressedInstr(u16);

impl CompressedInstr {
    pub fn new(word: u16) -> Result<CompressedInstr, RvcError> {
        if word & 0b11 == 0b11 {
            Err(RvcError::NotCompressed(word))
        } else {
            Ok(CompressedInstr(word))
        }
    }

    pub fn word(self) -> u16 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct KeyGateMask {
    pub fetch: u16,
    pub logic: u16,
}

impl KeyGateMask {
    pub const ZERO: KeyGateMask = KeyGateMask { fetch: 0, logic: 0 };

    /// Inverts `mask` bits of every fetched word.
    pub fn uniform(mask: u16) -> KeyGateMask {
        KeyGateMask {
            fetch: mask,
            logic: 0,
        }
    }

    /// Inverts `mask` bits on the CA logic-group decode path only. Bits
    /// outside [`CA_FIELD_BITS`] are dropped.
    pub fn logic_path(mask: u16) -> KeyGateMask {
        KeyGateMask {
            fetch: 0,
            logic: mask & CA_FIELD_BITS,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.fetch == 0 && self.logic & CA_FIELD_BITS == 0
    }

    /// The word the decoder effectively sees.
    pub fn apply(&self, word: u16) -> u16 {
        let w = word ^ self.fetch;
        if is_ca_group(w) {
            w ^ (self.logic & CA_FIELD_BITS)
        } else {
            w
        }
    }
}

/// Quadrant 1, funct3 100, bits 12:10 = 011.
pub fn is_ca_group(word: u16) -> bool {
    word & 0xFC03 == 0x8C01
}

pub type Reg = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodedInstr {
    Sub { rd: Reg, rs2: Reg },
    Xor { rd: Reg, rs2: Reg },
    Or { rd: Reg, rs2: Reg },
    And { rd: Reg, rs2: Reg },
    Add { rd: Reg, rs2: Reg },
    Mv { rd: Reg, rs2: Reg },
    Li { rd: Reg, imm: i8 },
    Slli { rd: Reg, shamt: u8 },
    Srli { rd: Reg, shamt: u8 },
    Andi { rd: Reg, imm: i8 },
    Illegal,
}

impl fmt::Display for DecodedInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DecodedInstr::*;
        match *self {
            Sub { rd, rs2 } => write!(f, "c.sub x{rd}, x{rs2}"),
            Xor { rd, rs2 } => write!(f, "c.xor x{rd}, x{rs2}"),
            Or { rd, rs2 } => write!(f, "c.or x{rd}, x{rs2}"),
            And { rd, rs2 } => write!(f, "c.and x{rd}, x{rs2}"),
            Add { rd, rs2 } => write!(f, "c.add x{rd}, x{rs2}"),
            Mv { rd, rs2 } => write!(f, "c.mv x{rd}, x{rs2}"),
            Li { rd, imm } => write!(f, "c.li x{rd}, {imm}"),
            Slli { rd, shamt } => write!(f, "c.slli x{rd}, {shamt}"),
            Srli { rd, shamt } => write!(f, "c.srli x{rd}, {shamt}"),
            Andi { rd, imm } => write!(f, "c.andi x{rd}, {imm}"),
            Illegal => f.write_str("illegal"),
        }
    }
}

fn bits(w: u16, hi: u32, lo: u32) -> u16 {
    (w >> lo) & ((1 << (hi - lo + 1)) - 1)
}

/// x8..x15 from a 3-bit rd'/rs1'/rs2' field.
fn creg(field: u16) -> Reg {
    8 + field as Reg
}

/// Sign-extended 6-bit immediate from bit 12 and bits 6:2.
fn imm6(w: u16) -> i8 {
    let raw = (bits(w, 12, 12) << 5 | bits(w, 6, 2)) as i8;
    (raw << 2) >> 2
}

/// Decode `i` as seen through mask `m`.
pub fn decode(i: CompressedInstr, m: KeyGateMask) -> DecodedInstr {
    decode_word(m.apply(i.word()))
}

/// Decode a raw 16-bit word with no fault layer. 32-bit words are illegal.
pub fn decode_word(w: u16) -> DecodedInstr {
    use DecodedInstr::*;
    let funct3 = bits(w, 15, 13);
    let rd = bits(w, 11, 7) as Reg;
    let rs2 = bits(w, 6, 2) as Reg;
    let wide_reg = |r: Reg| r >= 16;
    match (bits(w, 1, 0), funct3) {
        (0b01, 0b010) => {
            if rd == 0 || wide_reg(rd) {
                Illegal
            } else {
                Li { rd, imm: imm6(w) }
            }
        }
        (0b01, 0b100) => {
            let rdp = creg(bits(w, 9, 7));
            match bits(w, 11, 10) {
                0b00 => {
                    let shamt = bits(w, 12, 12) << 5 | bits(w, 6, 2);
                    if shamt == 0 || shamt >= 32 {
                        Illegal
                    } else {
                        Srli {
                            rd: rdp,
                            shamt: shamt as u8,
                        }
                    }
                }
                0b10 => Andi {
                    rd: rdp,
                    imm: imm6(w),
                },
                0b11 if bits(w, 12, 12) == 0 => {
                    let rs2p = creg(bits(w, 4, 2));
                    match bits(w, 6, 5) {
                        0b00 => Sub { rd: rdp, rs2: rs2p },
                        0b01 => Xor { rd: rdp, rs2: rs2p },
                        0b10 => Or { rd: rdp, rs2: rs2p },
                        _ => And { rd: rdp, rs2: rs2p },
                    }
                }
                _ => Illegal,
            }
        }
        (0b10, 0b000) => {
            let shamt = bits(w, 12, 12) << 5 | bits(w, 6, 2);
            if rd == 0 || wide_reg(rd) || shamt == 0 || shamt >= 32 {
                Illegal
            } else {
                Slli {
                    rd,
                    shamt: shamt as u8,
                }
            }
        }
        (0b10, 0b100) => {
            if rd == 0 || rs2 == 0 || wide_reg(rd) || wide_reg(rs2) {
                Illegal
            } else if bits(w, 12, 12) == 0 {
                Mv { rd, rs2 }
            } else {
                Add { rd, rs2 }
            }
        }
        _ => Illegal,
    }
}

fn check_full(d: &DecodedInstr, r: Reg) -> Result<u16, RvcError> {
    if (1..16).contains(&r) {
        Ok(r as u16)
    } else {
        Err(RvcError::Unencodable(format!(
            "{d}: register x{r} outside x1..x15"
        )))
    }
}

fn check_compact(d: &DecodedInstr, r: Reg) -> Result<u16, RvcError> {
    if (8..16).contains(&r) {
        Ok((r - 8) as u16)
    } else {
        Err(RvcError::Unencodable(format!(
            "{d}: register x{r} outside x8..x15"
        )))
    }
}

fn check_imm(d: &DecodedInstr, imm: i8) -> Result<u16, RvcError> {
    if (-32..32).contains(&imm) {
        let v = (imm as u16) & 0x3F;
        Ok((v >> 5) << 12 | (v & 0x1F) << 2)
    } else {
        Err(RvcError::Unencodable(format!(
            "{d}: immediate out of 6-bit range"
        )))
    }
}

fn check_shamt(d: &DecodedInstr, s: u8) -> Result<u16, RvcError> {
    if (1..32).contains(&s) {
        Ok((s as u16) << 2)
    } else {
        Err(RvcError::Unencodable(format!(
            "{d}: shift amount must be 1..=31"
        )))
    }
}

pub fn encode(d: &DecodedInstr) -> Result<CompressedInstr, RvcError> {
    use DecodedInstr::*;
    let w = match *d {
        Sub { rd, rs2 } | Xor { rd, rs2 } | Or { rd, rs2 } | And { rd, rs2 } => {
            let funct2 = match d {
                Sub { .. } => 0b00,
                Xor { .. } => 0b01,
                Or { .. } => 0b10,
                _ => 0b11,
            };
            0x8C01 | check_compact(d, rd)? << 7 | funct2 << 5 | check_compact(d, rs2)? << 2
        }
        Add { rd, rs2 } => 0x9002 | check_full(d, rd)? << 7 | check_full(d, rs2)? << 2,
        Mv { rd, rs2 } => 0x8002 | check_full(d, rd)? << 7 | check_full(d, rs2)? << 2,
        Li { rd, imm } => 0x4001 | check_full(d, rd)? << 7 | check_imm(d, imm)?,
        Slli { rd, shamt } => 0x0002 | check_full(d, rd)? << 7 | check_shamt(d, shamt)?,
        Srli { rd, shamt } => 0x8001 | check_compact(d, rd)? << 7 | check_shamt(d, shamt)?,
        Andi { rd, imm } => 0x8801 | check_compact(d, rd)? << 7 | check_imm(d, imm)?,
        Illegal => return Err(RvcError::Unencodable("illegal".into())),
    };
    CompressedInstr::new(w)
}
