use std::sync::OnceLock;

use thiserror::Error;

use crate::chacha::QuarterRound;

use super::{decode, CompressedInstr, DecodedInstr, KeyGateMask, RvcError};

/// Fixture: one ChaCha quarter round, a..d in x10..x13.
pub const QUARTER_ROUND_FIXTURE: &str = include_str!("../../fixtures/quarter_round.rvc");

/// Fixture: boot self-test used as the "does the core still boot" check.
pub const BOOT_FIXTURE: &str = include_str!("../../fixtures/boot_check.rvc");

/// Upper bound on executed instructions per program run.
pub const STEP_LIMIT: usize = 64;

/// Architectural state of the 16-register profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CoreState {
    regs: [u32; 16],
}

impl CoreState {
    pub fn reg(&self, r: u8) -> u32 {
        self.regs[r as usize]
    }

    /// Writes to x0 are discarded.
    pub fn set_reg(&mut self, r: u8, v: u32) {
        if r != 0 {
            self.regs[r as usize] = v;
        }
    }

    pub fn regs(&self) -> &[u32; 16] {
        &self.regs
    }
}

/// Illegal instruction reached during execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal instruction {word:#06x} at index {pc}")]
pub struct Trap {
    pub pc: usize,
    pub word: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Trap(#[from] Trap),
    #[error("program exceeds the {0}-step bound")]
    FuelExhausted(usize),
}

/// Execute one decoded instruction. `Illegal` yields a trap with `pc` 0;
/// callers that track a program counter fill it in.
pub fn step(s: &CoreState, d: &DecodedInstr) -> Result<CoreState, Trap> {
    use DecodedInstr::*;
    let mut n = *s;
    match *d {
        Sub { rd, rs2 } => n.set_reg(rd, s.reg(rd).wrapping_sub(s.reg(rs2))),
        Xor { rd, rs2 } => n.set_reg(rd, s.reg(rd) ^ s.reg(rs2)),
        Or { rd, rs2 } => n.set_reg(rd, s.reg(rd) | s.reg(rs2)),
        And { rd, rs2 } => n.set_reg(rd, s.reg(rd) & s.reg(rs2)),
        Add { rd, rs2 } => n.set_reg(rd, s.reg(rd).wrapping_add(s.reg(rs2))),
        Mv { rd, rs2 } => n.set_reg(rd, s.reg(rs2)),
        Li { rd, imm } => n.set_reg(rd, imm as i32 as u32),
        Slli { rd, shamt } => n.set_reg(rd, s.reg(rd) << shamt),
        Srli { rd, shamt } => n.set_reg(rd, s.reg(rd) >> shamt),
        Andi { rd, imm } => n.set_reg(rd, s.reg(rd) & imm as i32 as u32),
        Illegal => return Err(Trap { pc: 0, word: 0 }),
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub words: Vec<CompressedInstr>,
}

/// Parse `<hex16>  # <mnemonic>` lines. Lines that are only comments are
/// skipped.
pub fn parse_program(text: &str) -> Result<Program, RvcError> {
    let mut words = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("").trim();
        if code.is_empty() {
            continue;
        }
        let err = |message: String| RvcError::Fixture {
            line: i + 1,
            message,
        };
        if code.len() != 4 {
            return Err(err(format!("expected 4 hex digits, got `{code}`")));
        }
        let w = u16::from_str_radix(code, 16).map_err(|e| err(e.to_string()))?;
        words.push(CompressedInstr::new(w).map_err(|e| err(e.to_string()))?);
    }
    Ok(Program { words })
}

impl Program {
    /// The bundled quarter-round program.
    pub fn quarter_round() -> &'static Program {
        static PROGRAM: OnceLock<Program> = OnceLock::new();
        PROGRAM
            .get_or_init(|| parse_program(QUARTER_ROUND_FIXTURE).expect("bundled fixture parses"))
    }

    /// The bundled boot self-test. It uses no CA-group instruction.
    pub fn boot_check() -> &'static Program {
        static PROGRAM: OnceLock<Program> = OnceLock::new();
        PROGRAM.get_or_init(|| parse_program(BOOT_FIXTURE).expect("bundled fixture parses"))
    }

    /// Run straight-line code, asking `mask_for` for the fault seen by each
    /// fetched word.
    pub fn run(
        &self,
        mut s: CoreState,
        mut mask_for: impl FnMut(u16) -> KeyGateMask,
    ) -> Result<CoreState, RunError> {
        if self.words.len() > STEP_LIMIT {
            return Err(RunError::FuelExhausted(STEP_LIMIT));
        }
        for (pc, &w) in self.words.iter().enumerate() {
            let d = decode(w, mask_for(w.word()));
            s = step(&s, &d).map_err(|_| Trap { pc, word: w.word() })?;
        }
        Ok(s)
    }
}

/// Run the boot self-test from zeroed registers. `true` when it completes
/// with the same register file as on a fault-free decoder.
pub fn boots(mask_for: impl FnMut(u16) -> KeyGateMask) -> bool {
    static CLEAN: OnceLock<CoreState> = OnceLock::new();
    let clean = CLEAN.get_or_init(|| {
        Program::boot_check()
            .run(CoreState::default(), |_| KeyGateMask::ZERO)
            .expect("boot self-test runs clean")
    });
    Program::boot_check()
        .run(CoreState::default(), mask_for)
        .as_ref()
        == Ok(clean)
}

/// Quarter round through the interpreter with one mask on every fetch.
pub fn run_quarter_round(
    a: u32,
    b: u32,
    c: u32,
    d: u32,
    m: KeyGateMask,
) -> Result<[u32; 4], RunError> {
    run_quarter_round_with([a, b, c, d], |_| m)
}

pub fn run_quarter_round_with(
    w: [u32; 4],
    mask_for: impl FnMut(u16) -> KeyGateMask,
) -> Result<[u32; 4], RunError> {
    let mut s = CoreState::default();
    for (i, v) in w.into_iter().enumerate() {
        s.set_reg(10 + i as u8, v);
    }
    let s = Program::quarter_round().run(s, mask_for)?;
    Ok([s.reg(10), s.reg(11), s.reg(12), s.reg(13)])
}

/// [`QuarterRound`] engine backed by the interpreter and a per-word mask.
pub struct Interpreted<F> {
    mask_for: F,
}

impl Interpreted<Box<dyn FnMut(u16) -> KeyGateMask>> {
    pub fn with_mask(m: KeyGateMask) -> Self {
        Interpreted {
            mask_for: Box::new(move |_| m),
        }
    }
}

impl<F: FnMut(u16) -> KeyGateMask> Interpreted<F> {
    pub fn new(mask_for: F) -> Self {
        Interpreted { mask_for }
    }
}

impl<F: FnMut(u16) -> KeyGateMask> QuarterRound for Interpreted<F> {
    type Error = RunError;

    fn quarter_round(&mut self, w: [u32; 4]) -> Result<[u32; 4], RunError> {
        run_quarter_round_with(w, &mut self.mask_for)
    }
}
