//! Command implementations behind the `lockfault` binary. Every command
//! writes human-readable output to `out` and returns a process exit code:
//! 0 success, 1 analysis-negative (a counterexample where equivalence was
//! expected), 2 usage or I/O error (surfaced as [`CliError`]).

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::chacha::{
    encrypt_with, init_state, keystream_block, permute, rotl, ChaChaError, ChaChaKey, ChaChaState,
    FaultSpec, Layout,
};
use crate::leakage::{classify_with_leak, scan_leak, Category, LeakageError};
use crate::locking::{lock, LockKey, LockOptions, LockingError, TrojanKeyMux, ADDRESS_BITS};
use crate::netlist::{
    equivalence_check, parse, serialize, Assignment, EquivalenceMode, NetlistError, Verdict,
    EXHAUSTIVE_LIMIT,
};
use crate::profile::{DecoderProfile, ProfileError};
use crate::rvc::{Interpreted, KeyGateMask};
use crate::sweep::{load_target, sweep_from_config, SweepConfig, SweepError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Vectors used by `verify` when the design is too wide for exhaustion.
pub const SAMPLED_VECTORS: u64 = 100_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: NetlistError,
    },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Locking(#[from] LockingError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Leakage(#[from] LeakageError),
    #[error(transparent)]
    ChaCha(#[from] ChaChaError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

fn load_netlist(path: &Path) -> Result<crate::netlist::Netlist, CliError> {
    parse(&read(path)?).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct LockArgs {
    pub input: PathBuf,
    pub count: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub key_out: PathBuf,
    pub plan_out: PathBuf,
    /// First key index; default 0.
    pub key_offset: usize,
    /// Key width; default `key_offset + count`.
    pub key_width: Option<usize>,
}

pub fn cmd_lock(a: &LockArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let n = load_netlist(&a.input)?;
    let locked = lock(
        &n,
        LockOptions {
            count: a.count,
            seed: a.seed,
            key_offset: a.key_offset,
            key_width: a.key_width.unwrap_or(a.key_offset + a.count),
        },
    )?;
    write_file(&a.output, &serialize(&locked.netlist))?;
    write_file(&a.key_out, &locked.key.to_file_string())?;
    write_file(&a.plan_out, &locked.plan.to_text())?;
    writeln!(
        out,
        "locked {}: {} key gates, {} gates total, key width {}",
        n.name(),
        locked.plan.records.len(),
        locked.netlist.gates().len(),
        locked.key.width()
    )?;
    writeln!(out, "  netlist {}", a.output.display())?;
    writeln!(out, "  key     {}", a.key_out.display())?;
    writeln!(out, "  plan    {}", a.plan_out.display())?;
    Ok(EXIT_OK)
}

fn fmt_assignment(a: &Assignment) -> String {
    a.iter()
        .map(|(n, b)| format!("{n}={}", b as u8))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Equivalence of `original` against `locked` under the key in `key_file`.
pub fn cmd_verify(
    original: &Path,
    locked: &Path,
    key_file: &Path,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let a = load_netlist(original)?;
    let b = load_netlist(locked)?;
    let key = LockKey::parse_file(&read(key_file)?)?;
    let key_b = key.assignment_for(&b)?;
    let width = a.primary_inputs().len();
    let mode = if width <= EXHAUSTIVE_LIMIT {
        EquivalenceMode::Exhaustive
    } else {
        EquivalenceMode::Sampled {
            count: SAMPLED_VECTORS,
            seed: 0,
        }
    };
    let how = match mode {
        EquivalenceMode::Exhaustive => format!("exhaustive, 2^{width} vectors"),
        EquivalenceMode::Sampled { count, .. } => format!("sampled, {count} vectors"),
    };
    match equivalence_check(&a, &b, &Assignment::new(), &key_b, mode)? {
        Verdict::Equivalent => {
            writeln!(out, "equivalent ({how})")?;
            Ok(EXIT_OK)
        }
        Verdict::Counterexample {
            inputs,
            out_a,
            out_b,
        } => {
            writeln!(out, "counterexample ({how})")?;
            writeln!(out, "  inputs   {}", fmt_assignment(&inputs))?;
            writeln!(out, "  original {}", fmt_assignment(&out_a))?;
            writeln!(out, "  locked   {}", fmt_assignment(&out_b))?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

/// Run a configured sweep, write the JSON report and print the summary.
pub fn cmd_sweep(config: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = SweepConfig::load(config).map_err(SweepError::from)?;
    let report = sweep_from_config(&cfg)?;
    if let Some(p) = &cfg.report_path {
        write_file(p, &report.to_json())?;
    }
    write!(out, "{}", report.summary())?;
    let leaks: Vec<String> = report
        .per_bit
        .iter()
        .filter_map(|b| {
            b.leak
                .as_ref()
                .filter(|_| b.category == Category::Leak)
                .map(|l| (b.bit, l))
        })
        .map(|(bit, l)| format!("{bit} ({:.3})", l.fraction()))
        .collect();
    if !leaks.is_empty() {
        writeln!(out, "leaking bits: {}", leaks.join(", "))?;
    }
    if let Some(p) = &cfg.report_path {
        writeln!(out, "report written to {}", p.display())?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone)]
pub struct TrojanArgs {
    pub rom: PathBuf,
    pub address: u16,
    pub enable: bool,
    pub config: PathBuf,
}

/// Run the target under the Trojan-selected key, then under the original
/// key, and compare.
pub fn cmd_trojan(a: &TrojanArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if a.address >= 1 << ADDRESS_BITS {
        return Err(CliError::Usage(format!(
            "address {} does not fit in {ADDRESS_BITS} bits",
            a.address
        )));
    }
    let cfg = SweepConfig::load(&a.config).map_err(SweepError::from)?;
    let (target, original) = load_target(&cfg)?;
    let rom = TrojanKeyMux::parse_rom(&read(&a.rom)?, original.width())?;
    let mut mux = TrojanKeyMux::new(original.width(), rom)?;
    mux.configure(a.address, a.enable)?;
    let selected = mux.output(&original)?;

    let baseline = target.run(&original);
    let attacked = target.run(&selected);
    writeln!(
        out,
        "trojan {} (address {}), selected key differs in {} bits",
        if a.enable { "enabled" } else { "disabled" },
        a.address,
        selected.hamming_distance(&original)
    )?;
    writeln!(
        out,
        "original key output: {}",
        hex::encode(&baseline.output)
    )?;
    writeln!(
        out,
        "trojan key output:   {}",
        hex::encode(&attacked.output)
    )?;
    let secret = target.secret().unwrap_or(&[]);
    let (cat, leak) = classify_with_leak(&baseline, &attacked, secret)?;
    match leak.filter(|_| cat == Category::Leak) {
        Some(l) => writeln!(
            out,
            "verdict: {} (fraction {:.3}, {})",
            cat.as_str(),
            l.fraction(),
            l.matched_transform.as_str()
        )?,
        None => writeln!(out, "verdict: {}", cat.as_str())?,
    }
    // Disabling the Trojan hands the original key back to the design.
    mux.configure(a.address, false)?;
    let restored = target.run(&mux.output(&original)?);
    let (cat, _) = classify_with_leak(&baseline, &restored, secret)?;
    writeln!(out, "after disabling: {}", cat.as_str())?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone)]
pub struct DemoArgs {
    pub key: ChaChaKey,
    pub nonce: Vec<u32>,
    pub counter: Vec<u32>,
    pub layout: Layout,
}

fn write_matrix(out: &mut dyn Write, title: &str, m: &[u32; 16]) -> std::io::Result<()> {
    writeln!(out, "{title}")?;
    for row in m.chunks(4) {
        let cells: Vec<String> = row.iter().map(|w| format!("{w:#010x}")).collect();
        writeln!(out, "  {}", cells.join("  "))?;
    }
    Ok(())
}

/// The OR-to-AND walk-through: initial matrix, rotation collapse, mixed
/// matrix, keystream and the key recovered from it.
pub fn cmd_chacha_demo(a: &DemoArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let s0: ChaChaState = init_state(&a.key, &a.nonce, &a.counter, a.layout)?;
    let fault = FaultSpec::OrToAnd;
    write_matrix(out, "initial matrix", &s0.m)?;

    writeln!(out, "\nrotation of p = 0x12345678")?;
    writeln!(
        out,
        "  {:>4}  {:>10}  {:>10}  {:>10}  {:>10}",
        "n", "p << n", "p >> 32-n", "a | b", "a & b"
    )?;
    let p = 0x1234_5678u32;
    for n in [16, 12, 8, 7] {
        writeln!(
            out,
            "  {n:>4}  {:#010x}  {:#010x}  {:#010x}  {:#010x}",
            p << n,
            p >> (32 - n),
            rotl(p, n, &FaultSpec::None)?,
            rotl(p, n, &fault)?
        )?;
    }

    let mixed = permute(&s0, &fault);
    write_matrix(
        out,
        "\nmatrix after 20 rounds, c.or read as c.and",
        &mixed.m,
    )?;
    let ks = keystream_block(&s0, &fault);
    write_matrix(out, "\nfaulted keystream (mixed + initial)", &ks)?;

    // Same block through the interpreter with the funct2 key gate flipped.
    let mut q = Interpreted::with_mask(KeyGateMask::logic_path(0x20));
    let ct = encrypt_with(&s0, &[0; 64], &mut q).map_err(|e| CliError::Usage(e.to_string()))?;
    let same = ct == crate::chacha::serialize_block(&ks);
    writeln!(
        out,
        "\ninterpreter with bit-5 decoder fault agrees: {}",
        if same { "yes" } else { "no" }
    )?;

    let finding = scan_leak(&ct, &a.key.to_bytes())?;
    writeln!(
        out,
        "key exposed in zero-plaintext ciphertext: {:.1}%",
        100.0 * finding.fraction()
    )?;
    let candidates = crate::leakage::recover_key(&ct, &[0; 64])?;
    writeln!(
        out,
        "recovered {} candidate keys, true key among them: {}",
        candidates.len(),
        if candidates.contains(&a.key) {
            "yes"
        } else {
            "no"
        }
    )?;
    let clean = keystream_block(&s0, &FaultSpec::None);
    write_matrix(out, "\nclean keystream", &clean)?;
    Ok(EXIT_OK)
}

/// Write the bundled decoder profile: both locked front ends, their plans
/// and the full 1024-bit key.
pub fn cmd_profile(dir: &Path, seed: u64, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = DecoderProfile::build(seed)?;
    let files = [
        ("rvc_front.locked.net", serialize(&p.rvc.netlist)),
        ("rvc_front.plan", p.rvc.plan.to_text()),
        ("dec32_front.locked.net", serialize(&p.dec32.netlist)),
        ("dec32_front.plan", p.dec32.plan.to_text()),
        ("profile.key", p.key.to_file_string()),
    ];
    for (name, text) in &files {
        write_file(&dir.join(name), text)?;
        writeln!(out, "wrote {}", dir.join(name).display())?;
    }
    writeln!(out, "funct2-coupled key bits: {:?}", p.funct2_bits())?;
    Ok(EXIT_OK)
}
