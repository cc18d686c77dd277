use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lockfault::cli::{self, CliError, DemoArgs, LockArgs, TrojanArgs, EXIT_USAGE};
use lockfault::profile::PROFILE_SEED;
use lockfault::sweep::{counter_words, parse_chacha_key, parse_layout, parse_nonce};

#[derive(Parser)]
#[command(
    name = "lockfault",
    version,
    about = "Logic-locking fault-injection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Insert XOR/XNOR key gates into a netlist.
    Lock {
        input: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 0)]
        key_offset: usize,
        #[arg(long)]
        key_width: Option<usize>,
    },
    /// Check a locked netlist against its original under a key.
    Verify {
        original: PathBuf,
        locked: PathBuf,
        key: PathBuf,
    },
    /// Flip each locking-key bit in turn and classify the target's output.
    Sweep { config: PathBuf },
    /// Run a target under a key chosen by the ROM Trojan.
    Trojan {
        #[arg(long)]
        rom: PathBuf,
        #[arg(long)]
        address: u16,
        #[arg(long)]
        enable: bool,
        #[arg(long)]
        config: PathBuf,
    },
    /// Walk through the OR-to-AND ChaCha fault for one key.
    ChachaDemo {
        /// 32-byte key as hex.
        #[arg(
            long,
            default_value = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"
        )]
        key: String,
        /// Nonce bytes as hex; zero when omitted.
        #[arg(long)]
        nonce: Option<String>,
        #[arg(long, default_value_t = 0)]
        counter: u128,
        #[arg(long, default_value = "nonce-first")]
        layout: String,
    },
    /// Write the bundled decoder profile (locked netlists, plans, key).
    Profile {
        dir: PathBuf,
        #[arg(long, default_value_t = PROFILE_SEED)]
        seed: u64,
    },
}

fn demo_args(
    key: &str,
    nonce: Option<&str>,
    counter: u128,
    layout: &str,
) -> Result<DemoArgs, CliError> {
    let usage = |e: lockfault::sweep::ConfigError| CliError::Usage(e.to_string());
    let layout = parse_layout(layout).map_err(usage)?;
    let nonce = match nonce {
        Some(n) => parse_nonce(n, layout).map_err(usage)?,
        None => vec![0; layout.shape().0],
    };
    Ok(DemoArgs {
        key: parse_chacha_key(key).map_err(usage)?,
        nonce,
        counter: counter_words(counter, layout).map_err(usage)?,
        layout,
    })
}

fn run(cmd: Cmd) -> Result<i32, CliError> {
    let out = &mut std::io::stdout().lock();
    match cmd {
        Cmd::Lock {
            input,
            count,
            seed,
            output,
            key,
            plan,
            key_offset,
            key_width,
        } => cli::cmd_lock(
            &LockArgs {
                input,
                count,
                seed,
                output,
                key_out: key,
                plan_out: plan,
                key_offset,
                key_width,
            },
            out,
        ),
        Cmd::Verify {
            original,
            locked,
            key,
        } => cli::cmd_verify(&original, &locked, &key, out),
        Cmd::Sweep { config } => cli::cmd_sweep(&config, out),
        Cmd::Trojan {
            rom,
            address,
            enable,
            config,
        } => cli::cmd_trojan(
            &TrojanArgs {
                rom,
                address,
                enable,
                config,
            },
            out,
        ),
        Cmd::ChachaDemo {
            key,
            nonce,
            counter,
            layout,
        } => cli::cmd_chacha_demo(&demo_args(&key, nonce.as_deref(), counter, &layout)?, out),
        Cmd::Profile { dir, seed } => cli::cmd_profile(&dir, seed, out),
    }
}

fn main() -> ExitCode {
    let code = run(Cli::parse().cmd).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    });
    ExitCode::from(code as u8)
}
