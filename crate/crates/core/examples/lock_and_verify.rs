//! Lock a bundled circuit, check it against the original under the correct
//! key, then show what a single wrong key bit does.
//!
//!     cargo run --example lock_and_verify -- [circuit] [count] [seed]

use lockfault::circuits;
use lockfault::locking::insert_key_gates;
use lockfault::netlist::{equivalence_check, serialize, Assignment, EquivalenceMode, Verdict};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("adder4", String::as_str);
    let count: usize = args.get(1).map_or(Ok(8), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(7), |s| s.parse())?;

    let original = circuits::load(name).ok_or_else(|| format!("no bundled circuit `{name}`"))?;
    let locked = insert_key_gates(&original, count, seed)?;
    println!(
        "{name}: {} gates -> {} gates, key {}",
        original.gates().len(),
        locked.netlist.gates().len(),
        locked.key.to_hex()
    );
    for r in &locked.plan.records {
        println!(
            "  bit {:>3}  {:<4} inv={}  correct={}  on {}",
            r.key_index,
            r.gate_kind.to_string(),
            r.inverter_appended as u8,
            r.correct_bit as u8,
            r.locked_net
        );
    }

    let none = Assignment::new();
    let key = locked.key.assignment_for(&locked.netlist)?;
    let v = equivalence_check(
        &original,
        &locked.netlist,
        &none,
        &key,
        EquivalenceMode::Exhaustive,
    )?;
    println!(
        "correct key: {}",
        if v.is_equivalent() {
            "equivalent"
        } else {
            "DIFFERENT"
        }
    );

    let wrong = locked
        .key
        .flip_key_bit(0)?
        .assignment_for(&locked.netlist)?;
    match equivalence_check(
        &original,
        &locked.netlist,
        &none,
        &wrong,
        EquivalenceMode::Exhaustive,
    )? {
        Verdict::Equivalent => println!("bit 0 flipped: no observable difference"),
        Verdict::Counterexample {
            inputs,
            out_a,
            out_b,
        } => {
            println!("bit 0 flipped: counterexample");
            println!("  inputs   {inputs}");
            println!("  original {out_a}");
            println!("  locked   {out_b}");
        }
    }

    if std::env::var_os("SHOW_NETLIST").is_some() {
        print!("{}", serialize(&locked.netlist));
    }
    Ok(())
}
