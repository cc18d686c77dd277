//! Single-bit key sweep over a locked toy circuit driven by random vectors.

use lockfault::circuits;
use lockfault::locking::insert_key_gates;
use lockfault::sweep::{bits_to_sweep, run_sweep, NetlistTarget};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = circuits::load("mult4").unwrap();
    let locked = insert_key_gates(&n, 32, 11)?;
    let target = NetlistTarget::new(&locked.netlist, 256, 5)?;
    let bits = bits_to_sweep(&target, locked.key.width(), None)?;
    let report = run_sweep(&target, &locked.key, &bits, false)?;
    print!("{}", report.summary());
    let quiet = report.bits_in(lockfault::leakage::Category::Unchanged);
    if !quiet.is_empty() {
        println!("bits with no effect on 256 vectors: {quiet:?}");
    }
    Ok(())
}
