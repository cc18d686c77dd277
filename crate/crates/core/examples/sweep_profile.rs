//! Flip every key bit of the bundled decoder profile's compressed-decoder
//! segment and classify the ChaCha output.

use lockfault::chacha::{ChaChaKey, Layout};
use lockfault::leakage::Category;
use lockfault::profile::{DecoderProfile, MaskDeriver, RVC_SEGMENT};
use lockfault::sweep::{run_sweep, ChaChaTarget};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = DecoderProfile::bundled();
    let key = ChaChaKey([
        0x9e3779b9, 0x7f4a7c15, 0xf39cc060, 0x5cedc834, 0x2e0b6c2a, 0xd6e6a0f8, 0x1b873593,
        0xcc9e2d51,
    ]);
    let target = ChaChaTarget::new(
        MaskDeriver::new(&profile.rvc.netlist)?,
        &key,
        &[0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344],
        &[1, 0, 0, 0],
        Layout::NonceFirst,
        vec![0; 64],
    )?;
    let bits: Vec<usize> = RVC_SEGMENT.collect();
    let report = run_sweep(&target, &profile.key, &bits, true)?;
    print!("{}", report.summary());
    for b in report
        .per_bit
        .iter()
        .filter(|b| b.category == Category::Leak)
    {
        let l = b.leak.as_ref().unwrap();
        let m = b.mask.as_ref().unwrap();
        println!(
            "  bit {:>3}: {:>5.1}% of key, logic mask {}",
            b.bit,
            100.0 * l.fraction(),
            m.logic
        );
    }
    println!(
        "funct2-coupled bits from the netlist: {:?}",
        profile.funct2_bits()
    );
    Ok(())
}
