//! A ROM of adversarial locking keys in front of the key register: enable
//! it to leak, disable it to restore the original behaviour.

use lockfault::chacha::{ChaChaKey, Layout};
use lockfault::leakage::classify_with_leak;
use lockfault::locking::{trojan_select, TrojanKeyMux};
use lockfault::profile::{DecoderProfile, MaskDeriver};
use lockfault::sweep::{ChaChaTarget, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = DecoderProfile::bundled();
    let attack_bit = p.funct2_bits()[0];
    let rom = vec![
        p.key.clone(),
        p.key.flip_key_bit(0)?,
        p.key.flip_key_bit(attack_bit)?,
        p.key.flip_key_bit(200)?,
    ];
    let mut mux = TrojanKeyMux::new(p.key.width(), rom)?;

    let target = ChaChaTarget::new(
        MaskDeriver::new(&p.rvc.netlist)?,
        &ChaChaKey(std::array::from_fn(|i| 0x1000_0001 * (i as u32 + 1))),
        &[0; 4],
        &[0; 4],
        Layout::NonceFirst,
        vec![0; 64],
    )?;
    let secret = target.secret().unwrap().to_vec();
    let baseline = target.run(&p.key);

    for address in 0..mux.rom().len() as u16 {
        mux.configure(address, true)?;
        let run = target.run(&mux.output(&p.key)?);
        let (cat, leak) = classify_with_leak(&baseline, &run, &secret)?;
        let frac = leak.map_or(String::new(), |l| {
            format!(" ({:.0}% of key)", 100.0 * l.fraction())
        });
        println!("address {address}: {}{frac}", cat.as_str());
    }

    mux.configure(2, false)?;
    let restored = target.run(&mux.output(&p.key)?);
    println!(
        "disabled: output identical to baseline: {}",
        restored == baseline
    );

    match trojan_select(&mux, Some(1023), &p.key) {
        Err(e) => println!("address 1023: {e}"),
        Ok(_) => println!("address 1023 accepted"),
    }
    Ok(())
}
