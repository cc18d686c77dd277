//! Compose two locked modules so that the second one's key gates depend on
//! the first one being unlocked.

use lockfault::circuits;
use lockfault::locking::interlock;
use lockfault::netlist::{equivalence_check, Assignment, EquivalenceMode, Netlist};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m0 = circuits::load("cmp4").unwrap();
    let m1 = circuits::load("mux4").unwrap();
    let il = interlock(&[(m0.clone(), 6), (m1.clone(), 6)], 2024)?;
    println!(
        "{}: {} inputs, {} key bits, {} gates",
        il.netlist.name(),
        il.netlist.primary_inputs().len(),
        il.key.width(),
        il.netlist.gates().len()
    );
    for l in &il.links {
        println!(
            "  key bit {} of module {} also sees tap {}",
            l.key_index, l.module, l.tap_net
        );
    }

    let reference =
        Netlist::disjoint_union(il.netlist.name(), &[(m0.name(), &m0), (m1.name(), &m1)])?;
    let none = Assignment::new();
    let key = il.key.assignment_for(&il.netlist)?;
    let v = equivalence_check(
        &reference,
        &il.netlist,
        &none,
        &key,
        EquivalenceMode::Exhaustive,
    )?;
    println!(
        "composite key: {}",
        if v.is_equivalent() {
            "equivalent to the originals"
        } else {
            "BROKEN"
        }
    );

    // Corrupt module 0's key bits one at a time and see whether module 1's
    // outputs move too.
    let m1_outputs: Vec<String> = m1
        .primary_outputs()
        .iter()
        .map(|o| format!("{}.{o}", m1.name()))
        .collect();
    let c = il.netlist.compile();
    let golden = reference.compile();
    let pis = c.inputs().len();
    for bit in &il.plans[0].records {
        let wrong = il.key.flip_key_bit(bit.key_index)?;
        let key_bits = wrong.assignment_for(&il.netlist)?.bits_for(c.keys());
        let witness = (0u64..1 << pis).find(|x| {
            let pi: Vec<bool> = (0..pis).map(|i| x >> i & 1 == 1).collect();
            let got = c.eval_bits(&pi, &key_bits);
            let want = golden.eval_bits(&pi, &[]);
            c.outputs()
                .iter()
                .zip(got.iter().zip(&want))
                .any(|(name, (g, w))| g != w && m1_outputs.contains(name))
        });
        match witness {
            Some(x) => println!(
                "  flipping bit {:>2} also disturbs {} (input {x:#06x})",
                bit.key_index,
                m1.name()
            ),
            None => println!(
                "  flipping bit {:>2} leaves {} intact",
                bit.key_index,
                m1.name()
            ),
        }
    }
    Ok(())
}
