mod common;

use std::collections::HashSet;

use rand::Rng;

use lockfault::circuits;
use lockfault::locking::{
    insert_key_gates, interlock, interlock_with, lock, lockable_sites, KeyGateKind, KeyGateRecord,
    LockKey, LockOptions, LockingPlan,
};
use lockfault::netlist::{equivalence_check, serialize, Assignment, EquivalenceMode, Netlist};

fn equivalent(orig: &Netlist, locked: &Netlist, key: &LockKey) -> bool {
    let k = key.assignment_for(locked).unwrap();
    equivalence_check(
        orig,
        locked,
        &Assignment::new(),
        &k,
        EquivalenceMode::Exhaustive,
    )
    .unwrap()
    .is_equivalent()
}

#[test]
fn correct_key_preserves_function() {
    let mut r = common::rng(7);
    for n in circuits::all() {
        let max = lockable_sites(&n).len().min(128);
        for seed in 0..100 {
            let count = r.gen_range(1..=max);
            let l = insert_key_gates(&n, count, seed).unwrap();
            assert_eq!(l.plan.records.len(), count);
            assert_eq!(l.key.width(), count);
            assert!(
                equivalent(&n, &l.netlist, &l.key),
                "{} seed {seed} count {count}",
                n.name()
            );
        }
    }
}

#[test]
fn each_key_bit_is_observable() {
    // Circuits without redundant internal nets: inverting any gate output
    // changes some primary output.
    for name in ["c17", "full_adder", "adder4", "mux4", "mult4"] {
        let n = circuits::load(name).unwrap();
        let l = insert_key_gates(&n, lockable_sites(&n).len().min(16), 3).unwrap();
        for r in &l.plan.records {
            let wrong = l.key.flip_key_bit(r.key_index).unwrap();
            assert!(
                !equivalent(&n, &l.netlist, &wrong),
                "{name}: bit {} on {} is invisible",
                r.key_index,
                r.locked_net
            );
        }
    }
}

#[test]
fn camouflage_shapes_and_correct_bits() {
    let n = circuits::load("alu4").unwrap();
    let mut shapes = HashSet::new();
    for seed in 0..20 {
        let l = insert_key_gates(&n, 24, seed).unwrap();
        for r in &l.plan.records {
            assert_eq!(
                r.correct_bit,
                KeyGateRecord::correct_bit_for(r.gate_kind, r.inverter_appended)
            );
            assert_eq!(l.key.bit(r.key_index).unwrap(), r.correct_bit);
            shapes.insert((r.gate_kind, r.inverter_appended, r.correct_bit));
        }
    }
    // An XOR key gate and an XNOR followed by an inverter both want a 0.
    assert!(shapes.contains(&(KeyGateKind::Xor, false, false)));
    assert!(shapes.contains(&(KeyGateKind::Xnor, true, false)));
    assert!(shapes.contains(&(KeyGateKind::Xnor, false, true)));
    assert!(shapes.contains(&(KeyGateKind::Xor, true, true)));
}

#[test]
fn locking_is_deterministic() {
    for n in circuits::all() {
        let a = insert_key_gates(&n, 5, 99).unwrap();
        let b = insert_key_gates(&n, 5, 99).unwrap();
        assert_eq!(serialize(&a.netlist), serialize(&b.netlist));
        assert_eq!(a.plan.to_text(), b.plan.to_text());
        assert_eq!(a.key, b.key);
    }
    let n = circuits::load("mult4").unwrap();
    let a = insert_key_gates(&n, 8, 1).unwrap();
    let b = insert_key_gates(&n, 8, 2).unwrap();
    assert_ne!(serialize(&a.netlist), serialize(&b.netlist));
}

#[test]
fn plan_and_key_files_round_trip() {
    let n = circuits::load("cmp4").unwrap();
    let l = lock(
        &n,
        LockOptions {
            count: 10,
            seed: 5,
            key_offset: 20,
            key_width: 37,
        },
    )
    .unwrap();
    assert_eq!(LockingPlan::parse(&l.plan.to_text()).unwrap(), l.plan);
    assert_eq!(LockKey::parse_file(&l.key.to_file_string()).unwrap(), l.key);
    assert!(l
        .plan
        .records
        .iter()
        .all(|r| (20..30).contains(&r.key_index)));
    assert!(equivalent(&n, &l.netlist, &l.key));
}

#[test]
fn interlocked_composite_is_equivalent() {
    let mods = [
        (circuits::load("adder4").unwrap(), 6),
        (circuits::load("c17").unwrap(), 3),
        (circuits::load("dec3to8").unwrap(), 5),
    ];
    let parts: Vec<(&str, &Netlist)> = mods.iter().map(|(m, _)| (m.name(), m)).collect();
    let reference = Netlist::disjoint_union("ref", &parts).unwrap();
    for seed in 0..10 {
        let il = interlock(&mods, seed).unwrap();
        assert_eq!(il.key.width(), 14);
        assert!(!il.links.is_empty());
        let k = il.key.assignment_for(&il.netlist).unwrap();
        let v = equivalence_check(
            &reference,
            &il.netlist,
            &Assignment::new(),
            &k,
            EquivalenceMode::Exhaustive,
        )
        .unwrap();
        assert!(v.is_equivalent(), "seed {seed}");
    }
}

#[test]
fn interlock_couples_neighbouring_modules() {
    let m0 = circuits::load("cmp4").unwrap();
    let m1 = circuits::load("mux4").unwrap();
    let il = interlock_with(&[(m0.clone(), 6), (m1.clone(), 6)], 2024, 4).unwrap();
    let reference = Netlist::disjoint_union("ref", &[(m0.name(), &m0), (m1.name(), &m1)]).unwrap();
    let c = il.netlist.compile();
    let golden = reference.compile();
    let m1_out: Vec<usize> = c
        .outputs()
        .iter()
        .enumerate()
        .filter(|(_, o)| o.starts_with("mux4."))
        .map(|(i, _)| i)
        .collect();
    let golden_idx: Vec<usize> = m1_out
        .iter()
        .map(|&i| {
            golden
                .outputs()
                .iter()
                .position(|o| *o == c.outputs()[i])
                .unwrap()
        })
        .collect();
    let pis = c.inputs().len();
    assert!(golden.inputs() == c.inputs());
    // Some module-0 key bit, when wrong, disturbs module 1's outputs.
    let witness = il.plans[0].records.iter().any(|r| {
        let key = il.key.flip_key_bit(r.key_index).unwrap();
        let kb = key.assignment_for(&il.netlist).unwrap().bits_for(c.keys());
        (0u64..1 << pis).any(|x| {
            let pi: Vec<bool> = (0..pis).map(|i| x >> i & 1 == 1).collect();
            let got = c.eval_bits(&pi, &kb);
            let want = golden.eval_bits(&pi, &[]);
            m1_out
                .iter()
                .zip(&golden_idx)
                .any(|(&i, &j)| got[i] != want[j])
        })
    });
    assert!(witness);

    // Without chaining the modules are independent.
    let plain = interlock_with(&[(m0, 6), (m1, 6)], 2024, 0).unwrap();
    assert!(plain.links.is_empty());
}
