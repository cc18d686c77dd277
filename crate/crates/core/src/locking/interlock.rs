//! Cross-module key dependencies between locked modules.
//!
//! Each module is locked on its own key segment and the modules are placed
//! side by side (nets prefixed `<module>.`). Then, for every boundary
//! `i-1 -> i`, a few of module `i`'s key gates stop reading their key input
//! directly. Their feed becomes
//!
//! ```text
//! lolo_key_bit<k>  XOR  (tap  XOR  shadow(tap))
//! ```
//!
//! where `tap` is a primary output of the locked module `i-1` and
//! `shadow(tap)` is the same output computed by an unlocked copy of that
//! output's cone. Under the correct key for module `i-1` the two agree on
//! every input and the feed reduces to the key bit. A wrong key for module
//! `i-1` that corrupts `tap` on some input also inverts module `i`'s key
//! gate on that input.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::{Gate, GateKind, Netlist};

use super::insert::{lock, LockOptions, LockingPlan};
use super::key::{key_net_index, key_net_name, LockKey};
use super::{LockingError, Result};

pub const DEFAULT_CHAIN_BITS: usize = 4;

/// One chained key gate: module `module`'s gate on `key_index` is
/// additionally fed by output `tap_net` of module `module - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterlockLink {
    pub key_index: usize,
    pub module: usize,
    pub tap_net: String,
}

#[derive(Debug, Clone)]
pub struct Interlocked {
    pub netlist: Netlist,
    pub key: LockKey,
    pub plans: Vec<LockingPlan>,
    pub links: Vec<InterlockLink>,
}

pub fn interlock(modules: &[(Netlist, usize)], master_seed: u64) -> Result<Interlocked> {
    interlock_with(modules, master_seed, DEFAULT_CHAIN_BITS)
}

/// Lock every module, compose them and chain `chain_bits` key gates per
/// module boundary. Module `i` owns key indices starting at the sum of the
/// preceding counts.
pub fn interlock_with(
    modules: &[(Netlist, usize)],
    master_seed: u64,
    chain_bits: usize,
) -> Result<Interlocked> {
    if modules.len() < 2 {
        return Err(LockingError::TooFewModules(modules.len()));
    }
    let mut names = HashSet::new();
    for (m, _) in modules {
        if !names.insert(m.name()) {
            return Err(LockingError::NamespaceCollision(m.name().to_owned()));
        }
    }

    let width: usize = modules.iter().map(|(_, c)| c).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut key = LockKey::zeros(width.max(1))?;
    let mut plans = Vec::with_capacity(modules.len());
    let mut locked = Vec::with_capacity(modules.len());
    let mut offset = 0;
    for (m, count) in modules {
        let l = lock(
            m,
            LockOptions {
                count: *count,
                seed: rng.next_u64(),
                key_offset: offset,
                key_width: width,
            },
        )?;
        for r in &l.plan.records {
            key.set_bit(r.key_index, r.correct_bit)?;
        }
        offset += count;
        plans.push(l.plan);
        locked.push(l.netlist);
    }

    let mut pis = Vec::new();
    let mut keys = Vec::new();
    let mut pos = Vec::new();
    let mut gates = Vec::new();
    for m in &locked {
        let p = m.name();
        let rename = |n: &String| {
            if key_net_index(n).is_some() && m.is_key_input(n) {
                n.clone()
            } else {
                format!("{p}.{n}")
            }
        };
        pis.extend(m.primary_inputs().iter().map(rename));
        keys.extend(m.key_inputs().iter().cloned());
        pos.extend(m.primary_outputs().iter().map(rename));
        gates.extend(m.gates().iter().map(|g| Gate {
            kind: g.kind,
            output: rename(&g.output),
            inputs: g.inputs.iter().map(rename).collect(),
        }));
    }

    let mut links = Vec::new();
    // key net -> replacement feed net, for the module-i gates being chained
    let mut feeds: HashMap<String, String> = HashMap::new();
    let mut extra = Vec::new();
    for i in 1..modules.len() {
        let prev = &modules[i - 1].0;
        if prev.primary_outputs().is_empty() {
            return Err(LockingError::NoTapOutputs(prev.name().to_owned()));
        }
        let records = &plans[i].records;
        let n_chain = chain_bits.min(records.len());
        if n_chain == 0 {
            continue;
        }
        let picks = index::sample(&mut rng, records.len(), n_chain).into_vec();
        let mut taps = BTreeSet::new();
        for pick in picks {
            let rec = &records[pick];
            let tap =
                prev.primary_outputs()[rng.gen_range(0..prev.primary_outputs().len())].clone();
            taps.insert(tap.clone());
            let feed = format!("lolo_feed{}", rec.key_index);
            extra.push(Gate::binary(
                GateKind::Xor,
                &feed,
                &key_net_name(rec.key_index),
                &format!("lolo_dep.{}.{tap}", prev.name()),
            )?);
            feeds.insert(key_net_name(rec.key_index), feed);
            links.push(InterlockLink {
                key_index: rec.key_index,
                module: i,
                tap_net: format!("{}.{tap}", prev.name()),
            });
        }
        extra.extend(shadow_cone(prev, &taps)?);
        for tap in &taps {
            let p = prev.name();
            extra.push(Gate::binary(
                GateKind::Xor,
                &format!("lolo_dep.{p}.{tap}"),
                &format!("{p}.{tap}"),
                &format!("{p}.shadow.{tap}"),
            )?);
        }
    }

    for g in &mut gates {
        for input in &mut g.inputs {
            if let Some(feed) = feeds.get(input.as_str()) {
                *input = feed.clone();
            }
        }
    }
    gates.extend(extra);

    let name = modules
        .iter()
        .map(|(m, _)| m.name())
        .collect::<Vec<_>>()
        .join("_");
    Ok(Interlocked {
        netlist: Netlist::new(name, pis, keys, pos, gates)?,
        key,
        plans,
        links,
    })
}

/// Unlocked copy of the fan-in cones of `taps` in `orig`, nets renamed
/// `<module>.shadow.<net>`; primary inputs are shared with the locked copy.
fn shadow_cone(orig: &Netlist, taps: &BTreeSet<String>) -> Result<Vec<Gate>> {
    let p = orig.name();
    let mut need: HashSet<&str> = HashSet::new();
    let mut stack: Vec<&str> = taps.iter().map(String::as_str).collect();
    while let Some(net) = stack.pop() {
        if !need.insert(net) {
            continue;
        }
        if let Some(g) = orig.driver_of(net) {
            stack.extend(g.inputs.iter().map(String::as_str));
        }
    }
    let rename = |n: &String| {
        if orig.primary_inputs().contains(n) {
            format!("{p}.{n}")
        } else {
            format!("{p}.shadow.{n}")
        }
    };
    orig.gates()
        .iter()
        .filter(|g| need.contains(g.output.as_str()))
        .map(|g| {
            Gate::new(
                g.kind,
                rename(&g.output),
                g.inputs.iter().map(rename).collect(),
            )
            .map_err(Into::into)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse, Assignment};

    fn toy(name: &str) -> Netlist {
        parse(&format!(
            "module {name}\ninput a b\noutput y z\ngate AND p a b\ngate XOR q a b\ngate NOT y p\ngate BUF z q\nendmodule\n"
        ))
        .unwrap()
    }

    #[test]
    fn needs_two_unique_modules() {
        assert!(matches!(
            interlock(&[(toy("m"), 1)], 0),
            Err(LockingError::TooFewModules(1))
        ));
        assert!(matches!(
            interlock(&[(toy("m"), 1), (toy("m"), 1)], 0),
            Err(LockingError::NamespaceCollision(_))
        ));
    }

    #[test]
    fn zero_chain_bits_is_independent_locking() {
        let il = interlock_with(&[(toy("m0"), 2), (toy("m1"), 2)], 9, 0).unwrap();
        assert!(il.links.is_empty());
        assert!(!il
            .netlist
            .gates()
            .iter()
            .any(|g| g.output.starts_with("lolo_feed")));
        assert_eq!(il.key.width(), 4);
        let key = il.key.assignment_for(&il.netlist).unwrap();
        assert_eq!(key.len(), 4);
    }

    #[test]
    fn chained_links_reference_previous_module() {
        let il = interlock_with(&[(toy("m0"), 3), (toy("m1"), 3)], 4, 2).unwrap();
        assert_eq!(il.links.len(), 2);
        for link in &il.links {
            assert_eq!(link.module, 1);
            assert!(link.tap_net.starts_with("m0."));
            assert!((3..6).contains(&link.key_index));
        }
        let pi: Vec<String> = il.netlist.primary_inputs().to_vec();
        let _ = il
            .netlist
            .evaluate(
                &Assignment::from_bits(&pi, &vec![true; pi.len()]),
                &il.key.assignment_for(&il.netlist).unwrap(),
            )
            .unwrap();
    }
}
