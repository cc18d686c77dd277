use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::{Gate, GateKind, Netlist};

use super::key::{key_net_name, LockKey};
use super::{LockingError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyGateKind {
    Xor,
    Xnor,
}

impl KeyGateKind {
    pub fn gate_kind(self) -> GateKind {
        match self {
            KeyGateKind::Xor => GateKind::Xor,
            KeyGateKind::Xnor => GateKind::Xnor,
        }
    }
}

impl fmt::Display for KeyGateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.gate_kind().as_str())
    }
}

/// Provenance of one inserted key gate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyGateRecord {
    pub key_index: usize,
    pub gate_kind: KeyGateKind,
    pub locked_net: String,
    pub inverter_appended: bool,
    pub correct_bit: bool,
}

impl KeyGateRecord {
    /// The key bit that makes a gate of this shape transparent.
    pub fn correct_bit_for(kind: KeyGateKind, inverter_appended: bool) -> bool {
        (kind == KeyGateKind::Xnor) ^ inverter_appended
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockingPlan {
    pub source_module: String,
    pub seed: u64,
    pub records: Vec<KeyGateRecord>,
}

impl LockingPlan {
    /// Line-based plan file:
    ///
    /// ```text
    /// source <module>
    /// seed <u64>
    /// keygate <index> <XOR|XNOR> <net> <inv:0|1> <correct:0|1>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = format!("source {}\nseed {}\n", self.source_module, self.seed);
        for r in &self.records {
            let _ = writeln!(
                out,
                "keygate {} {} {} {} {}",
                r.key_index,
                r.gate_kind,
                r.locked_net,
                r.inverter_appended as u8,
                r.correct_bit as u8
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<LockingPlan> {
        let err = |line: usize, msg: &str| LockingError::PlanFormat {
            line,
            message: msg.to_owned(),
        };
        let flag = |line: usize, s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(err(line, "flag must be 0 or 1")),
        };
        let mut source = None;
        let mut seed = None;
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let code = raw.split('#').next().unwrap_or("");
            let tok: Vec<&str> = code.split_whitespace().collect();
            match tok.as_slice() {
                [] => {}
                ["source", name] => source = Some(name.to_string()),
                ["seed", s] => seed = Some(s.parse().map_err(|_| err(line, "bad seed"))?),
                ["keygate", idx, kind, net, inv, correct] => {
                    let key_index: usize = idx.parse().map_err(|_| err(line, "bad key index"))?;
                    let gate_kind = match *kind {
                        "XOR" => KeyGateKind::Xor,
                        "XNOR" => KeyGateKind::Xnor,
                        _ => return Err(err(line, "key gate kind must be XOR or XNOR")),
                    };
                    let inverter_appended = flag(line, inv)?;
                    let correct_bit = flag(line, correct)?;
                    if correct_bit != KeyGateRecord::correct_bit_for(gate_kind, inverter_appended) {
                        return Err(err(line, "correct bit inconsistent with gate shape"));
                    }
                    if !seen.insert(key_index) {
                        return Err(err(line, "duplicate key index"));
                    }
                    records.push(KeyGateRecord {
                        key_index,
                        gate_kind,
                        locked_net: net.to_string(),
                        inverter_appended,
                        correct_bit,
                    });
                }
                _ => return Err(err(line, "unrecognised plan line")),
            }
        }
        Ok(LockingPlan {
            source_module: source.ok_or_else(|| err(0, "missing `source` line"))?,
            seed: seed.ok_or_else(|| err(0, "missing `seed` line"))?,
            records,
        })
    }
}

/// Knobs for [`lock`]. `key_offset` shifts the key indices of the inserted
/// gates; `key_width` is the width of the returned key (at least
/// `key_offset + count`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LockOptions {
    pub count: usize,
    pub seed: u64,
    pub key_offset: usize,
    pub key_width: usize,
}

impl LockOptions {
    pub fn new(count: usize, seed: u64) -> LockOptions {
        LockOptions {
            count,
            seed,
            key_offset: 0,
            key_width: count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Locked {
    pub netlist: Netlist,
    pub key: LockKey,
    pub plan: LockingPlan,
}

/// Nets eligible for a new key gate: outputs of gates that are neither key
/// gates themselves nor inverters appended to one.
pub fn lockable_sites(n: &Netlist) -> Vec<String> {
    let keyed: HashSet<&str> = n
        .gates()
        .iter()
        .filter(|g| g.inputs.iter().any(|i| n.is_key_input(i)))
        .map(|g| g.output.as_str())
        .collect();
    n.gates()
        .iter()
        .filter(|g| {
            !keyed.contains(g.output.as_str())
                && !(g.kind == GateKind::Not && keyed.contains(g.inputs[0].as_str()))
        })
        .map(|g| g.output.clone())
        .collect()
}

fn fresh(taken: &mut HashSet<String>, base: String) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('_');
    }
    taken.insert(name.clone());
    name
}

/// Lock with `count` key gates, key indices `0..count`.
pub fn insert_key_gates(n: &Netlist, count: usize, seed: u64) -> Result<Locked> {
    lock(n, LockOptions::new(count, seed))
}

/// Random XOR/XNOR key-gate insertion.
///
/// Sites are drawn uniformly without replacement from [`lockable_sites`]
/// using `ChaCha8Rng::seed_from_u64(seed)`. For the `i`-th drawn site `w`:
/// the gate kind is XNOR on a `true` coin, an inverter is appended on a second
/// `true` coin, and the key input is `lolo_key_bit<key_offset + i>`. The
/// original driver of `w` is renamed so that `w` itself keeps its name and
/// fan-out.
pub fn lock(n: &Netlist, opts: LockOptions) -> Result<Locked> {
    if opts.count == 0 {
        return Err(LockingError::InvalidCount);
    }
    if opts.key_offset + opts.count > opts.key_width {
        return Err(LockingError::KeyIndexOutOfRange {
            index: opts.key_offset + opts.count - 1,
            width: opts.key_width,
        });
    }
    let sites = lockable_sites(n);
    if sites.is_empty() {
        return Err(LockingError::NoSites(n.name().to_owned()));
    }
    if opts.count > sites.len() {
        return Err(LockingError::TooManyGates {
            requested: opts.count,
            available: sites.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let chosen = index::sample(&mut rng, sites.len(), opts.count).into_vec();

    let mut taken: HashSet<String> = n.nets().map(str::to_owned).collect();

    let mut records = Vec::with_capacity(opts.count);
    // locked net -> (pre-gate net, inserted gates)
    let mut rewires = std::collections::HashMap::new();
    let mut key_nets = Vec::with_capacity(opts.count);
    for (i, &site) in chosen.iter().enumerate() {
        let key_index = opts.key_offset + i;
        let gate_kind = if rng.gen::<bool>() {
            KeyGateKind::Xnor
        } else {
            KeyGateKind::Xor
        };
        let inverter_appended = rng.gen::<bool>();
        let net = sites[site].clone();
        let key_net = key_net_name(key_index);
        if taken.contains(&key_net) {
            return Err(LockingError::KeyNetCollision(key_net));
        }
        taken.insert(key_net.clone());
        let pre = fresh(&mut taken, format!("lolo_pre{key_index}"));
        let mut inserted = Vec::new();
        if inverter_appended {
            let mid = fresh(&mut taken, format!("lolo_kg{key_index}"));
            inserted.push(Gate::binary(gate_kind.gate_kind(), &mid, &pre, &key_net)?);
            inserted.push(Gate::unary(GateKind::Not, &net, &mid)?);
        } else {
            inserted.push(Gate::binary(gate_kind.gate_kind(), &net, &pre, &key_net)?);
        }
        rewires.insert(net.clone(), (pre, inserted));
        key_nets.push(key_net);
        records.push(KeyGateRecord {
            key_index,
            gate_kind,
            locked_net: net,
            inverter_appended,
            correct_bit: KeyGateRecord::correct_bit_for(gate_kind, inverter_appended),
        });
    }

    let (name, pis, mut keys, pos, gates) = n.clone().into_parts();
    let mut out_gates = Vec::with_capacity(gates.len() + 2 * opts.count);
    for mut g in gates {
        match rewires.remove(&g.output) {
            Some((pre, inserted)) => {
                g.output = pre;
                out_gates.push(g);
                out_gates.extend(inserted);
            }
            None => out_gates.push(g),
        }
    }
    keys.extend(key_nets);
    let netlist = Netlist::new(name, pis, keys, pos, out_gates)?;

    let mut key = LockKey::zeros(opts.key_width)?;
    for r in &records {
        key.set_bit(r.key_index, r.correct_bit)?;
    }
    Ok(Locked {
        netlist,
        key,
        plan: LockingPlan {
            source_module: n.name().to_owned(),
            seed: opts.seed,
            records,
        },
    })
}
