use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GateKind, Netlist, NetlistError, Result, EXHAUSTIVE_LIMIT};

/// Net-to-bit map. Ordered by net name so printing is stable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Assignment(BTreeMap<String, bool>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_bits<S: AsRef<str>>(nets: &[S], bits: &[bool]) -> Assignment {
        assert_eq!(nets.len(), bits.len(), "one bit per net");
        Assignment(
            nets.iter()
                .zip(bits)
                .map(|(n, &b)| (n.as_ref().to_owned(), b))
                .collect(),
        )
    }

    pub fn insert(&mut self, net: impl Into<String>, bit: bool) -> Option<bool> {
        self.0.insert(net.into(), bit)
    }

    pub fn get(&self, net: &str) -> Option<bool> {
        self.0.get(net).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Bits in the order of `nets`; panics on an uncovered net.
    pub fn bits_for<S: AsRef<str>>(&self, nets: &[S]) -> Vec<bool> {
        nets.iter()
            .map(|n| self.get(n.as_ref()).expect("net covered by assignment"))
            .collect()
    }

    /// Check the assignment covers exactly `nets`.
    pub fn check_covers<S: AsRef<str>>(&self, nets: &[S]) -> Result<()> {
        let wanted: std::collections::BTreeSet<&str> = nets.iter().map(|n| n.as_ref()).collect();
        let missing: Vec<String> = wanted
            .iter()
            .filter(|n| !self.0.contains_key(**n))
            .map(|n| n.to_string())
            .collect();
        let extra: Vec<String> = self
            .0
            .keys()
            .filter(|k| !wanted.contains(k.as_str()))
            .cloned()
            .collect();
        if missing.is_empty() && extra.is_empty() {
            Ok(())
        } else {
            Err(NetlistError::AssignmentMismatch { missing, extra })
        }
    }
}

impl FromIterator<(String, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, bool)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{k}={}", *v as u8)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct SimGate {
    kind: GateKind,
    a: u32,
    b: u32,
    out: u32,
}

/// Index-based, bit-parallel form of a netlist: 64 input vectors per pass.
///
/// Net slots are laid out as primary inputs, then key inputs, then gate
/// outputs in topological order.
#[derive(Debug, Clone)]
pub struct CompiledNetlist {
    inputs: Vec<String>,
    keys: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<SimGate>,
    output_slots: Vec<u32>,
    slots: usize,
}

impl CompiledNetlist {
    pub fn new(n: &Netlist) -> CompiledNetlist {
        let mut slot: HashMap<&str, u32> = HashMap::new();
        for net in n.primary_inputs().iter().chain(n.key_inputs()) {
            let next = slot.len() as u32;
            slot.insert(net, next);
        }
        for &gi in n.topo_order() {
            let next = slot.len() as u32;
            slot.insert(&n.gates()[gi].output, next);
        }
        let gates = n
            .topo_order()
            .iter()
            .map(|&gi| {
                let g = &n.gates()[gi];
                let a = slot[g.inputs[0].as_str()];
                let b = g.inputs.get(1).map_or(a, |i| slot[i.as_str()]);
                SimGate {
                    kind: g.kind,
                    a,
                    b,
                    out: slot[g.output.as_str()],
                }
            })
            .collect();
        CompiledNetlist {
            inputs: n.primary_inputs().to_vec(),
            keys: n.key_inputs().to_vec(),
            outputs: n.primary_outputs().to_vec(),
            gates,
            output_slots: n
                .primary_outputs()
                .iter()
                .map(|o| slot[o.as_str()])
                .collect(),
            slots: slot.len(),
        }
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Evaluate 64 lanes at once. `pi` and `key` hold one word per port in
    /// declaration order. Output words are appended to `out` after clearing.
    pub fn eval_into(&self, pi: &[u64], key: &[u64], scratch: &mut Vec<u64>, out: &mut Vec<u64>) {
        assert_eq!(pi.len(), self.inputs.len(), "one word per primary input");
        assert_eq!(key.len(), self.keys.len(), "one word per key input");
        scratch.clear();
        scratch.resize(self.slots, 0);
        scratch[..pi.len()].copy_from_slice(pi);
        scratch[pi.len()..pi.len() + key.len()].copy_from_slice(key);
        for g in &self.gates {
            let v = g
                .kind
                .eval_word(scratch[g.a as usize], scratch[g.b as usize]);
            scratch[g.out as usize] = v;
        }
        out.clear();
        out.extend(self.output_slots.iter().map(|&s| scratch[s as usize]));
    }

    pub fn eval_words(&self, pi: &[u64], key: &[u64]) -> Vec<u64> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.eval_into(pi, key, &mut scratch, &mut out);
        out
    }

    /// Single-vector evaluation on plain bits.
    pub fn eval_bits(&self, pi: &[bool], key: &[bool]) -> Vec<bool> {
        let pi: Vec<u64> = pi.iter().map(|&b| b as u64).collect();
        let key: Vec<u64> = key.iter().map(|&b| b as u64).collect();
        self.eval_words(&pi, &key)
            .into_iter()
            .map(|w| w & 1 == 1)
            .collect()
    }
}

pub(super) fn evaluate(n: &Netlist, pi: &Assignment, key: &Assignment) -> Result<Assignment> {
    pi.check_covers(n.primary_inputs())?;
    key.check_covers(n.key_inputs())?;
    let out = n.compile().eval_bits(
        &pi.bits_for(n.primary_inputs()),
        &key.bits_for(n.key_inputs()),
    );
    Ok(Assignment::from_bits(n.primary_outputs(), &out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivalenceMode {
    /// All 2^|PI| vectors; at most [`EXHAUSTIVE_LIMIT`] inputs.
    Exhaustive,
    /// `count` uniform vectors from a seeded ChaCha8 stream.
    Sampled { count: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Counterexample {
        inputs: Assignment,
        out_a: Assignment,
        out_b: Assignment,
    },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }
}

/// Lane patterns for the low six input bits of an exhaustive block.
const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Input words for block `blk` of an exhaustive enumeration: lane `l`
/// carries vector `64 * blk + l`, bit `j` of which drives input `j`.
fn exhaustive_block(width: usize, blk: u64, words: &mut [u64]) {
    for (j, w) in words.iter_mut().enumerate().take(width) {
        *w = if j < 6 {
            LANE_PATTERNS[j]
        } else if (blk >> (j - 6)) & 1 == 1 {
            u64::MAX
        } else {
            0
        };
    }
}

fn sampled_block(seed: u64, blk: u64, words: &mut [u64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(blk);
    for w in words {
        *w = rng.next_u64();
    }
}

fn key_words(n: &Netlist, key: &Assignment) -> Result<Vec<u64>> {
    key.check_covers(n.key_inputs())?;
    Ok(key
        .bits_for(n.key_inputs())
        .into_iter()
        .map(|b| if b { u64::MAX } else { 0 })
        .collect())
}

fn same_names(a: &[String], b: &[String]) -> bool {
    let mut x: Vec<&String> = a.iter().collect();
    let mut y: Vec<&String> = b.iter().collect();
    x.sort();
    y.sort();
    x == y
}

/// Compare two netlists under fixed keys, either over every input vector or
/// over a seeded sample. Returns the lowest-index differing vector found.
pub fn equivalence_check(
    a: &Netlist,
    b: &Netlist,
    key_a: &Assignment,
    key_b: &Assignment,
    mode: EquivalenceMode,
) -> Result<Verdict> {
    if !same_names(a.primary_inputs(), b.primary_inputs()) {
        return Err(NetlistError::InterfaceMismatch(format!(
            "primary inputs differ: {:?} vs {:?}",
            a.primary_inputs(),
            b.primary_inputs()
        )));
    }
    if !same_names(a.primary_outputs(), b.primary_outputs()) {
        return Err(NetlistError::InterfaceMismatch(format!(
            "primary outputs differ: {:?} vs {:?}",
            a.primary_outputs(),
            b.primary_outputs()
        )));
    }
    let ka = key_words(a, key_a)?;
    let kb = key_words(b, key_b)?;
    let width = a.primary_inputs().len();

    let (blocks, total) = match mode {
        EquivalenceMode::Exhaustive => {
            if width > EXHAUSTIVE_LIMIT {
                return Err(NetlistError::TooWide {
                    width,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            let total = 1u64 << width;
            (total.div_ceil(64), total)
        }
        EquivalenceMode::Sampled { count, .. } => (count.div_ceil(64), count),
    };

    let ca = a.compile();
    let cb = b.compile();
    let a_pi_pos: HashMap<&str, usize> = a
        .primary_inputs()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let b_from_a: Vec<usize> = b
        .primary_inputs()
        .iter()
        .map(|n| a_pi_pos[n.as_str()])
        .collect();
    let b_out_pos: HashMap<&str, usize> = b
        .primary_outputs()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let out_map: Vec<usize> = a
        .primary_outputs()
        .iter()
        .map(|n| b_out_pos[n.as_str()])
        .collect();

    let hit = (0..blocks).into_par_iter().find_map_first(|blk| {
        let mut pi = vec![0u64; width];
        match mode {
            EquivalenceMode::Exhaustive => exhaustive_block(width, blk, &mut pi),
            EquivalenceMode::Sampled { seed, .. } => sampled_block(seed, blk, &mut pi),
        }
        let pi_b: Vec<u64> = b_from_a.iter().map(|&i| pi[i]).collect();
        let oa = ca.eval_words(&pi, &ka);
        let ob = cb.eval_words(&pi_b, &kb);
        let remaining = total - blk * 64;
        let lanes = if remaining >= 64 {
            u64::MAX
        } else {
            (1u64 << remaining) - 1
        };
        let diff = oa
            .iter()
            .zip(&out_map)
            .fold(0u64, |acc, (&wa, &ib)| acc | (wa ^ ob[ib]))
            & lanes;
        (diff != 0).then(|| {
            let lane = diff.trailing_zeros();
            let bit = |w: u64| (w >> lane) & 1 == 1;
            let inputs: Vec<bool> = pi.iter().map(|&w| bit(w)).collect();
            let out_a: Vec<bool> = oa.iter().map(|&w| bit(w)).collect();
            let out_b: Vec<bool> = ob.iter().map(|&w| bit(w)).collect();
            Verdict::Counterexample {
                inputs: Assignment::from_bits(a.primary_inputs(), &inputs),
                out_a: Assignment::from_bits(a.primary_outputs(), &out_a),
                out_b: Assignment::from_bits(b.primary_outputs(), &out_b),
            }
        })
    });
    Ok(hit.unwrap_or(Verdict::Equivalent))
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn xor_lock(kind: &str) -> Netlist {
        parse(&format!(
            "module t\ninput a\nkey k\noutput y\ngate {kind} y a k\nendmodule\n"
        ))
        .unwrap()
    }

    fn run(n: &Netlist, a: bool, k: bool) -> bool {
        let pi = Assignment::from_bits(&["a"], &[a]);
        let key = Assignment::from_bits(&["k"], &[k]);
        n.evaluate(&pi, &key).unwrap().get("y").unwrap()
    }

    #[test]
    fn xor_key_gate_buffers_or_inverts() {
        let n = xor_lock("XOR");
        assert!(run(&n, true, false));
        assert!(!run(&n, true, true));
        let n = xor_lock("XNOR");
        assert!(run(&n, true, true));
        assert!(!run(&n, true, false));
    }

    #[test]
    fn assignment_must_match_ports() {
        let n = xor_lock("XOR");
        let pi = Assignment::from_bits(&["a", "b"], &[true, false]);
        let key = Assignment::from_bits(&["k"], &[false]);
        match n.evaluate(&pi, &key).unwrap_err() {
            NetlistError::AssignmentMismatch { missing, extra } => {
                assert!(missing.is_empty());
                assert_eq!(extra, ["b"]);
            }
            e => panic!("unexpected {e}"),
        }
        let err = n
            .evaluate(&Assignment::from_bits(&["a"], &[true]), &Assignment::new())
            .unwrap_err();
        assert!(matches!(err, NetlistError::AssignmentMismatch { .. }));
    }

    #[test]
    fn exhaustive_block_enumerates_every_vector() {
        let width = 8;
        let mut seen = vec![false; 1 << width];
        let mut words = vec![0; width];
        for blk in 0..4 {
            exhaustive_block(width, blk, &mut words);
            for lane in 0..64 {
                let v = (0..width).fold(0usize, |acc, j| {
                    acc | ((((words[j] >> lane) & 1) as usize) << j)
                });
                assert_eq!(v, blk as usize * 64 + lane);
                seen[v] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn reflexive_and_counterexample() {
        let n = xor_lock("XOR");
        let k0 = Assignment::from_bits(&["k"], &[false]);
        let k1 = Assignment::from_bits(&["k"], &[true]);
        assert_eq!(
            equivalence_check(&n, &n, &k0, &k0, EquivalenceMode::Exhaustive).unwrap(),
            Verdict::Equivalent
        );
        match equivalence_check(&n, &n, &k0, &k1, EquivalenceMode::Exhaustive).unwrap() {
            Verdict::Counterexample {
                inputs,
                out_a,
                out_b,
            } => {
                assert_eq!(inputs.get("a"), Some(false));
                assert_eq!(out_a.get("y"), Some(false));
                assert_eq!(out_b.get("y"), Some(true));
            }
            v => panic!("{v:?}"),
        }
        let v = equivalence_check(
            &n,
            &n,
            &k0,
            &k1,
            EquivalenceMode::Sampled { count: 10, seed: 3 },
        )
        .unwrap();
        assert!(!v.is_equivalent());
    }

    #[test]
    fn interface_and_width_errors() {
        let a = xor_lock("XOR");
        let b = parse("module u\ninput b\noutput y\ngate BUF y b\nendmodule\n").unwrap();
        let k = Assignment::from_bits(&["k"], &[false]);
        assert!(matches!(
            equivalence_check(&a, &b, &k, &Assignment::new(), EquivalenceMode::Exhaustive),
            Err(NetlistError::InterfaceMismatch(_))
        ));

        let names: Vec<String> = (0..21).map(|i| format!("i{i}")).collect();
        let text = format!(
            "module w\ninput {}\noutput y\ngate AND y i0 i20\nendmodule\n",
            names.join(" ")
        );
        let wide = parse(&text).unwrap();
        assert!(matches!(
            equivalence_check(
                &wide,
                &wide,
                &Assignment::new(),
                &Assignment::new(),
                EquivalenceMode::Exhaustive
            ),
            Err(NetlistError::TooWide { width: 21, .. })
        ));
        assert!(equivalence_check(
            &wide,
            &wide,
            &Assignment::new(),
            &Assignment::new(),
            EquivalenceMode::Sampled {
                count: 1000,
                seed: 1
            }
        )
        .unwrap()
        .is_equivalent());
    }

    #[test]
    fn port_order_is_matched_by_name() {
        let a = parse("module t\ninput x y\noutput p q\ngate AND p x y\ngate NOT q x\nendmodule\n")
            .unwrap();
        let b = parse("module t\ninput y x\noutput q p\ngate NOT q x\ngate AND p y x\nendmodule\n")
            .unwrap();
        let e = Assignment::new();
        assert!(
            equivalence_check(&a, &b, &e, &e, EquivalenceMode::Exhaustive)
                .unwrap()
                .is_equivalent()
        );
    }
}
