//! Combinational gate-level netlist IR.
//!
//! A [`Netlist`] is a named, acyclic graph of two-input gates (plus `NOT` and
//! `BUF`) with three classes of ports: primary inputs, key inputs and primary
//! outputs. Every accepted netlist is validated on construction, so the rest
//! of the crate can assume a well-formed graph with a known topological order.

mod eval;
mod parse;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use eval::{equivalence_check, Assignment, CompiledNetlist, EquivalenceMode, Verdict};
pub use parse::{parse, serialize};

/// Largest primary-input count accepted by exhaustive equivalence checking.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid net name `{0}`")]
    InvalidName(String),
    #[error("gate {kind} driving `{output}` takes {expected} input(s), got {found}")]
    BadArity {
        kind: GateKind,
        output: String,
        expected: usize,
        found: usize,
    },
    #[error("net `{0}` is declared more than once")]
    DuplicateDeclaration(String),
    #[error("net `{0}` has more than one driver")]
    DuplicateDriver(String),
    #[error("input net `{0}` is also driven by a gate")]
    DrivenInput(String),
    #[error("net `{0}` is used but never driven")]
    UndrivenNet(String),
    #[error("primary output `{0}` is not driven by any gate")]
    UndrivenOutput(String),
    #[error("combinational cycle through net `{0}`")]
    Cycle(String),
    #[error("netlist `{0}` declares no primary inputs")]
    NoInputs(String),
    #[error("netlist `{0}` declares no primary outputs")]
    NoOutputs(String),
    #[error("assignment mismatch: missing {missing:?}, unexpected {extra:?}")]
    AssignmentMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("exhaustive check over {width} inputs exceeds the limit of {limit}")]
    TooWide { width: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, NetlistError>;

/// Gate library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    And,
    Or,
    Xor,
    Xnor,
    Nand,
    Nor,
    Not,
    Buf,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Not,
        GateKind::Buf,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Not | GateKind::Buf => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
        }
    }

    /// Bit-parallel evaluation: each of the 64 lanes is an independent vector.
    /// `b` is ignored for single-input kinds.
    #[inline]
    pub fn eval_word(self, a: u64, b: u64) -> u64 {
        match self {
            GateKind::And => a & b,
            GateKind::Or => a | b,
            GateKind::Xor => a ^ b,
            GateKind::Xnor => !(a ^ b),
            GateKind::Nand => !(a & b),
            GateKind::Nor => !(a | b),
            GateKind::Not => !a,
            GateKind::Buf => a,
        }
    }

    pub fn eval(self, a: bool, b: bool) -> bool {
        self.eval_word(a as u64, b as u64) & 1 == 1
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown gate kind `{s}`"))
    }
}

/// Net names match `[A-Za-z_][A-Za-z0-9_.\[\]]*`.
pub fn is_valid_net_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']'))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub output: String,
    pub inputs: Vec<String>,
}

impl Gate {
    pub fn new(kind: GateKind, output: impl Into<String>, inputs: Vec<String>) -> Result<Gate> {
        let output = output.into();
        if inputs.len() != kind.arity() {
            return Err(NetlistError::BadArity {
                kind,
                output,
                expected: kind.arity(),
                found: inputs.len(),
            });
        }
        Ok(Gate {
            kind,
            output,
            inputs,
        })
    }

    pub fn unary(kind: GateKind, output: &str, a: &str) -> Result<Gate> {
        Gate::new(kind, output, vec![a.to_owned()])
    }

    pub fn binary(kind: GateKind, output: &str, a: &str, b: &str) -> Result<Gate> {
        Gate::new(kind, output, vec![a.to_owned(), b.to_owned()])
    }
}

/// A validated combinational netlist. Immutable once built.
#[derive(Debug, Clone)]
pub struct Netlist {
    name: String,
    primary_inputs: Vec<String>,
    key_inputs: Vec<String>,
    primary_outputs: Vec<String>,
    gates: Vec<Gate>,
    /// Gate indices in a topological order.
    topo: Vec<usize>,
    driver: HashMap<String, usize>,
}

/// Structural equality: same name, port lists and gate list in the same order.
impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.primary_inputs == other.primary_inputs
            && self.key_inputs == other.key_inputs
            && self.primary_outputs == other.primary_outputs
            && self.gates == other.gates
    }
}

impl Eq for Netlist {}

impl Netlist {
    pub fn new(
        name: impl Into<String>,
        primary_inputs: Vec<String>,
        key_inputs: Vec<String>,
        primary_outputs: Vec<String>,
        gates: Vec<Gate>,
    ) -> Result<Netlist> {
        let name = name.into();
        if !is_valid_net_name(&name) {
            return Err(NetlistError::InvalidName(name));
        }
        if primary_inputs.is_empty() {
            return Err(NetlistError::NoInputs(name));
        }
        if primary_outputs.is_empty() {
            return Err(NetlistError::NoOutputs(name));
        }

        let mut sources: HashSet<&str> = HashSet::new();
        for net in primary_inputs.iter().chain(&key_inputs) {
            if !is_valid_net_name(net) {
                return Err(NetlistError::InvalidName(net.clone()));
            }
            if !sources.insert(net) {
                return Err(NetlistError::DuplicateDeclaration(net.clone()));
            }
        }

        let mut driver = HashMap::with_capacity(gates.len());
        for (idx, gate) in gates.iter().enumerate() {
            if gate.inputs.len() != gate.kind.arity() {
                return Err(NetlistError::BadArity {
                    kind: gate.kind,
                    output: gate.output.clone(),
                    expected: gate.kind.arity(),
                    found: gate.inputs.len(),
                });
            }
            for net in std::iter::once(&gate.output).chain(&gate.inputs) {
                if !is_valid_net_name(net) {
                    return Err(NetlistError::InvalidName(net.clone()));
                }
            }
            if sources.contains(gate.output.as_str()) {
                return Err(NetlistError::DrivenInput(gate.output.clone()));
            }
            if driver.insert(gate.output.clone(), idx).is_some() {
                return Err(NetlistError::DuplicateDriver(gate.output.clone()));
            }
        }

        for gate in &gates {
            for input in &gate.inputs {
                if !sources.contains(input.as_str()) && !driver.contains_key(input) {
                    return Err(NetlistError::UndrivenNet(input.clone()));
                }
            }
        }

        let mut seen_outputs = HashSet::new();
        for out in &primary_outputs {
            if !is_valid_net_name(out) {
                return Err(NetlistError::InvalidName(out.clone()));
            }
            if !seen_outputs.insert(out.as_str()) {
                return Err(NetlistError::DuplicateDeclaration(out.clone()));
            }
            if !driver.contains_key(out) {
                return Err(NetlistError::UndrivenOutput(out.clone()));
            }
        }

        let topo = topological_order(&gates, &driver)?;
        Ok(Netlist {
            name,
            primary_inputs,
            key_inputs,
            primary_outputs,
            gates,
            topo,
            driver,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn primary_inputs(&self) -> &[String] {
        &self.primary_inputs
    }

    pub fn key_inputs(&self) -> &[String] {
        &self.key_inputs
    }

    pub fn primary_outputs(&self) -> &[String] {
        &self.primary_outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Gate indices in topological order.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn driver_of(&self, net: &str) -> Option<&Gate> {
        self.driver.get(net).map(|&i| &self.gates[i])
    }

    pub fn is_key_input(&self, net: &str) -> bool {
        self.key_inputs.iter().any(|k| k == net)
    }

    pub fn contains_net(&self, net: &str) -> bool {
        self.driver.contains_key(net)
            || self.primary_inputs.iter().any(|n| n == net)
            || self.key_inputs.iter().any(|n| n == net)
    }

    /// Every net name in the netlist: inputs, keys, then gate outputs in
    /// declaration order.
    pub fn nets(&self) -> impl Iterator<Item = &str> {
        self.primary_inputs
            .iter()
            .chain(&self.key_inputs)
            .chain(self.gates.iter().map(|g| &g.output))
            .map(String::as_str)
    }

    /// Primary outputs reachable from `net` through the gate graph
    /// (including `net` itself when it is an output).
    pub fn output_cone(&self, net: &str) -> BTreeSet<String> {
        let mut fanout: HashMap<&str, Vec<&str>> = HashMap::new();
        for gate in &self.gates {
            for input in &gate.inputs {
                fanout.entry(input.as_str()).or_default().push(&gate.output);
            }
        }
        let outputs: HashSet<&str> = self.primary_outputs.iter().map(String::as_str).collect();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([net]);
        let mut reached = BTreeSet::new();
        while let Some(n) = queue.pop_front() {
            if !seen.insert(n) {
                continue;
            }
            if outputs.contains(n) {
                reached.insert(n.to_owned());
            }
            if let Some(next) = fanout.get(n) {
                queue.extend(next.iter().copied());
            }
        }
        reached
    }

    pub fn compile(&self) -> CompiledNetlist {
        CompiledNetlist::new(self)
    }

    pub fn evaluate(&self, pi: &Assignment, key: &Assignment) -> Result<Assignment> {
        eval::evaluate(self, pi, key)
    }

    /// Disjoint union of several netlists. Every net of part `i` is renamed
    /// `<prefix_i>.<net>`; port lists are concatenated in part order.
    pub fn disjoint_union(name: &str, parts: &[(&str, &Netlist)]) -> Result<Netlist> {
        let mut pis = Vec::new();
        let mut keys = Vec::new();
        let mut pos = Vec::new();
        let mut gates = Vec::new();
        for (prefix, part) in parts {
            let rename = |n: &String| format!("{prefix}.{n}");
            pis.extend(part.primary_inputs.iter().map(rename));
            keys.extend(part.key_inputs.iter().map(rename));
            pos.extend(part.primary_outputs.iter().map(rename));
            gates.extend(part.gates.iter().map(|g| Gate {
                kind: g.kind,
                output: rename(&g.output),
                inputs: g.inputs.iter().map(rename).collect(),
            }));
        }
        Netlist::new(name, pis, keys, pos, gates)
    }

    /// Decompose into raw parts, e.g. for a transformation that rebuilds the
    /// netlist through [`Netlist::new`].
    pub fn into_parts(self) -> (String, Vec<String>, Vec<String>, Vec<String>, Vec<Gate>) {
        (
            self.name,
            self.primary_inputs,
            self.key_inputs,
            self.primary_outputs,
            self.gates,
        )
    }
}

fn topological_order(gates: &[Gate], driver: &HashMap<String, usize>) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; gates.len()];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (idx, gate) in gates.iter().enumerate() {
        for input in &gate.inputs {
            if let Some(&src) = driver.get(input) {
                indegree[idx] += 1;
                users[src].push(idx);
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..gates.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(idx) = queue.pop_front() {
        order.push(idx);
        for &user in &users[idx] {
            indegree[user] -= 1;
            if indegree[user] == 0 {
                queue.push_back(user);
            }
        }
    }
    if order.len() != gates.len() {
        let stuck = (0..gates.len()).find(|&i| indegree[i] > 0).unwrap();
        return Err(NetlistError::Cycle(gates[stuck].output.clone()));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn gate_truth_tables() {
        let rows = [(false, false), (false, true), (true, false), (true, true)];
        let table = |k: GateKind| rows.map(|(a, b)| k.eval(a, b));
        assert_eq!(table(GateKind::And), [false, false, false, true]);
        assert_eq!(table(GateKind::Or), [false, true, true, true]);
        assert_eq!(table(GateKind::Xor), [false, true, true, false]);
        assert_eq!(table(GateKind::Xnor), [true, false, false, true]);
        assert_eq!(table(GateKind::Nand), [true, true, true, false]);
        assert_eq!(table(GateKind::Nor), [true, false, false, false]);
        assert_eq!(table(GateKind::Not), [true, true, false, false]);
        assert_eq!(table(GateKind::Buf), [false, false, true, true]);
    }

    #[test]
    fn name_rules() {
        assert!(is_valid_net_name("instr[5]"));
        assert!(is_valid_net_name("_a.b"));
        assert!(!is_valid_net_name(""));
        assert!(!is_valid_net_name("5a"));
        assert!(!is_valid_net_name("a-b"));
    }

    #[test]
    fn rejects_structural_violations() {
        let buf = |o: &str, i: &str| Gate::unary(GateKind::Buf, o, i).unwrap();
        let err = Netlist::new(
            "t",
            names(&["a"]),
            vec![],
            names(&["y"]),
            vec![buf("y", "a"), buf("y", "a")],
        )
        .unwrap_err();
        assert_eq!(err, NetlistError::DuplicateDriver("y".into()));

        let err = Netlist::new("t", names(&["a"]), vec![], names(&["a"]), vec![]).unwrap_err();
        assert_eq!(err, NetlistError::UndrivenOutput("a".into()));

        let err = Netlist::new(
            "t",
            names(&["a"]),
            vec![],
            names(&["y"]),
            vec![buf("y", "z")],
        )
        .unwrap_err();
        assert_eq!(err, NetlistError::UndrivenNet("z".into()));

        let err = Netlist::new(
            "t",
            names(&["a"]),
            vec![],
            names(&["y"]),
            vec![buf("a", "y"), buf("y", "a")],
        )
        .unwrap_err();
        assert_eq!(err, NetlistError::DrivenInput("a".into()));

        let and = Gate::binary(GateKind::And, "p", "a", "q").unwrap();
        let err = Netlist::new(
            "t",
            names(&["a"]),
            vec![],
            names(&["y"]),
            vec![and, buf("q", "p"), buf("y", "q")],
        )
        .unwrap_err();
        assert!(matches!(err, NetlistError::Cycle(_)));

        assert!(matches!(
            Gate::new(GateKind::Xor, "y", names(&["a"])),
            Err(NetlistError::BadArity {
                expected: 2,
                found: 1,
                ..
            })
        ));
    }

    #[test]
    fn output_cone_follows_fanout() {
        let n = parse(
            "module t\ninput a b\noutput y z\ngate NOT na a\ngate AND y na b\ngate BUF z b\nendmodule\n",
        )
        .unwrap();
        assert_eq!(n.output_cone("na"), BTreeSet::from(["y".to_string()]));
        assert_eq!(
            n.output_cone("b"),
            BTreeSet::from(["y".to_string(), "z".to_string()])
        );
    }
}
