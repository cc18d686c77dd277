//! Small combinational benchmarks shipped with the crate.

use crate::netlist::{parse, Netlist};

/// `(name, source text)` for every bundled circuit.
pub const BUNDLED: &[(&str, &str)] = &[
    ("c17", include_str!("../circuits/c17.net")),
    ("full_adder", include_str!("../circuits/full_adder.net")),
    ("adder4", include_str!("../circuits/adder4.net")),
    ("mux4", include_str!("../circuits/mux4.net")),
    ("cmp4", include_str!("../circuits/cmp4.net")),
    ("dec3to8", include_str!("../circuits/dec3to8.net")),
    ("alu4", include_str!("../circuits/alu4.net")),
    ("mult4", include_str!("../circuits/mult4.net")),
    ("rvc_front", include_str!("../circuits/rvc_front.net")),
    ("dec32_front", include_str!("../circuits/dec32_front.net")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Parse a bundled circuit by name.
pub fn load(name: &str) -> Option<Netlist> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse(text).expect("bundled circuit parses"))
}

pub fn all() -> Vec<Netlist> {
    names().map(|n| load(n).unwrap()).collect()
}
