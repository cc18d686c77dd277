use proptest::prelude::*;

use lockfault::circuits;
use lockfault::netlist::{parse, serialize, Assignment, Gate, GateKind, Netlist, NetlistError};

const KINDS: [GateKind; 8] = [
    GateKind::And,
    GateKind::Or,
    GateKind::Xor,
    GateKind::Xnor,
    GateKind::Nand,
    GateKind::Nor,
    GateKind::Not,
    GateKind::Buf,
];

/// Random acyclic netlist: each gate reads earlier nets only.
fn arb_netlist() -> impl Strategy<Value = Netlist> {
    (
        1usize..6,
        prop::collection::vec((0usize..8, any::<u32>(), any::<u32>()), 1..24),
        any::<u64>(),
    )
        .prop_map(|(pis, specs, out_pick)| {
            let mut nets: Vec<String> = (0..pis).map(|i| format!("in{i}")).collect();
            let mut gates = Vec::new();
            for (i, (k, a, b)) in specs.iter().enumerate() {
                let kind = KINDS[*k];
                let pick = |x: u32| nets[x as usize % nets.len()].clone();
                let ins = if kind.arity() == 1 {
                    vec![pick(*a)]
                } else {
                    vec![pick(*a), pick(*b)]
                };
                let out = format!("n{i}");
                gates.push(Gate::new(kind, out.clone(), ins).unwrap());
                nets.push(out);
            }
            let mut outs: Vec<String> = gates
                .iter()
                .enumerate()
                .filter(|(i, _)| (out_pick >> (i % 64)) & 1 == 1)
                .map(|(_, g)| g.output.clone())
                .collect();
            if outs.is_empty() {
                outs.push(gates.last().unwrap().output.clone());
            }
            Netlist::new("rand", nets[..pis].to_vec(), vec![], outs, gates).unwrap()
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(n in arb_netlist()) {
        let text = serialize(&n);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &n);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn compiled_and_assignment_evaluation_agree(n in arb_netlist(), x in any::<u64>()) {
        let pis = n.primary_inputs().len();
        let bits: Vec<bool> = (0..pis).map(|i| x >> i & 1 == 1).collect();
        let via_map = n.evaluate(&Assignment::from_bits(n.primary_inputs(), &bits), &Assignment::new()).unwrap();
        let via_bits = n.compile().eval_bits(&bits, &[]);
        prop_assert_eq!(via_map.bits_for(n.primary_outputs()), via_bits);
    }
}

#[test]
fn bundled_circuits_round_trip() {
    for n in circuits::all() {
        assert_eq!(parse(&serialize(&n)).unwrap(), n, "{}", n.name());
    }
}

#[test]
fn cycles_are_rejected() {
    let text = "module loop\ninput a\noutput y\ngate AND x a y\ngate BUF y x\nendmodule\n";
    assert!(matches!(parse(text), Err(NetlistError::Cycle(_))));
}
