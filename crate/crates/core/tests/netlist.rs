use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rfsynth::netlist::{parse_netlist, ComponentKind, Netlist};

const PA: &str = include_str!("../fixtures/class_b_pa.net");

fn pin_map(nl: &Netlist) -> BTreeMap<String, (f64, BTreeSet<(String, usize)>)> {
    nl.nets
        .iter()
        .map(|n| {
            let pins = n.pins.iter().map(|p| (p.component.clone(), p.terminal)).collect();
            (n.name.clone(), (n.weight, pins))
        })
        .collect()
}

#[test]
fn class_b_pa_graph() {
    let nl = parse_netlist(PA).unwrap();
    assert_eq!(nl.title, "class_b_pa");
    assert_eq!(nl.global_freq, Some(28.0));
    let kinds: Vec<(&str, ComponentKind, Option<f64>)> = nl.components.iter().map(|c| (c.id.as_str(), c.kind, c.value)).collect();
    assert_eq!(
        kinds,
        [
            ("M1", ComponentKind::Nmos, None),
            ("L1", ComponentKind::Inductor, Some(300.0)),
            ("C1", ComponentKind::Capacitor, Some(0.5)),
            ("L2", ComponentKind::Inductor, Some(200.0)),
            ("R1", ComponentKind::Resistor, Some(500.0)),
        ]
    );
    assert_eq!(nl.component("L1").unwrap().width_hint, Some(4.0));

    let p = |c: &str, t: usize| (c.to_string(), t);
    let mut want = BTreeMap::new();
    want.insert("drain".to_string(), (3.0, BTreeSet::from([p("M1", 1), p("L1", 1), p("C1", 0)])));
    want.insert("out".to_string(), (2.0, BTreeSet::from([p("C1", 1), p("L2", 0)])));
    want.insert("gate".to_string(), (1.0, BTreeSet::from([p("M1", 0), p("R1", 0)])));
    want.insert("gnd".to_string(), (1.0, BTreeSet::from([p("M1", 2), p("L2", 1)])));
    want.insert("vdd".to_string(), (1.0, BTreeSet::from([p("L1", 0)])));
    want.insert("bias".to_string(), (1.0, BTreeSet::from([p("R1", 1)])));
    assert_eq!(pin_map(&nl), want);
}

#[test]
fn unconsumed_tokens_are_errors() {
    for bad in [
        "R1 a b 500 junk",
        "C1 a b",
        "M1 g d",
        ".FREQ 5 6",
        ".NET x Z=3",
        "R1 a b 5k",
        ".END extra",
        "X1 a b 3",
    ] {
        assert!(parse_netlist(bad).is_err(), "{bad} was accepted");
    }
}

#[derive(Debug, Clone)]
enum Line {
    R(usize, usize, f64),
    C(usize, usize, f64),
    L(usize, usize, f64, Option<f64>),
    M(usize, usize, usize),
    Net(usize, f64),
}

fn line() -> impl Strategy<Value = Line> {
    let n = 0..6usize;
    prop_oneof![
        (n.clone(), n.clone(), 1.0..1e5f64).prop_map(|(a, b, v)| Line::R(a, b, v)),
        (n.clone(), n.clone(), 0.01..10.0f64).prop_map(|(a, b, v)| Line::C(a, b, v)),
        (n.clone(), n.clone(), 50.0..1000.0f64, proptest::option::of(1.0..10.0f64)).prop_map(|(a, b, v, w)| Line::L(a, b, v, w)),
        (n.clone(), n.clone(), n.clone()).prop_map(|(a, b, c)| Line::M(a, b, c)),
        (n, 1.0..5.0f64).prop_map(|(a, w)| Line::Net(a, w)),
    ]
}

fn render(lines: &[Line]) -> String {
    let mut s = String::from("* generated\n");
    for (i, l) in lines.iter().enumerate() {
        s += &match l {
            Line::R(a, b, v) => format!("R{i} n{a} n{b} {v}\n"),
            Line::C(a, b, v) => format!("C{i} n{a} n{b} {v}\n"),
            Line::L(a, b, v, Some(w)) => format!("L{i} n{a} n{b} {v} W={w}\n"),
            Line::L(a, b, v, None) => format!("L{i} n{a} n{b} {v}\n"),
            Line::M(a, b, c) => format!("M{i} n{a} n{b} n{c}\n"),
            Line::Net(a, w) => format!(".NET n{a} W={w}\n"),
        };
    }
    s
}

proptest! {
    #[test]
    fn serialize_round_trip(lines in proptest::collection::vec(line(), 0..20)) {
        let nl = parse_netlist(&render(&lines)).unwrap();
        let again = parse_netlist(&nl.serialize()).unwrap();
        prop_assert!(nl.graph_eq(&again));
        let third = parse_netlist(&again.serialize()).unwrap();
        prop_assert_eq!(again.serialize(), third.serialize());
    }

    #[test]
    fn every_terminal_in_exactly_one_net(lines in proptest::collection::vec(line(), 0..20)) {
        let nl = parse_netlist(&render(&lines)).unwrap();
        for c in &nl.components {
            for t in 0..c.kind.arity() {
                let hits: usize = nl
                    .nets
                    .iter()
                    .map(|n| n.pins.iter().filter(|p| p.component == c.id && p.terminal == t).count())
                    .sum();
                prop_assert_eq!(hits, 1, "{}.{}", c.id, t);
            }
        }
    }
}
