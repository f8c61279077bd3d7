//! Parses a netlist, prints its connectivity and validation findings, and
//! shows the canonical serialization.
//!
//! cargo run --example parse_netlist -- [file.net]

use rfsynth::netlist::{parse_netlist, validate, ValidateOptions};

const DEMO: &str = "\
* two-stage matching network
.FREQ 5
.NET rf_in W=2
M1 g d 0
L1 rf_in g 800 W=3 F=5
C1 d rf_out 1.2
R1 g vb 2000
.END
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(p) => std::fs::read_to_string(p)?,
        None => DEMO.to_string(),
    };
    let nl = parse_netlist(&text)?;
    println!("{} components, {} nets, f = {:?} GHz", nl.components.len(), nl.nets.len(), nl.operating_freq());
    for c in &nl.components {
        println!("  {:<4} {:?} value {:?} terminals {:?}", c.id, c.kind, c.value, c.terminals);
    }
    for n in &nl.nets {
        let pins: Vec<String> = n.pins.iter().map(|p| format!("{}.{}", p.component, p.terminal)).collect();
        println!("  net {:<8} weight {:.1}  {}", n.name, n.weight, pins.join(" "));
    }
    for v in validate(&nl, &ValidateOptions::default()) {
        println!("{v}");
    }
    let again = parse_netlist(&nl.serialize())?;
    println!("serialized form re-parses to the same graph: {}", nl.graph_eq(&again));
    print!("{}", nl.serialize());
    Ok(())
}
