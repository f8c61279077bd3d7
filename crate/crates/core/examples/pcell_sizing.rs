//! Sizes capacitors and resistors to target values on the default stacks.
//!
//! cargo run --example pcell_sizing -- [C pF ...] [R ohm ...]
//!
//! Values ending in `ohm` are resistors, the rest capacitors in pF.

use rfsynth::pcell::{optimize_capacitor, optimize_resistor};
use rfsynth::tech::TechRules;

fn main() {
    let tech = TechRules::builtin();
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        args = ["0.05", "0.5", "2.0", "50ohm", "500ohm", "10000ohm"].map(String::from).to_vec();
    }
    for a in &args {
        if let Some(r) = a.strip_suffix("ohm") {
            let r: f64 = r.parse().expect("resistance");
            match optimize_resistor(r, &tech.pcell.res, tech.pcell.tol) {
                Ok(d) => println!(
                    "R {r:>9.1} ohm -> W {:.2} L {:.2} um, {}s x {}p, {:.2} ohm, area {:.2} um^2",
                    d.w, d.l, d.ns, d.np, d.r_ohm, d.area
                ),
                Err(e) => println!("R {r:>9.1} ohm -> {e}"),
            }
        } else {
            let c: f64 = a.parse().expect("capacitance");
            match optimize_capacitor(c, &tech.pcell.cap_stacks, tech.pcell.tol) {
                Ok(d) => println!(
                    "C {c:>9.3} pF  -> {} W {:.2} L {:.2} um, {:.4} pF, area {:.2} um^2",
                    d.stack.name, d.w, d.l, d.c_pf, d.area
                ),
                Err(e) => println!("C {c:>9.3} pF  -> {e}"),
            }
        }
    }
}
