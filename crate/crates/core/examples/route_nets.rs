//! Sizes, places and routes a small inductor-free netlist, then prints the
//! routed segments and the spacing check result.
//!
//! cargo run --release --example route_nets

use rfsynth::flow::{net_requests, size_components};
use rfsynth::netlist::parse_netlist;
use rfsynth::placement::{nets_from_netlist, place};
use rfsynth::routing::{route_all, segments};
use rfsynth::tech::TechRules;

const NETLIST: &str = "\
* common-source stage with RC load
.FREQ 12
.NET out W=2
M1 in out 0
R1 vdd out 200
C1 out load 0.3
R2 in bias 1000
C2 load 0 0.1
.END
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tech = TechRules::builtin();
    let nl = parse_netlist(NETLIST)?;
    let sized = size_components(&nl, &tech, None)?;
    let nets = nets_from_netlist(&nl, &sized.footprints);
    let placed = place(&sized.footprints, &nets, sized.frequency, &tech.em, &tech.place, 1);
    let cfg = tech.route_config(sized.frequency);
    println!("s_dev {:.3} um, s_same {:.3} um, pitch {} um", cfg.s_dev, cfg.s_same, cfg.pitch);

    let routed = route_all(&sized.footprints, &placed.placement, &net_requests(&nl, &sized, &tech), &cfg)?;
    for p in &routed.paths {
        let runs = segments(&p.points);
        let vias = runs.windows(2).filter(|w| w[0].1.layer != w[1].0.layer).count();
        println!("  {:<6} {:>4} nodes, {} runs, {} vias", p.net, p.points.len(), runs.len(), vias);
    }
    for v in &routed.violations {
        println!("  violation: {:?} {} vs {}, {:.3} < {:.3} um", v.kind, v.net, v.other, v.distance, v.required);
    }
    for f in &routed.failures {
        println!("  failed: {}", f.reason);
    }
    println!(
        "{:.1} um of wire, {} stubs, {} failures, {} spacing violations",
        routed.wirelength(),
        routed.stubs.len(),
        routed.failures.len(),
        routed.violations.len()
    );
    Ok(())
}
