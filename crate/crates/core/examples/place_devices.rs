//! Places a handful of boxed devices and prints the cost trace summary.
//!
//! cargo run --release --example place_devices -- [f_ghz] [seed]

use rfsynth::geom::Dir;
use rfsynth::netlist::ComponentKind;
use rfsynth::placement::{hpwl, place, DeviceFootprint, EmRules, PlaceConfig, PlaceNet};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let f: f64 = args.first().map_or(28.0, |s| s.parse().expect("frequency"));
    let seed: u64 = args.get(1).map_or(1, |s| s.parse().expect("seed"));

    let two = [("A", Dir::Left), ("B", Dir::Right)];
    let mut fps = vec![
        DeviceFootprint::boxed("M1", 10.0, 10.0, &[("G", Dir::Left), ("D", Dir::Up), ("S", Dir::Down)]),
        DeviceFootprint::boxed("L1", 60.0, 50.0, &two),
        DeviceFootprint::boxed("L2", 40.0, 40.0, &two),
        DeviceFootprint::boxed("C1", 20.0, 12.0, &two),
        DeviceFootprint::boxed("R1", 4.0, 8.0, &two),
    ];
    fps[0].kind = ComponentKind::Nmos;
    let net = |name: &str, weight: f64, pins: &[(usize, usize)]| PlaceNet {
        name: name.into(),
        weight,
        pins: pins.to_vec(),
    };
    let nets = vec![
        net("drain", 3.0, &[(0, 1), (1, 1), (3, 0)]),
        net("out", 2.0, &[(3, 1), (2, 0)]),
        net("gate", 1.0, &[(0, 0), (4, 1)]),
    ];
    let r = place(&fps, &nets, f, &EmRules::default(), &PlaceConfig::default(), seed);
    println!("spacing {:.3} um at {f} GHz", r.spacing);
    println!(
        "HPWL {:.2} -> {:.2} um over {} trace points, final cost {:.3} (overlap {:.3})",
        r.initial_hpwl,
        hpwl(&fps, &r.placement, &nets),
        r.trace.len(),
        r.final_cost.total,
        r.final_cost.overlap
    );
    for (fp, p) in fps.iter().zip(&r.placement.positions) {
        println!("  {:<3} at ({:7.2}, {:7.2}) rotated {:>3}", fp.id, p.x, p.y, p.theta.degrees());
    }
}
