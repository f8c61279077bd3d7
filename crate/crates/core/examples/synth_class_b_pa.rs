//! Full netlist-to-GDSII run on the bundled class-B PA fixture.
//!
//! cargo run --release --example synth_class_b_pa -- [model.ckpt] [out.gds]
//!
//! Without a checkpoint a small surrogate is trained first (about a minute).

use std::path::PathBuf;

use rfsynth::flow::{synthesize, Surrogate, SynthOptions};
use rfsynth::netlist::parse_netlist;
use rfsynth::tech::TechRules;

const FIXTURE: &str = include_str!("../fixtures/class_b_pa.net");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tech = TechRules::builtin();
    let surrogate = match args.first() {
        Some(p) => Surrogate::load(&PathBuf::from(p))?,
        None => {
            eprintln!("no checkpoint given; training a surrogate on synthetic data");
            Surrogate::train_fallback(&tech, 7)?
        }
    };
    let netlist = parse_netlist(FIXTURE)?;
    let result = synthesize(&netlist, &tech, Some(&surrogate), &SynthOptions::default())?;
    println!("{}", result.report.render());
    let out = args.get(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("class_b_pa.gds"));
    std::fs::write(&out, &result.gds)?;
    println!("{} bytes -> {}", result.gds.len(), out.display());
    Ok(())
}
