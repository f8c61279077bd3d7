use std::process::Command;

use rfsynth::flow::{synthesize, Stage, Surrogate, SynthOptions};
use rfsynth::netlist::parse_netlist;
use rfsynth::nn::save_checkpoint;
use rfsynth::routing::check_spacing;
use rfsynth::tech::TechRules;

const PA: &str = include_str!("../fixtures/class_b_pa.net");

const NO_INDUCTORS: &str = "\
M1 in out 0
R1 vdd out 200
C1 out load 0.3
.FREQ 12
";

fn small_surrogate() -> Surrogate {
    let mut tech = TechRules::builtin();
    tech.inductor.train_samples = 4000;
    tech.inductor.train_epochs = 8;
    Surrogate::train_fallback(&tech, 5).unwrap()
}

#[test]
fn class_b_pa_end_to_end() {
    let tech = TechRules::builtin();
    let s = small_surrogate();
    let nl = parse_netlist(PA).unwrap();
    let a = synthesize(&nl, &tech, Some(&s), &SynthOptions::default()).unwrap();
    let b = synthesize(&nl, &tech, Some(&s), &SynthOptions::default()).unwrap();
    assert_eq!(a.gds, b.gds, "same seed, same bytes");
    assert_eq!(a.report.components.len(), 5);
    assert_eq!(a.report.inductors.len(), 2);

    let fps = &a.sized.footprints;
    let pl = &a.placement.placement;
    let bodies: Vec<_> = (0..fps.len()).map(|i| (fps[i].id.clone(), pl.bbox(fps, i))).collect();
    let cfg = tech.route_config(a.report.frequency_ghz);
    let audit = check_spacing(&a.routed, &bodies, &cfg);
    assert_eq!(a.report.violations, audit.len());
    assert_eq!(a.report.violations, a.routed.violations.len());
    assert!(a.report.final_hpwl <= a.report.initial_hpwl + 1e-9);
}

#[test]
fn inductor_needs_a_model() {
    let nl = parse_netlist(PA).unwrap();
    let e = synthesize(&nl, &TechRules::builtin(), None, &SynthOptions::default()).unwrap_err();
    assert_eq!(e.stage, Stage::Inductor);
}

#[test]
fn validation_stops_the_flow() {
    // an inductor with no frequency anywhere
    let nl = parse_netlist("L1 a b 300 W=4\nC1 a 0 1\n").unwrap();
    let e = synthesize(&nl, &TechRules::builtin(), None, &SynthOptions::default()).unwrap_err();
    assert_eq!(e.stage, Stage::Validate);
}

#[test]
fn seed_changes_only_placement_side() {
    let nl = parse_netlist(NO_INDUCTORS).unwrap();
    let tech = TechRules::builtin();
    let run = |seed| {
        let opts = SynthOptions { seed, ..Default::default() };
        synthesize(&nl, &tech, None, &opts).unwrap()
    };
    let (a, b) = (run(1), run(2));
    assert_eq!(a.sized.cells.len(), b.sized.cells.len());
    for (x, y) in a.sized.cells.iter().zip(&b.sized.cells) {
        assert_eq!(x.cell, y.cell);
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rfsynth"))
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("amp.net");
    std::fs::write(&net, NO_INDUCTORS).unwrap();
    let gds = dir.path().join("amp.gds");

    assert_eq!(code(bin().arg("bogus")), 2);
    assert_eq!(code(bin().arg("--help")), 0);
    assert_eq!(code(bin().args(["check", "/nonexistent/x.net"])), 2);
    assert_eq!(code(bin().arg("check").arg(&net)), 0);
    assert_eq!(code(bin().arg("synth").arg(&net).arg("--out").arg(&gds)), 0);
    let bytes = std::fs::read(&gds).unwrap();
    assert!(rfsynth::gdsii::read_gds(&bytes).is_ok());
    assert_eq!(code(bin().arg("check").arg("--gds").arg(&gds)), 0);

    let routes = dir.path().join("routes.csv");
    assert_eq!(code(bin().arg("route").arg(&net).arg("--out").arg(&routes)), 0);
    let text = std::fs::read_to_string(&routes).unwrap();
    assert!(text.starts_with("net,layer,x0,y0,x1,y1,width"));

    let placed = dir.path().join("placement.json");
    assert_eq!(code(bin().arg("place").arg(&net).arg("--out").arg(&placed)), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&placed).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);

    let bad = dir.path().join("bad.net");
    std::fs::write(&bad, "L1 a b 300 W=4\n").unwrap();
    assert_eq!(code(bin().arg("check").arg(&bad)), 1);
    std::fs::write(&bad, "R1 a 100\n").unwrap();
    assert_eq!(code(bin().arg("check").arg(&bad)), 2);
}

#[test]
fn cli_synth_with_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let s = small_surrogate();
    let ckpt = dir.path().join("model.ckpt");
    save_checkpoint(&ckpt, &s.model, &s.stats).unwrap();
    let net = dir.path().join("pa.net");
    std::fs::write(&net, PA).unwrap();
    let out = |name: &str| dir.path().join(name);
    let run = |gds: &std::path::Path| {
        bin().arg("synth").arg(&net).arg("--checkpoint").arg(&ckpt).arg("--out").arg(gds).output().unwrap()
    };
    let first = run(&out("a.gds"));
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    run(&out("b.gds"));
    assert_eq!(std::fs::read(out("a.gds")).unwrap(), std::fs::read(out("b.gds")).unwrap());
}
