//! The netlist-to-GDSII pipeline: validate, size passives, design
//! inductors, place, route, assemble.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::gdsii::{assemble_design, now_timestamps, write_gds, ComponentCell, GdsLibrary, EPOCH};
use crate::geom::{CellGeometry, Dir, PinShape, Point};
use crate::inductor::{generate_dataset, inductor_geometry, inverse_design, InductorSpec, InverseConfig, LayoutVars, SampleRanges};
use crate::netlist::{validate, ComponentKind, Netlist, Severity, ValidateOptions};
use crate::nn::{load_checkpoint, save_checkpoint, train, MlpModel, NormStats, TrainConfig};
use crate::pcell::{cap_geometry, optimize_capacitor, optimize_resistor, res_geometry};
use crate::placement::{hpwl, nets_from_netlist, place, DeviceFootprint, PlacementResult};
use crate::routing::{route_all, NetRequest, PinRequest, RoutedDesign};
use crate::tech::TechRules;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    Validate,
    Pcell,
    Inductor,
    Place,
    Route,
    Gds,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Validate => "validate",
            Stage::Pcell => "pcell",
            Stage::Inductor => "inductor",
            Stage::Place => "place",
            Stage::Route => "route",
            Stage::Gds => "gds",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {message}")]
pub struct FlowError {
    pub stage: Stage,
    pub message: String,
}

fn fail(stage: Stage) -> impl Fn(String) -> FlowError {
    move |message| FlowError { stage, message }
}

/// Trained Q model with its input normalization.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub model: MlpModel,
    pub stats: NormStats,
}

impl Surrogate {
    pub fn load(path: &Path) -> Result<Self, crate::nn::NnError> {
        let (model, stats) = load_checkpoint(path, None)?;
        Ok(Self { model, stats })
    }

    /// Trains the full-width model on synthetic oracle data using the
    /// tech file's fallback settings.
    pub fn train_fallback(tech: &TechRules, seed: u64) -> Result<Self, crate::nn::NnError> {
        let r = &tech.inductor;
        let ds = generate_dataset(r.train_samples, &SampleRanges::default(), seed);
        let cfg = TrainConfig {
            batch_size: r.train_batch,
            max_epochs: r.train_epochs,
            seed,
            ..Default::default()
        };
        let (model, stats, _) = train(&ds, &cfg)?;
        Ok(Self { model, stats })
    }

    /// Loads the tech file's checkpoint, training and saving one first when
    /// it does not exist. Returns the model and whether training ran.
    pub fn load_or_train(tech: &TechRules, seed: u64) -> Result<(Self, bool), crate::nn::NnError> {
        let path = tech.checkpoint_path();
        if path.exists() {
            return Ok((Self::load(&path)?, false));
        }
        let s = Self::train_fallback(tech, seed)?;
        save_checkpoint(&path, &s.model, &s.stats)?;
        Ok((s, true))
    }
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub seed: u64,
    pub top: String,
    /// Stamp the library with the current time instead of the epoch.
    pub real_timestamps: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            top: "TOP".into(),
            real_timestamps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub id: String,
    pub kind: ComponentKind,
    pub cell: String,
    pub width: f64,
    pub height: f64,
    /// Sized value (Ohm, pF) or surrogate Q for inductors.
    pub achieved: Option<f64>,
    pub target: Option<f64>,
    /// Drawn area of the sized element, um^2.
    pub area: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InductorReport {
    pub id: String,
    pub spec: InductorSpec,
    pub vars: LayoutVars,
    pub q_pred: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct PipelineReport {
    pub stage_seconds: Vec<(Stage, f64)>,
    pub frequency_ghz: f64,
    pub components: Vec<ComponentReport>,
    pub inductors: Vec<InductorReport>,
    pub spacing: f64,
    pub initial_hpwl: f64,
    pub final_hpwl: f64,
    pub final_cost: f64,
    pub wirelength: f64,
    pub route_failures: Vec<String>,
    pub violations: usize,
    pub warnings: Vec<String>,
    pub output: Option<String>,
}

impl PipelineReport {
    pub fn is_clean(&self) -> bool {
        self.route_failures.is_empty() && self.violations == 0
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        use fmt::Write;
        let _ = writeln!(w, "operating frequency {:.3} GHz, device spacing {:.3} um", self.frequency_ghz, self.spacing);
        for (stage, t) in &self.stage_seconds {
            let _ = writeln!(w, "  {stage:<9} {t:8.3} s");
        }
        for c in &self.components {
            let _ = writeln!(w, "  {:<6} {:<28} {:>9.2} x {:<9.2} {}", c.id, c.cell, c.width, c.height, c.detail);
        }
        let _ = writeln!(
            w,
            "placement: HPWL {:.2} -> {:.2} um, cost {:.3}",
            self.initial_hpwl, self.final_hpwl, self.final_cost
        );
        let _ = writeln!(
            w,
            "routing: {:.1} um of wire, {} failures, {} spacing violations",
            self.wirelength,
            self.route_failures.len(),
            self.violations
        );
        for f in &self.route_failures {
            let _ = writeln!(w, "  failure: {f}");
        }
        for m in &self.warnings {
            let _ = writeln!(w, "{m}");
        }
        if let Some(o) = &self.output {
            let _ = writeln!(w, "wrote {o}");
        }
        let _ = write!(w, "status: {}", if self.is_clean() { "clean" } else { "NOT clean" });
        s
    }
}

/// Sized cells in netlist component order.
#[derive(Debug, Clone)]
pub struct SizedDesign {
    pub frequency: f64,
    pub cells: Vec<ComponentCell>,
    pub footprints: Vec<DeviceFootprint>,
    pub components: Vec<ComponentReport>,
    pub inductors: Vec<InductorReport>,
    pub warnings: Vec<String>,
}

/// Everything the pipeline produced.
#[derive(Debug, Clone)]
pub struct SynthResult {
    pub report: PipelineReport,
    pub sized: SizedDesign,
    pub placement: PlacementResult,
    pub routed: RoutedDesign,
    pub library: GdsLibrary,
    pub gds: Vec<u8>,
}

fn nmos_geometry(w: f64, h: f64) -> CellGeometry {
    let pin = |name: &str, at, facing| PinShape {
        name: name.into(),
        at,
        facing,
    };
    CellGeometry {
        width: w,
        height: h,
        shapes: Vec::new(),
        pins: vec![
            pin("G", Point::new(0.0, h / 2.0), Dir::Left),
            pin("D", Point::new(w / 2.0, h), Dir::Up),
            pin("S", Point::new(w / 2.0, 0.0), Dir::Down),
        ],
    }
}

fn nm(v: f64) -> i64 {
    (v * 1000.0).round() as i64
}

fn snap_nm(v: f64) -> f64 {
    nm(v) as f64 / 1000.0
}

/// Operating frequency: `.FREQ`, else the highest inductor hint (spacing
/// grows with frequency), else the low end of the EM table.
pub fn operating_frequency(netlist: &Netlist, tech: &TechRules) -> (f64, Option<String>) {
    if let Some(f) = netlist.global_freq {
        return (f, None);
    }
    if let Some(f) = netlist.operating_freq() {
        return (f, Some(format!("warning: no .FREQ; using inductor hint {f} GHz for spacing rules")));
    }
    let f = tech.em.f_low;
    let msg = (!netlist.components.is_empty()).then(|| format!("warning: no .FREQ; spacing rules evaluated at {f} GHz"));
    (f, msg)
}

/// Checks the netlist, then sizes every component into a cell.
pub fn size_components(netlist: &Netlist, tech: &TechRules, surrogate: Option<&Surrogate>) -> Result<SizedDesign, FlowError> {
    let opts = ValidateOptions {
        strict: false,
        default_inductor_width: Some(tech.inductor.default_width),
    };
    let (errors, notes): (Vec<_>, Vec<_>) = validate(netlist, &opts).into_iter().partition(|v| v.severity == Severity::Error);
    let errors: Vec<String> = errors.iter().map(|v| v.to_string()).collect();
    if !errors.is_empty() {
        return Err(FlowError {
            stage: Stage::Validate,
            message: errors.join("; "),
        });
    }
    let (frequency, warn) = operating_frequency(netlist, tech);
    let mut out = SizedDesign {
        frequency,
        cells: Vec::new(),
        footprints: Vec::new(),
        components: Vec::new(),
        inductors: Vec::new(),
        warnings: notes.iter().map(|v| v.to_string()).chain(warn).collect(),
    };
    let pc = &tech.pcell;
    for c in &netlist.components {
        let value = c.value;
        let (cell, geometry, report) = match c.kind {
            ComponentKind::Resistor => {
                let target = value.expect("validated");
                let d = optimize_resistor(target, &pc.res, pc.tol).map_err(|e| fail(Stage::Pcell)(format!("{}: {e}", c.id)))?;
                let g = res_geometry(&d, &pc.res, &pc.res_layer, &pc.contact_layer);
                let name = format!("R_{}_{}_{}x{}", nm(d.w) / 10, nm(d.l) / 10, d.ns, d.np);
                let detail = format!("R = {:.3} ohm, W {:.2} L {:.2}, {}s x {}p", d.r_ohm, d.w, d.l, d.ns, d.np);
                (name, g, (Some(d.r_ohm), Some(target), d.area, detail))
            }
            ComponentKind::Capacitor => {
                let target = value.expect("validated");
                let d = optimize_capacitor(target, &pc.cap_stacks, pc.tol).map_err(|e| fail(Stage::Pcell)(format!("{}: {e}", c.id)))?;
                let g = cap_geometry(&d);
                let name = format!("C_{}_{}_{}", d.stack.name, nm(d.w) / 10, nm(d.l) / 10);
                let detail = format!("C = {:.5} pF on {}, W {:.2} L {:.2}", d.c_pf, d.stack.name, d.w, d.l);
                (name, g, (Some(d.c_pf), Some(target), d.area, detail))
            }
            ComponentKind::Inductor => {
                let Some(s) = surrogate else {
                    return Err(fail(Stage::Inductor)(format!("{}: no surrogate model loaded", c.id)));
                };
                let spec = InductorSpec::new(
                    c.freq_hint.unwrap_or(frequency),
                    c.width_hint.unwrap_or(tech.inductor.default_width),
                    value.expect("validated"),
                );
                let ranges = SampleRanges::default();
                if !ranges.contains(&spec) {
                    out.warnings.push(format!("warning: {}: spec {:?} lies outside the surrogate's training box", c.id, spec));
                }
                let cfg = InverseConfig {
                    lr: tech.inductor.lr,
                    max_steps: tech.inductor.steps,
                    record_trace: false,
                    ..Default::default()
                };
                let r = inverse_design(&s.model, &s.stats, &spec, &cfg).map_err(|e| fail(Stage::Inductor)(format!("{}: {e}", c.id)))?;
                let vars = LayoutVars::new(snap_nm(r.vars.lv), snap_nm(r.vars.lh), snap_nm(r.vars.lcn));
                let g = inductor_geometry(&spec, &vars, &tech.inductor.layer).map_err(|e| fail(Stage::Inductor)(format!("{}: {e}", c.id)))?;
                let name = format!("L_{}_{}_{}_{}", nm(spec.w), nm(vars.lv), nm(vars.lh), nm(vars.lcn));
                let area: f64 = g.shapes.iter().map(|s| s.rect.area()).sum();
                let detail = format!(
                    "Lv {:.3} Lh {:.3} Lcn {:.3}, predicted Q {:.2} ({} steps)",
                    vars.lv, vars.lh, vars.lcn, r.q_pred, r.steps
                );
                out.inductors.push(InductorReport {
                    id: c.id.clone(),
                    spec,
                    vars,
                    q_pred: r.q_pred,
                    steps: r.steps,
                });
                (name, g, (Some(r.q_pred), None, area, detail))
            }
            ComponentKind::Nmos => {
                let (w, h) = (tech.nmos.width, tech.nmos.height);
                let name = format!("NMOS_{}_{}", nm(w), nm(h));
                (name, nmos_geometry(w, h), (None, None, w * h, "three-pin box".to_string()))
            }
        };
        out.footprints.push(DeviceFootprint::from_geometry(&c.id, c.kind, &geometry));
        out.components.push(ComponentReport {
            id: c.id.clone(),
            kind: c.kind,
            cell: cell.clone(),
            width: geometry.width,
            height: geometry.height,
            achieved: report.0,
            target: report.1,
            area: report.2,
            detail: report.3,
        });
        out.cells.push(ComponentCell {
            id: c.id.clone(),
            cell,
            geometry,
        });
    }
    Ok(out)
}

/// Routing requests in netlist net order; inductor pins sit on the
/// inductor layer, all others on the first routing layer.
pub fn net_requests(netlist: &Netlist, sized: &SizedDesign, tech: &TechRules) -> Vec<NetRequest> {
    let ind_layer = tech
        .routing
        .layers
        .iter()
        .position(|l| *l == tech.inductor.layer)
        .unwrap_or(0) as u8;
    netlist
        .nets
        .iter()
        .map(|n| NetRequest {
            name: n.name.clone(),
            weight: n.weight,
            pins: n
                .pins
                .iter()
                .filter_map(|p| {
                    let device = sized.footprints.iter().position(|f| f.id == p.component)?;
                    let layer = if sized.footprints[device].kind == ComponentKind::Inductor { ind_layer } else { 0 };
                    Some(PinRequest {
                        device,
                        pin: p.terminal,
                        layer,
                    })
                })
                .collect(),
        })
        .collect()
}

/// Runs every stage. Routing failures and spacing violations do not abort;
/// they are reported and make the report unclean.
pub fn synthesize(netlist: &Netlist, tech: &TechRules, surrogate: Option<&Surrogate>, opts: &SynthOptions) -> Result<SynthResult, FlowError> {
    let mut times = Vec::new();
    let t = Instant::now();
    let sized = size_components(netlist, tech, surrogate)?;
    let t_size = t.elapsed().as_secs_f64();
    times.push((Stage::Pcell, t_size));

    let t = Instant::now();
    let pnets = nets_from_netlist(netlist, &sized.footprints);
    let placement = place(&sized.footprints, &pnets, sized.frequency, &tech.em, &tech.place, opts.seed);
    times.push((Stage::Place, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let reqs = net_requests(netlist, &sized, tech);
    let rc = tech.route_config(sized.frequency);
    let routed = route_all(&sized.footprints, &placement.placement, &reqs, &rc).map_err(|e| fail(Stage::Route)(e.to_string()))?;
    times.push((Stage::Route, t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let ts = if opts.real_timestamps { now_timestamps() } else { EPOCH };
    let library = assemble_design(
        &opts.top,
        &sized.cells,
        &sized.footprints,
        &placement.placement,
        Some(&routed),
        &tech.layers,
        ts,
    )
    .map_err(|e| fail(Stage::Gds)(e.to_string()))?;
    let gds = write_gds(&library).map_err(|e| fail(Stage::Gds)(e.to_string()))?;
    times.push((Stage::Gds, t.elapsed().as_secs_f64()));

    let report = PipelineReport {
        stage_seconds: times,
        frequency_ghz: sized.frequency,
        components: sized.components.clone(),
        inductors: sized.inductors.clone(),
        spacing: placement.spacing,
        initial_hpwl: placement.initial_hpwl,
        final_hpwl: hpwl(&sized.footprints, &placement.placement, &pnets),
        final_cost: placement.final_cost.total,
        wirelength: routed.wirelength(),
        route_failures: routed.failures.iter().map(|f| f.reason.clone()).collect(),
        violations: routed.violations.len(),
        warnings: sized.warnings.clone(),
        output: None,
    };
    Ok(SynthResult {
        report,
        sized,
        placement,
        routed,
        library,
        gds,
    })
}
