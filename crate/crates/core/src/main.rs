use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rfsynth::flow::{net_requests, size_components, synthesize, Surrogate, SynthOptions};
use rfsynth::gdsii::{read_gds, Element};
use rfsynth::inductor::{generate_dataset, inverse_design, oracle_q, InductorSpec, InverseConfig, SampleRanges};
use rfsynth::netlist::{parse_netlist, validate, ComponentKind, Netlist, Severity, ValidateOptions};
use rfsynth::nn::{evaluate, save_checkpoint, train, write_dataset_csv, TrainConfig};
use rfsynth::placement::{nets_from_netlist, place};
use rfsynth::routing::{route_all, segments};
use rfsynth::tech::TechRules;

/// RF netlist-to-GDSII synthesis.
#[derive(Parser)]
#[command(name = "rfsynth", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Technology file (TOML); the built-in rules are used when omitted.
    #[arg(long)]
    tech: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Surrogate checkpoint; defaults to the tech file's setting.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the whole flow and write GDSII.
    Synth {
        netlist: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "out.gds")]
        out: PathBuf,
        /// Top structure name.
        #[arg(long, default_value = "TOP")]
        top: String,
        /// Stamp the library with the current time instead of 1970-01-01.
        #[arg(long)]
        timestamps: bool,
    },
    /// Train the Q surrogate on synthetic oracle data.
    Train {
        #[command(flatten)]
        common: Common,
        /// Number of samples.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 512)]
        batch: usize,
        #[arg(long, default_value = "surrogate.ckpt")]
        out: PathBuf,
        /// Also write the generated dataset as CSV.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Inverse-design one inductor layout.
    Invdesign {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Operating frequency, GHz.
        #[arg(long)]
        f: f64,
        /// Trace width, um.
        #[arg(long)]
        w: f64,
        /// Inductance, pH.
        #[arg(long)]
        l: f64,
        /// Stop once the predicted Q reaches this value.
        #[arg(long)]
        q_target: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Write the per-step trajectory as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Size and place a netlist; writes placement records as JSON.
    Place {
        netlist: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "placement.json")]
        out: PathBuf,
        /// Write the cost after every accepted step as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Size, place and route a netlist; writes a segment CSV.
    Route {
        netlist: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "routes.csv")]
        out: PathBuf,
    },
    /// Validate a netlist and optionally read back a GDSII file.
    Check {
        netlist: Option<PathBuf>,
        #[arg(long)]
        tech: Option<PathBuf>,
        /// Require every net to be declared with `.NET`.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        gds: Option<PathBuf>,
    },
}

enum Failure {
    /// Design does not meet its rules (exit 1).
    Design(String),
    /// Bad input or invocation (exit 2).
    Usage(String),
    /// Anything else (exit 3).
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Design(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Design(m) | Failure::Usage(m) | Failure::Internal(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn load_tech(path: Option<&Path>) -> Result<TechRules, Failure> {
    match path {
        Some(p) => TechRules::load(p).map_err(usage),
        None => {
            let mut t = TechRules::builtin();
            t.base_dir = std::env::current_dir().ok();
            Ok(t)
        }
    }
}

fn load_netlist(path: &Path) -> Result<Netlist, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_netlist(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn surrogate(tech: &TechRules, model: &ModelArgs, seed: u64) -> Result<Surrogate, Failure> {
    if let Some(p) = &model.checkpoint {
        return Surrogate::load(p).map_err(|e| usage(format!("{}: {e}", p.display())));
    }
    let path = tech.checkpoint_path();
    if !path.exists() {
        eprintln!(
            "warning: no surrogate checkpoint at {}; training one on synthetic data ({} samples, {} epochs)",
            path.display(),
            tech.inductor.train_samples,
            tech.inductor.train_epochs
        );
    }
    let (s, _) = Surrogate::load_or_train(tech, seed).map_err(internal)?;
    Ok(s)
}

fn surrogate_if_needed(netlist: &Netlist, tech: &TechRules, model: &ModelArgs, seed: u64) -> Result<Option<Surrogate>, Failure> {
    if netlist.components.iter().any(|c| c.kind == ComponentKind::Inductor) {
        surrogate(tech, model, seed).map(Some)
    } else {
        Ok(None)
    }
}

fn write_report<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(value).map_err(internal)?;
        std::fs::write(p, text).map_err(|e| internal(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Synth {
            netlist,
            common,
            model,
            out,
            top,
            timestamps,
        } => {
            let tech = load_tech(common.tech.as_deref())?;
            let nl = load_netlist(&netlist)?;
            let s = surrogate_if_needed(&nl, &tech, &model, common.seed)?;
            let opts = SynthOptions {
                seed: common.seed,
                top,
                real_timestamps: timestamps,
            };
            let mut r = synthesize(&nl, &tech, s.as_ref(), &opts).map_err(|e| Failure::Design(e.to_string()))?;
            std::fs::write(&out, &r.gds).map_err(|e| internal(format!("{}: {e}", out.display())))?;
            r.report.output = Some(out.display().to_string());
            println!("{}", r.report.render());
            write_report(common.report.as_deref(), &r.report)?;
            if !r.report.is_clean() {
                return Err(Failure::Design("routing left failures or spacing violations".into()));
            }
            Ok(())
        }
        Cmd::Train {
            common,
            n,
            epochs,
            batch,
            out,
            dataset,
        } => {
            let ds = generate_dataset(n, &SampleRanges::default(), common.seed);
            if let Some(p) = &dataset {
                let f = std::fs::File::create(p).map_err(|e| internal(format!("{}: {e}", p.display())))?;
                write_dataset_csv(&ds, f).map_err(internal)?;
            }
            let cfg = TrainConfig {
                batch_size: batch,
                max_epochs: epochs,
                seed: common.seed,
                log_every: 1,
                ..Default::default()
            };
            let (m, stats, report) = train(&ds, &cfg).map_err(usage)?;
            save_checkpoint(&out, &m, &stats).map_err(internal)?;
            let (x, y) = ds.test_rows();
            let metrics = evaluate(&m, &stats, &x, &y).map_err(internal)?;
            println!("{:<6} {:>10} {:>10} {:>10} {:>9} {:>8}", "split", "MAE", "MSE", "RMSE", "R2", "MAPE%");
            println!(
                "{:<6} {:>10.4} {:>10.4} {:>10.4} {:>9.5} {:>8.2}",
                "test", metrics.mae, metrics.mse, metrics.rmse, metrics.r2, metrics.mape
            );
            println!("checkpoint: {} (best epoch {:?})", out.display(), report.best_epoch.map(|e| e + 1));
            #[derive(Serialize)]
            struct TrainOut<'a> {
                metrics: &'a rfsynth::nn::Metrics,
                history: &'a rfsynth::nn::TrainReport,
            }
            write_report(
                common.report.as_deref(),
                &TrainOut {
                    metrics: &metrics,
                    history: &report,
                },
            )
        }
        Cmd::Invdesign {
            common,
            model,
            f,
            w,
            l,
            q_target,
            steps,
            lr,
            trace,
        } => {
            let tech = load_tech(common.tech.as_deref())?;
            let s = surrogate(&tech, &model, common.seed)?;
            let spec = InductorSpec::new(f, w, l);
            let defaults = InverseConfig::default();
            let cfg = InverseConfig {
                lr: lr.unwrap_or(tech.inductor.lr),
                max_steps: steps.unwrap_or(tech.inductor.steps),
                q_target,
                record_trace: trace.is_some(),
                ..defaults
            };
            let r = inverse_design(&s.model, &s.stats, &spec, &cfg).map_err(usage)?;
            if let Some(p) = &trace {
                let mut w = csv::Writer::from_path(p).map_err(internal)?;
                for t in &r.trace {
                    w.serialize(t).map_err(internal)?;
                }
                w.flush().map_err(internal)?;
            }
            #[derive(Serialize)]
            struct Record {
                f: f64,
                w: f64,
                l: f64,
                lv: f64,
                lh: f64,
                lcn: f64,
                q_pred: f64,
                q_oracle: Option<f64>,
                steps: usize,
                seconds: f64,
            }
            let rec = Record {
                f,
                w,
                l,
                lv: r.vars.lv,
                lh: r.vars.lh,
                lcn: r.vars.lcn,
                q_pred: r.q_pred,
                q_oracle: oracle_q(&spec, &r.vars).ok(),
                steps: r.steps,
                seconds: r.seconds,
            };
            println!("{}", serde_json::to_string_pretty(&rec).map_err(internal)?);
            write_report(common.report.as_deref(), &rec)
        }
        Cmd::Place {
            netlist,
            common,
            model,
            out,
            trace,
        } => {
            let tech = load_tech(common.tech.as_deref())?;
            let nl = load_netlist(&netlist)?;
            let s = surrogate_if_needed(&nl, &tech, &model, common.seed)?;
            let sized = size_components(&nl, &tech, s.as_ref()).map_err(|e| Failure::Design(e.to_string()))?;
            let nets = nets_from_netlist(&nl, &sized.footprints);
            let r = place(&sized.footprints, &nets, sized.frequency, &tech.em, &tech.place, common.seed);
            #[derive(Serialize)]
            struct Record<'a> {
                id: &'a str,
                x: f64,
                y: f64,
                theta: u32,
            }
            let records: Vec<Record> = sized
                .footprints
                .iter()
                .zip(&r.placement.positions)
                .map(|(fp, p)| Record {
                    id: &fp.id,
                    x: p.x,
                    y: p.y,
                    theta: p.theta.degrees(),
                })
                .collect();
            let text = serde_json::to_string_pretty(&records).map_err(internal)?;
            std::fs::write(&out, text).map_err(|e| internal(format!("{}: {e}", out.display())))?;
            if let Some(p) = &trace {
                let mut w = csv::Writer::from_path(p).map_err(internal)?;
                w.write_record(["step", "cost"]).map_err(internal)?;
                for (i, c) in r.trace.iter().enumerate() {
                    w.write_record([i.to_string(), c.to_string()]).map_err(internal)?;
                }
                w.flush().map_err(internal)?;
            }
            println!(
                "placed {} devices: spacing {:.3} um, HPWL {:.2} -> {:.2}, cost {:.3}; wrote {}",
                sized.footprints.len(),
                r.spacing,
                r.initial_hpwl,
                r.final_cost.hpwl,
                r.final_cost.total,
                out.display()
            );
            write_report(common.report.as_deref(), &r)
        }
        Cmd::Route {
            netlist,
            common,
            model,
            out,
        } => {
            let tech = load_tech(common.tech.as_deref())?;
            let nl = load_netlist(&netlist)?;
            let s = surrogate_if_needed(&nl, &tech, &model, common.seed)?;
            let sized = size_components(&nl, &tech, s.as_ref()).map_err(|e| Failure::Design(e.to_string()))?;
            let nets = nets_from_netlist(&nl, &sized.footprints);
            let placed = place(&sized.footprints, &nets, sized.frequency, &tech.em, &tech.place, common.seed);
            let reqs = net_requests(&nl, &sized, &tech);
            let rc = tech.route_config(sized.frequency);
            let routed = route_all(&sized.footprints, &placed.placement, &reqs, &rc).map_err(|e| Failure::Design(e.to_string()))?;
            let mut w = csv::Writer::from_path(&out).map_err(internal)?;
            w.write_record(["net", "layer", "x0", "y0", "x1", "y1", "width"]).map_err(internal)?;
            let f = |v: f64| format!("{v:.3}");
            for st in &routed.stubs {
                for seg in st.points.windows(2) {
                    let layer = routed.layers[st.layer as usize].clone();
                    w.write_record([st.net.clone(), layer, f(seg[0].x), f(seg[0].y), f(seg[1].x), f(seg[1].y), f(routed.width)])
                        .map_err(internal)?;
                }
            }
            for p in &routed.paths {
                for (a, b) in segments(&p.points) {
                    let layer = routed.layers[a.layer as usize].clone();
                    let pt = |n: &rfsynth::routing::Node| (n.ix as f64 * routed.pitch, n.iy as f64 * routed.pitch);
                    let ((x0, y0), (x1, y1)) = (pt(&a), pt(&b));
                    w.write_record([p.net.clone(), layer, f(x0), f(y0), f(x1), f(y1), f(p.width)]).map_err(internal)?;
                }
            }
            w.flush().map_err(internal)?;
            for fl in &routed.failures {
                println!("failure: {}", fl.reason);
            }
            for v in &routed.violations {
                println!(
                    "violation: {:?} {} vs {} on layer {}: {:.4} um < {:.4} um",
                    v.kind, v.net, v.other, routed.layers[v.layer as usize], v.distance, v.required
                );
            }
            println!(
                "routed {} paths, {:.1} um of wire, {} failures, {} violations; wrote {}",
                routed.paths.len(),
                routed.wirelength(),
                routed.failures.len(),
                routed.violations.len(),
                out.display()
            );
            write_report(common.report.as_deref(), &routed)?;
            if !routed.is_clean() {
                return Err(Failure::Design("routing left failures or spacing violations".into()));
            }
            Ok(())
        }
        Cmd::Check {
            netlist,
            tech,
            strict,
            gds,
        } => {
            if netlist.is_none() && gds.is_none() {
                return Err(usage("nothing to check: give a netlist and/or --gds"));
            }
            let mut errors = 0;
            if let Some(path) = netlist {
                let tech = load_tech(tech.as_deref())?;
                let nl = load_netlist(&path)?;
                let opts = ValidateOptions {
                    strict,
                    default_inductor_width: Some(tech.inductor.default_width),
                };
                for v in validate(&nl, &opts) {
                    eprintln!("{v}");
                    errors += usize::from(v.severity == Severity::Error);
                }
                println!("{}: {} components, {} nets, {} errors", path.display(), nl.components.len(), nl.nets.len(), errors);
            }
            if let Some(path) = gds {
                let bytes = std::fs::read(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                let lib = read_gds(&bytes).map_err(|e| Failure::Design(format!("{}: {e}", path.display())))?;
                println!("{}: library {} with {} structures", path.display(), lib.name, lib.structures.len());
                for s in &lib.structures {
                    let count = |pred: fn(&Element) -> bool| s.elements.iter().filter(|e| pred(e)).count();
                    println!(
                        "  {:<32} {:>4} boundaries {:>4} paths {:>4} refs",
                        s.name,
                        count(|e| matches!(e, Element::Boundary { .. })),
                        count(|e| matches!(e, Element::Path { .. })),
                        count(|e| matches!(e, Element::SRef { .. }))
                    );
                }
            }
            if errors > 0 {
                return Err(Failure::Design(format!("{errors} netlist errors")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
