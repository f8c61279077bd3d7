//! Inverse-designs a few inductors through a trained surrogate and scores
//! the results with the synthetic oracle.
//!
//! cargo run --release --example inverse_design -- [model.ckpt]
//!
//! Without a checkpoint a small model is trained first (about a minute).

use rfsynth::flow::Surrogate;
use rfsynth::inductor::{grid_search_max, inverse_design, oracle_q, InductorSpec, InverseConfig};
use rfsynth::tech::TechRules;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = match std::env::args().nth(1) {
        Some(p) => Surrogate::load(p.as_ref())?,
        None => Surrogate::train_fallback(&TechRules::builtin(), 3)?,
    };
    let cfg = InverseConfig {
        record_trace: false,
        ..Default::default()
    };
    println!("{:>6} {:>4} {:>6} | {:>7} {:>7} {:>7} | {:>7} {:>8} {:>9} | {:>6}", "f", "W", "L", "Lv", "Lh", "Lcn", "Q_pred", "Q_oracle", "Q_gridmax", "ms");
    for (f, w, l) in [(2.4, 5.0, 900.0), (10.0, 3.0, 500.0), (28.0, 4.0, 300.0), (60.0, 8.0, 120.0), (90.0, 2.0, 60.0)] {
        let spec = InductorSpec::new(f, w, l);
        let r = inverse_design(&s.model, &s.stats, &spec, &cfg)?;
        let q = oracle_q(&spec, &r.vars)?;
        let (_, qmax) = grid_search_max(&spec)?;
        println!(
            "{f:>6.1} {w:>4.1} {l:>6.0} | {:>7.2} {:>7.2} {:>7.2} | {:>7.2} {:>8.2} {:>9.2} | {:>6.0}",
            r.vars.lv,
            r.vars.lh,
            r.vars.lcn,
            r.q_pred,
            q,
            qmax,
            r.seconds * 1e3
        );
    }
    Ok(())
}
