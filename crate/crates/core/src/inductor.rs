//! Closed-form Q oracle standing in for EM simulation, dataset generation,
//! gradient-based layout search through the surrogate, and loop geometry.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geom::{CellGeometry, Dir, PinShape, Point, Rect, Shape};
use crate::nn::{AdamState, Dataset, MlpModel, NnError, NormStats, SingleEval};

#[derive(Debug, thiserror::Error)]
pub enum InductorError {
    #[error("oracle input out of domain: {0}")]
    Domain(String),
    #[error("no feasible layout box for trace width {w} um")]
    InfeasibleBox { w: f64 },
    #[error("invalid inductor geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Target operating point: `f` in GHz, trace width `w` in um, inductance `l` in pH.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InductorSpec {
    pub f: f64,
    pub w: f64,
    pub l: f64,
}

impl InductorSpec {
    pub fn new(f: f64, w: f64, l: f64) -> Self {
        Self { f, w, l }
    }
}

/// Loop dimensions in um: vertical extent, horizontal extent, feed gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayoutVars {
    pub lv: f64,
    pub lh: f64,
    pub lcn: f64,
}

impl LayoutVars {
    pub fn new(lv: f64, lh: f64, lcn: f64) -> Self {
        Self { lv, lh, lcn }
    }

    fn to_array(self) -> [f64; 3] {
        [self.lv, self.lh, self.lcn]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

pub const BOX_MAX: f64 = 100.0;
pub const LCN_MIN: f64 = 1.0;
pub const LCN_MAX: f64 = 50.0;

/// Lower and upper bounds of `(Lv, Lh, Lcn)` for trace width `w`.
pub fn layout_bounds(w: f64) -> Result<([f64; 3], [f64; 3]), InductorError> {
    if !(w > 0.0) || w + 2.0 > BOX_MAX || 2.0 * w + 4.0 > BOX_MAX {
        return Err(InductorError::InfeasibleBox { w });
    }
    Ok(([w + 2.0, 2.0 * w + 4.0, LCN_MIN], [BOX_MAX, BOX_MAX, LCN_MAX]))
}

/// Coordinate-wise projection onto the feasible box.
pub fn clamp_to_constraints(v: LayoutVars, w: f64) -> Result<LayoutVars, InductorError> {
    let (lo, hi) = layout_bounds(w)?;
    let a = v.to_array();
    Ok(LayoutVars::from_array([0, 1, 2].map(|i| a[i].clamp(lo[i], hi[i]))))
}

/// Self-resonance frequency (GHz) of the oracle.
pub fn self_resonance(w: f64, l: f64) -> f64 {
    400.0 / (l / 10.0).sqrt() / (1.0 + 0.1 * w)
}

/// Oracle's optimal vertical extent for inductance `l`.
pub fn optimal_lv(l: f64) -> f64 {
    25.0 + 40.0 * (l / 50.0).ln() / 20f64.ln()
}

/// Oracle's optimal horizontal extent at frequency `f`.
pub fn optimal_lh(f: f64) -> f64 {
    65.0 - 40.0 * (f - 1.0) / 99.0
}

pub const ORACLE_SIGMA: f64 = 50.0;

/// Synthetic quality factor for `(f, W, L, Lv, Lh, Lcn)`.
///
/// `Q = (50 + 3W) * s/(s^2+1) * exp(-((Lv-v*)^2 + (Lh-h*)^2)/sigma^2) * (1 + 0.2 tanh((Lcn-25)/10))`
/// with `s = f/f_sr(W, L)`. The form is a fixture chosen to have an interior
/// optimum; it is not a physical model.
pub fn synthetic_q_oracle(x: &[f64; 6]) -> Result<f64, InductorError> {
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(InductorError::Domain(format!("{x:?}")));
    }
    let [f, w, l, lv, lh, lcn] = *x;
    let s = f / self_resonance(w, l);
    let dv = lv - optimal_lv(l);
    let dh = lh - optimal_lh(f);
    let gauss = (-(dv * dv + dh * dh) / (ORACLE_SIGMA * ORACLE_SIGMA)).exp();
    Ok((50.0 + 3.0 * w) * s / (s * s + 1.0) * gauss * (1.0 + 0.2 * ((lcn - 25.0) / 10.0).tanh()))
}

pub fn oracle_q(spec: &InductorSpec, v: &LayoutVars) -> Result<f64, InductorError> {
    synthetic_q_oracle(&[spec.f, spec.w, spec.l, v.lv, v.lh, v.lcn])
}

/// Sampling box for dataset generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRanges {
    pub f: (f64, f64),
    pub w: (f64, f64),
    pub l: (f64, f64),
}

impl Default for SampleRanges {
    fn default() -> Self {
        Self {
            f: (1.0, 100.0),
            w: (1.0, 10.0),
            l: (50.0, 1000.0),
        }
    }
}

impl SampleRanges {
    pub fn sample_spec<R: Rng>(&self, rng: &mut R) -> InductorSpec {
        InductorSpec::new(
            rng.gen_range(self.f.0..=self.f.1),
            rng.gen_range(self.w.0..=self.w.1),
            rng.gen_range(self.l.0..=self.l.1),
        )
    }

    pub fn contains(&self, s: &InductorSpec) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
        inside(s.f, self.f) && inside(s.w, self.w) && inside(s.l, self.l)
    }
}

/// `n` uniform samples inside the layout box, labelled by the oracle and
/// split 80:10:10.
pub fn generate_dataset(n: usize, ranges: &SampleRanges, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let spec = ranges.sample_spec(&mut rng);
        let (lo, hi) = layout_bounds(spec.w).expect("sample ranges keep the box feasible");
        let lv = rng.gen_range(lo[0]..=hi[0]);
        let lh = rng.gen_range(lo[1]..=hi[1]);
        let lcn = rng.gen_range(lo[2]..=hi[2]);
        let x = [spec.f, spec.w, spec.l, lv, lh, lcn];
        if let Ok(q) = synthetic_q_oracle(&x) {
            features.push(x);
            targets.push(q);
        }
    }
    Dataset::new(features, targets, seed).expect("equal lengths")
}

/// Dense grid search of the oracle over the layout box
/// (50 x 50 x 20 points, endpoints included).
pub fn grid_search_max(spec: &InductorSpec) -> Result<(LayoutVars, f64), InductorError> {
    let (lo, hi) = layout_bounds(spec.w)?;
    let lin = |i: usize, k: usize, n: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64;
    let mut best = (LayoutVars::new(lo[0], lo[1], lo[2]), f64::NEG_INFINITY);
    for a in 0..50 {
        for b in 0..50 {
            for c in 0..20 {
                let v = LayoutVars::new(lin(a, 0, 50), lin(b, 1, 50), lin(c, 2, 20));
                let q = oracle_q(spec, &v)?;
                if q > best.1 {
                    best = (v, q);
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseConfig {
    pub lr: f64,
    pub max_steps: usize,
    pub q_target: Option<f64>,
    pub init: LayoutVars,
    pub record_trace: bool,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            max_steps: 3000,
            q_target: None,
            init: LayoutVars::new(40.0, 40.0, 20.0),
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub step: usize,
    pub lv: f64,
    pub lh: f64,
    pub lcn: f64,
    pub q_pred: f64,
    pub best_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseResult {
    pub vars: LayoutVars,
    pub q_pred: f64,
    /// Optimizer updates applied.
    pub steps: usize,
    pub seconds: f64,
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
}

/// Maximizes the surrogate's Q over `(Lv, Lh, Lcn)` with Adam, projecting
/// onto the box after every update. Returns the best iterate seen.
pub fn inverse_design(
    model: &MlpModel,
    stats: &NormStats,
    spec: &InductorSpec,
    cfg: &InverseConfig,
) -> Result<InverseResult, InductorError> {
    if model.input_dim() != 6 {
        return Err(NnError::Shape {
            expected: 6,
            found: model.input_dim(),
        }
        .into());
    }
    let start = Instant::now();
    let mut v = clamp_to_constraints(cfg.init, spec.w)?;
    let mut eval = SingleEval::new(model);
    let mut adam = AdamState::new(&[3], cfg.lr);
    let mut grad = [0.0; 6];
    let mut best = (v, f64::NEG_INFINITY);
    let mut trace = Vec::new();
    let mut steps = 0;
    for step in 0..=cfg.max_steps {
        let x = [spec.f, spec.w, spec.l, v.lv, v.lh, v.lcn];
        let q = eval.value_and_input_grad(model, stats, &x, &mut grad);
        if q > best.1 {
            best = (v, q);
        }
        if cfg.record_trace {
            trace.push(TracePoint {
                step,
                lv: v.lv,
                lh: v.lh,
                lcn: v.lcn,
                q_pred: q,
                best_q: best.1,
            });
        }
        if step == cfg.max_steps || cfg.q_target.is_some_and(|t| q >= t) {
            break;
        }
        // ascend Q: minimize -Q
        let g = [-grad[3], -grad[4], -grad[5]];
        let mut p = v.to_array();
        adam.step(&mut [&mut p[..]], &[&g[..]])?;
        v = clamp_to_constraints(LayoutVars::from_array(p), spec.w)?;
        steps += 1;
    }
    Ok(InverseResult {
        vars: best.0,
        q_pred: best.1,
        steps,
        seconds: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// Percentage of specs whose inverse-designed layout has oracle Q above `threshold`.
pub fn success_rate<F>(
    model: &MlpModel,
    stats: &NormStats,
    specs: &[InductorSpec],
    threshold: f64,
    cfg: &InverseConfig,
    oracle: F,
) -> Result<f64, InductorError>
where
    F: Fn(&InductorSpec, &LayoutVars) -> Result<f64, InductorError>,
{
    if specs.is_empty() {
        return Err(InductorError::Domain("no specs".into()));
    }
    let mut hits = 0usize;
    for spec in specs {
        let r = inverse_design(model, stats, spec, cfg)?;
        if oracle(spec, &r.vars)? > threshold {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / specs.len() as f64)
}

/// Single-turn rectangular loop on `layer`: outer extent `Lh x Lv`, trace
/// width `W`, feed gap of width `Lcn` centred in the bottom edge, with one
/// port pin at each side of the gap.
pub fn inductor_geometry(spec: &InductorSpec, v: &LayoutVars, layer: &str) -> Result<CellGeometry, InductorError> {
    let (w, lv, lh) = (spec.w, v.lv, v.lh);
    if !(w > 0.0) || w >= lv / 2.0 {
        return Err(InductorError::Geometry(format!("trace width {w} too wide for Lv = {lv}")));
    }
    if w >= lh / 2.0 {
        return Err(InductorError::Geometry(format!("trace width {w} too wide for Lh = {lh}")));
    }
    if !(v.lcn > 0.0) {
        return Err(InductorError::Geometry("feed gap must be positive".into()));
    }
    let gap = v.lcn.min(lh - 2.0 * w);
    let x_left = (lh - gap) / 2.0;
    let x_right = (lh + gap) / 2.0;
    let mut shapes = vec![
        Shape::new(layer, Rect::new(0.0, 0.0, w, lv)),
        Shape::new(layer, Rect::new(lh - w, 0.0, lh, lv)),
        Shape::new(layer, Rect::new(w, lv - w, lh - w, lv)),
    ];
    if x_left > w {
        shapes.push(Shape::new(layer, Rect::new(w, 0.0, x_left, w)));
        shapes.push(Shape::new(layer, Rect::new(x_right, 0.0, lh - w, w)));
    }
    Ok(CellGeometry {
        width: lh,
        height: lv,
        shapes,
        pins: vec![
            PinShape {
                name: "P1".into(),
                at: Point::new(x_left, 0.0),
                facing: Dir::Down,
            },
            PinShape {
                name: "P2".into(),
                at: Point::new(x_right, 0.0),
                facing: Dir::Down,
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_factors() {
        let (w, l) = (4.0, 300.0);
        let f = self_resonance(w, l);
        let at = |f: f64| synthetic_q_oracle(&[f, w, l, optimal_lv(l), optimal_lh(f), 25.0]).unwrap();
        // s = 1 halves the resonance factor; Gaussian and Lcn factors are 1
        assert!((at(f) - (50.0 + 3.0 * w) * 0.5).abs() < 1e-12);
        assert!(synthetic_q_oracle(&[0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn clamp_examples() {
        let c = |a, b, d| clamp_to_constraints(LayoutVars::new(a, b, d), 10.0).unwrap();
        assert_eq!(c(150.0, 150.0, 60.0), LayoutVars::new(100.0, 100.0, 50.0));
        assert_eq!(c(5.0, 10.0, 0.5), LayoutVars::new(12.0, 24.0, 1.0));
        assert_eq!(c(50.0, 60.0, 10.0), LayoutVars::new(50.0, 60.0, 10.0));
        assert!(matches!(
            clamp_to_constraints(LayoutVars::new(1.0, 1.0, 1.0), 49.0),
            Err(InductorError::InfeasibleBox { .. })
        ));
    }

    #[test]
    fn dataset_is_deterministic_and_in_box() {
        let a = generate_dataset(10, &SampleRanges::default(), 4);
        assert_eq!(a, generate_dataset(10, &SampleRanges::default(), 4));
        for x in &a.features {
            assert!(x[3] >= x[1] + 2.0 && x[3] <= 100.0);
            assert!(x[4] >= 2.0 * x[1] + 4.0 && x[4] <= 100.0);
            assert!((1.0..=50.0).contains(&x[5]));
        }
    }

    #[test]
    fn loop_rectangles() {
        let g = inductor_geometry(&InductorSpec::new(10.0, 2.0, 100.0), &LayoutVars::new(40.0, 40.0, 20.0), "QB").unwrap();
        let rects: Vec<Rect> = g.shapes.iter().map(|s| s.rect).collect();
        assert_eq!(
            rects,
            vec![
                Rect::new(0.0, 0.0, 2.0, 40.0),
                Rect::new(38.0, 0.0, 40.0, 40.0),
                Rect::new(2.0, 38.0, 38.0, 40.0),
                Rect::new(2.0, 0.0, 10.0, 2.0),
                Rect::new(30.0, 0.0, 38.0, 2.0),
            ]
        );
        assert_eq!(g.pins[1].at.x - g.pins[0].at.x, 20.0);
        assert!(inductor_geometry(&InductorSpec::new(10.0, 20.0, 100.0), &LayoutVars::new(40.0, 60.0, 20.0), "QB").is_err());
    }
}
