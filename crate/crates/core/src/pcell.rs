//! Minimum-area sizing and layout of MOM capacitors and poly resistors.
//!
//! Dimensions are searched on a 0.01 um grid. Internally a grid point is an
//! integer count of hundredths of a micron so that areas compare exactly.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geom::{CellGeometry, Dir, PinShape, Point, Rect, Shape};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PcellError {
    #[error("no {kind} design within {tol_pct}% of {target}")]
    Unsatisfiable { kind: &'static str, target: f64, tol_pct: f64 },
    #[error("invalid pcell input: {0}")]
    Invalid(String),
}

/// Grid resolution in um.
pub const GRID: f64 = 0.01;
const PER_UM: f64 = 100.0;

pub const CAP_W_RANGE: (u32, u32) = (100, 33_000);
pub const CAP_L_RANGE: (u32, u32) = (100, 6_000);
pub const RES_W_RANGE: (u32, u32) = (36, 372);
pub const RES_L_RANGE: (u32, u32) = (40, 5_000);
pub const MAX_STRIPES: u32 = 64;
pub const DEFAULT_TOL: f64 = 0.005;

fn um(v: u32) -> f64 {
    v as f64 / PER_UM
}

fn centi(v: f64) -> Result<u64, PcellError> {
    let c = (v * PER_UM).round();
    if !(c >= 0.0) || ((c / PER_UM) - v).abs() > 1e-9 {
        return Err(PcellError::Invalid(format!("{v} is not on the 0.01 um grid")));
    }
    Ok(c as u64)
}

/// A metal stack usable for MOM capacitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapStack {
    pub name: String,
    /// fF/um^2
    pub rho: f64,
    pub layers: Vec<String>,
}

impl CapStack {
    pub fn new(name: &str, rho: f64, layers: &[&str]) -> Self {
        Self {
            name: name.into(),
            rho,
            layers: layers.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapDesign {
    pub stack: CapStack,
    pub w: f64,
    pub l: f64,
    pub area: f64,
    pub c_pf: f64,
}

/// `C[pF] = rho * W * L * 1e-3`.
pub fn cap_value(stack: &CapStack, w: f64, l: f64) -> f64 {
    stack.rho * w * l * 1e-3
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    ((value - target) / target).abs() <= tol
}

/// Tolerance predicate on a grid point, shared by optimizer and tests.
pub fn cap_feasible(stack: &CapStack, w: u32, l: u32, target: f64, tol: f64) -> bool {
    within(cap_value(stack, um(w), um(l)), target, tol)
}

/// Grid candidate for capacitor comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapCandidate {
    pub stack: usize,
    pub w: u32,
    pub l: u32,
}

impl CapCandidate {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.l as u64
    }
}

/// Total order: area, higher rho, aspect nearest 1, smaller W, stack name.
pub fn cap_order(stacks: &[CapStack], a: &CapCandidate, b: &CapCandidate) -> Ordering {
    let (sa, sb) = (&stacks[a.stack], &stacks[b.stack]);
    let aspect = |c: &CapCandidate| (c.w.max(c.l) as u64, c.w.min(c.l) as u64);
    let ((amax, amin), (bmax, bmin)) = (aspect(a), aspect(b));
    a.area()
        .cmp(&b.area())
        .then_with(|| sb.rho.total_cmp(&sa.rho))
        .then_with(|| (amax * bmin).cmp(&(bmax * amin)))
        .then_with(|| a.w.cmp(&b.w))
        .then_with(|| sa.name.cmp(&sb.name))
        .then_with(|| a.l.cmp(&b.l))
}

fn check_target(target: f64, tol: f64) -> Result<(), PcellError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(PcellError::Invalid(format!("target must be positive, got {target}")));
    }
    if !(0.0..1.0).contains(&tol) {
        return Err(PcellError::Invalid(format!("tolerance {tol} outside [0, 1)")));
    }
    Ok(())
}

/// Smallest `x` in `[lo, hi]` with `ok(x)`, for a predicate that holds on
/// one contiguous interval and a value that increases with `x`. `guess` must
/// be near the lower feasibility edge; `below(x)` tells whether `x` is under
/// the interval.
fn first_feasible(lo: u32, hi: u32, guess: f64, ok: impl Fn(u32) -> bool, below: impl Fn(u32) -> bool) -> Option<u32> {
    let mut x = if guess.is_finite() {
        (guess.floor() as i64 - 2).clamp(lo as i64, hi as i64) as u32
    } else {
        lo
    };
    while x > lo && (ok(x - 1) || !below(x - 1)) {
        x -= 1;
    }
    while x <= hi {
        if ok(x) {
            return Some(x);
        }
        if !below(x) {
            return None;
        }
        x += 1;
    }
    None
}

/// Minimum-area capacitor over all stacks within `tol` of `c_target` pF.
pub fn optimize_capacitor(c_target: f64, stacks: &[CapStack], tol: f64) -> Result<CapDesign, PcellError> {
    check_target(c_target, tol)?;
    if stacks.is_empty() {
        return Err(PcellError::Invalid("no capacitor stacks".into()));
    }
    let mut best: Option<CapCandidate> = None;
    for (si, stack) in stacks.iter().enumerate() {
        if !(stack.rho > 0.0) {
            return Err(PcellError::Invalid(format!("stack {} has non-positive density", stack.name)));
        }
        for l in CAP_L_RANGE.0..=CAP_L_RANGE.1 {
            let guess = c_target * (1.0 - tol) / (stack.rho * um(l) * 1e-3) * PER_UM;
            let ok = |w| cap_feasible(stack, w, l, c_target, tol);
            let below = |w| cap_value(stack, um(w), um(l)) < c_target;
            if let Some(w) = first_feasible(CAP_W_RANGE.0, CAP_W_RANGE.1, guess, ok, below) {
                let cand = CapCandidate { stack: si, w, l };
                if best.is_none_or(|b| cap_order(stacks, &cand, &b) == Ordering::Less) {
                    best = Some(cand);
                }
            }
        }
    }
    let best = best.ok_or(PcellError::Unsatisfiable {
        kind: "capacitor",
        target: c_target,
        tol_pct: tol * 100.0,
    })?;
    Ok(cap_design(stacks, &best))
}

pub fn cap_design(stacks: &[CapStack], c: &CapCandidate) -> CapDesign {
    let stack = stacks[c.stack].clone();
    let (w, l) = (um(c.w), um(c.l));
    CapDesign {
        c_pf: cap_value(&stack, w, l),
        area: w * l,
        stack,
        w,
        l,
    }
}

/// Sheet and contact resistance of the resistor film.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResTech {
    /// Ohm per square
    pub rs: f64,
    /// Ohm um per contact
    pub r_end: f64,
    /// Horizontal spacing added to each stripe's width, um.
    pub pitch_x: f64,
    /// Vertical spacing added to each stripe's length, um.
    pub pitch_y: f64,
}

impl Default for ResTech {
    fn default() -> Self {
        Self {
            rs: 50.0,
            r_end: 5.0,
            pitch_x: 0.5,
            pitch_y: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResDesign {
    pub w: f64,
    pub l: f64,
    pub ns: u32,
    pub np: u32,
    pub r_ohm: f64,
    /// `Ns * Np * (W + pitch_x) * (L + pitch_y)`.
    pub area: f64,
}

/// `R = Rs * L / W + 2 * R_end / W`.
pub fn resistor_stripe(tech: &ResTech, w: f64, l: f64) -> f64 {
    tech.rs * (l / w) + 2.0 * tech.r_end / w
}

pub fn resistor_total(tech: &ResTech, w: f64, l: f64, ns: u32, np: u32) -> f64 {
    (ns as f64 / np as f64) * resistor_stripe(tech, w, l)
}

pub fn res_feasible(tech: &ResTech, w: u32, l: u32, ns: u32, np: u32, target: f64, tol: f64) -> bool {
    within(resistor_total(tech, um(w), um(l), ns, np), target, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResCandidate {
    pub w: u32,
    pub l: u32,
    pub ns: u32,
    pub np: u32,
}

/// Exact area in (0.01 um)^2 given pitch overheads in grid units.
pub fn res_area(c: &ResCandidate, px: u64, py: u64) -> u64 {
    (c.ns * c.np) as u64 * (c.w as u64 + px) * (c.l as u64 + py)
}

/// Total order: area, fewer stripes, fewer series stripes, smaller W, smaller L.
pub fn res_order(px: u64, py: u64, a: &ResCandidate, b: &ResCandidate) -> Ordering {
    res_area(a, px, py)
        .cmp(&res_area(b, px, py))
        .then_with(|| (a.ns * a.np).cmp(&(b.ns * b.np)))
        .then_with(|| a.ns.cmp(&b.ns))
        .then_with(|| a.w.cmp(&b.w))
        .then_with(|| a.l.cmp(&b.l))
}

pub fn res_pitches(tech: &ResTech) -> Result<(u64, u64), PcellError> {
    Ok((centi(tech.pitch_x)?, centi(tech.pitch_y)?))
}

/// Minimum-area resistor within `tol` of `r_target` ohms.
pub fn optimize_resistor(r_target: f64, tech: &ResTech, tol: f64) -> Result<ResDesign, PcellError> {
    check_target(r_target, tol)?;
    if !(tech.rs > 0.0 && tech.r_end > 0.0) {
        return Err(PcellError::Invalid("sheet and end resistance must be positive".into()));
    }
    let (px, py) = res_pitches(tech)?;
    let mut best: Option<ResCandidate> = None;
    for ns in 1..=MAX_STRIPES {
        for np in 1..=MAX_STRIPES {
            let ratio = ns as f64 / np as f64;
            for w in RES_W_RANGE.0..=RES_W_RANGE.1 {
                let wu = um(w);
                let guess = ((r_target * (1.0 - tol) / ratio) * wu - 2.0 * tech.r_end) / tech.rs * PER_UM;
                let ok = |l| res_feasible(tech, w, l, ns, np, r_target, tol);
                let below = |l| resistor_total(tech, wu, um(l), ns, np) < r_target;
                if let Some(l) = first_feasible(RES_L_RANGE.0, RES_L_RANGE.1, guess, ok, below) {
                    let cand = ResCandidate { w, l, ns, np };
                    if best.is_none_or(|b| res_order(px, py, &cand, &b) == Ordering::Less) {
                        best = Some(cand);
                    }
                }
            }
        }
    }
    let best = best.ok_or(PcellError::Unsatisfiable {
        kind: "resistor",
        target: r_target,
        tol_pct: tol * 100.0,
    })?;
    Ok(res_design(tech, &best))
}

pub fn res_design(tech: &ResTech, c: &ResCandidate) -> ResDesign {
    let (w, l) = (um(c.w), um(c.l));
    ResDesign {
        w,
        l,
        ns: c.ns,
        np: c.np,
        r_ohm: resistor_total(tech, w, l, c.ns, c.np),
        area: (c.ns * c.np) as f64 * (w + tech.pitch_x) * (l + tech.pitch_y),
    }
}

/// One `W x L` plate per stack layer, alternating terminals A/B/A...,
/// with pin A on the left edge and pin B on the right edge.
pub fn cap_geometry(design: &CapDesign) -> CellGeometry {
    let plate = Rect::new(0.0, 0.0, design.w, design.l);
    let shapes = design
        .stack
        .layers
        .iter()
        .enumerate()
        .map(|(i, layer)| Shape::new(layer.as_str(), plate).on_terminal(i % 2))
        .collect();
    CellGeometry {
        width: design.w,
        height: design.l,
        shapes,
        pins: vec![
            PinShape {
                name: "A".into(),
                at: Point::new(0.0, design.l / 2.0),
                facing: Dir::Left,
            },
            PinShape {
                name: "B".into(),
                at: Point::new(design.w, design.l / 2.0),
                facing: Dir::Right,
            },
        ],
    }
}

/// Stripes in an `Ns`-row by `Np`-column array on `res_layer`, with square
/// end contacts on `contact_layer`. Pin A sits under the first stripe, pin
/// B above the last.
pub fn res_geometry(design: &ResDesign, tech: &ResTech, res_layer: &str, contact_layer: &str) -> CellGeometry {
    let (w, l) = (design.w, design.l);
    let pitch_x = w + tech.pitch_x;
    let pitch_y = l + tech.pitch_y;
    // contacts cover at most a quarter of the stripe each, so short
    // stripes keep a gap between their two ends
    let cs = w.min(l / 4.0);
    let mut shapes = Vec::new();
    for row in 0..design.ns {
        for col in 0..design.np {
            let x = col as f64 * pitch_x;
            let y = row as f64 * pitch_y;
            shapes.push(Shape::new(res_layer, Rect::new(x, y, x + w, y + l)));
            let cx = x + (w - cs) / 2.0;
            shapes.push(Shape::new(contact_layer, Rect::new(cx, y, cx + cs, y + cs)));
            shapes.push(Shape::new(contact_layer, Rect::new(cx, y + l - cs, cx + cs, y + l)));
        }
    }
    let width = design.np as f64 * w + (design.np - 1) as f64 * tech.pitch_x;
    let height = design.ns as f64 * l + (design.ns - 1) as f64 * tech.pitch_y;
    CellGeometry {
        width,
        height,
        shapes,
        pins: vec![
            PinShape {
                name: "A".into(),
                at: Point::new(w / 2.0, 0.0),
                facing: Dir::Down,
            },
            PinShape {
                name: "B".into(),
                at: Point::new((design.np - 1) as f64 * pitch_x + w / 2.0, height),
                facing: Dir::Up,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let s = CapStack::new("s", 1.0, &["M1", "M2", "M3"]);
        assert!((cap_value(&s, 10.0, 10.0) - 0.1).abs() < 1e-15);
        let t = ResTech::default();
        assert!((resistor_stripe(&t, 1.0, 10.0) - 510.0).abs() < 1e-12);
        assert!((resistor_stripe(&t, 2.0, 10.0) - 255.0).abs() < 1e-12);
    }

    #[test]
    fn denser_stack_wins() {
        let stacks = [CapStack::new("a", 1.0, &["M1", "M2", "M3"]), CapStack::new("b", 2.0, &["M1", "M2", "M3"])];
        let d = optimize_capacitor(0.1, &stacks, DEFAULT_TOL).unwrap();
        let single = optimize_capacitor(0.1, &stacks[..1], DEFAULT_TOL).unwrap();
        assert_eq!(d.stack.name, "b");
        assert!((d.area - single.area / 2.0).abs() < 0.05);
        assert!(matches!(
            optimize_capacitor(2.0 * 330.0 * 60.0 * 1e-3 * 1.01, &stacks, DEFAULT_TOL),
            Err(PcellError::Unsatisfiable { .. })
        ));
    }

    #[test]
    fn resistor_prefers_single_stripe() {
        let t = ResTech::default();
        let d = optimize_resistor(510.0, &t, DEFAULT_TOL).unwrap();
        assert_eq!((d.ns, d.np), (1, 1));
        assert!(((d.r_ohm - 510.0) / 510.0).abs() <= DEFAULT_TOL);
    }

    #[test]
    fn geometry_counts() {
        let t = ResTech::default();
        let d = ResDesign {
            w: 1.0,
            l: 4.0,
            ns: 2,
            np: 2,
            r_ohm: 0.0,
            area: 0.0,
        };
        let g = res_geometry(&d, &t, "RES", "M1");
        assert_eq!(g.shapes.iter().filter(|s| s.layer == "RES").count(), 4);
        assert_eq!((g.width, g.height), (2.5, 9.0));
        let s = CapStack::new("s", 1.0, &["M1", "M2", "M3"]);
        let cg = cap_geometry(&CapDesign {
            stack: s,
            w: 10.0,
            l: 10.0,
            area: 100.0,
            c_pf: 0.1,
        });
        let terms: Vec<_> = cg.shapes.iter().map(|s| s.terminal).collect();
        assert_eq!(terms, vec![Some(0), Some(1), Some(0)]);
    }
}
