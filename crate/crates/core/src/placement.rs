//! Device placement: connectivity-ordered rows, accept-if-better local
//! search with swap/translate moves, and a rotation pass that maximizes pin
//! escape room.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{CellGeometry, Dir, Placed, Point, Rect, Rotation};
use crate::netlist::{ComponentKind, Netlist};

/// Frequency-dependent device clearance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmRules {
    /// Clearance below `f_low` GHz, um.
    pub spacing_low: f64,
    /// Clearance above `f_high` GHz, um.
    pub spacing_high: f64,
    pub f_low: f64,
    pub f_high: f64,
    /// Multiplicative guard band applied on top of the clearance.
    pub guard_fraction: f64,
}

impl Default for EmRules {
    fn default() -> Self {
        Self {
            spacing_low: 10.0,
            spacing_high: 30.0,
            f_low: 5.0,
            f_high: 40.0,
            guard_fraction: 0.15,
        }
    }
}

/// Clearance at `f` GHz: flat below `f_low` and above `f_high`, linear in
/// between, then scaled by `1 + guard_fraction`.
pub fn min_spacing(f: f64, rules: &EmRules) -> f64 {
    let base = if f < rules.f_low {
        rules.spacing_low
    } else if f > rules.f_high {
        rules.spacing_high
    } else {
        rules.spacing_low + (rules.spacing_high - rules.spacing_low) * (f - rules.f_low) / (rules.f_high - rules.f_low)
    };
    base * (1.0 + rules.guard_fraction)
}

/// Knobs of the placement objective and search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaceConfig {
    /// Overlap penalty per um^2.
    pub overlap_k: f64,
    /// Weight of the squared spacing deficit.
    pub spacing_weight: f64,
    /// Extra escape length required past the device boundary, um.
    pub m_margin: f64,
    /// Half-width of the uniform translate move, um.
    pub translate_step: f64,
    /// Move budget is `t_max_factor * N^2`.
    pub t_max_factor: usize,
    /// Position grid, um.
    pub snap: f64,
}

impl Default for PlaceConfig {
    fn default() -> Self {
        Self {
            overlap_k: 1e4,
            spacing_weight: 1.0,
            m_margin: 2.0,
            translate_step: 5.0,
            t_max_factor: 10,
            snap: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootprintPin {
    pub name: String,
    /// Relative to the unrotated bounding-box origin.
    pub offset: Point,
    pub facing: Dir,
    /// Only up/down escapes count when scoring rotations.
    pub vertical_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceFootprint {
    pub id: String,
    pub kind: ComponentKind,
    pub width: f64,
    pub height: f64,
    pub pins: Vec<FootprintPin>,
}

impl DeviceFootprint {
    pub fn from_geometry(id: &str, kind: ComponentKind, g: &CellGeometry) -> Self {
        let pins = g
            .pins
            .iter()
            .map(|p| FootprintPin {
                name: p.name.clone(),
                offset: p.at,
                facing: p.facing,
                vertical_only: kind == ComponentKind::Nmos && (p.name == "D" || p.name == "S"),
            })
            .collect();
        Self {
            id: id.into(),
            kind,
            width: g.width,
            height: g.height,
            pins,
        }
    }

    /// Rectangular box with pins at edge midpoints, for tests and examples.
    pub fn boxed(id: &str, width: f64, height: f64, pins: &[(&str, Dir)]) -> Self {
        let pins = pins
            .iter()
            .map(|&(name, d)| {
                let offset = match d {
                    Dir::Right => Point::new(width, height / 2.0),
                    Dir::Left => Point::new(0.0, height / 2.0),
                    Dir::Up => Point::new(width / 2.0, height),
                    Dir::Down => Point::new(width / 2.0, 0.0),
                };
                FootprintPin {
                    name: name.into(),
                    offset,
                    facing: d,
                    vertical_only: false,
                }
            })
            .collect();
        Self {
            id: id.into(),
            kind: ComponentKind::Resistor,
            width,
            height,
            pins,
        }
    }
}

/// Lower-left corner of the rotated bounding box plus rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DevicePos {
    pub x: f64,
    pub y: f64,
    pub theta: Rotation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub positions: Vec<DevicePos>,
}

impl Placement {
    pub fn placed(&self, fps: &[DeviceFootprint], i: usize) -> Placed {
        let p = self.positions[i];
        Placed::new(Point::new(p.x, p.y), p.theta, (fps[i].width, fps[i].height))
    }

    pub fn bbox(&self, fps: &[DeviceFootprint], i: usize) -> Rect {
        self.placed(fps, i).bbox()
    }

    pub fn pin_position(&self, fps: &[DeviceFootprint], i: usize, pin: usize) -> Point {
        self.placed(fps, i).point(fps[i].pins[pin].offset)
    }

    pub fn pin_facing(&self, fps: &[DeviceFootprint], i: usize, pin: usize) -> Dir {
        fps[i].pins[pin].facing.rotate(self.positions[i].theta)
    }

    /// Union of all device boxes.
    pub fn extent(&self, fps: &[DeviceFootprint]) -> Option<Rect> {
        (0..self.positions.len()).map(|i| self.bbox(fps, i)).reduce(|a, b| a.union(&b))
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Placement {
        Placement {
            positions: self
                .positions
                .iter()
                .map(|p| DevicePos {
                    x: p.x + dx,
                    y: p.y + dy,
                    theta: p.theta,
                })
                .collect(),
        }
    }
}

/// A net seen by the placer: weight and `(device, pin)` members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceNet {
    pub name: String,
    pub weight: f64,
    pub pins: Vec<(usize, usize)>,
}

/// Maps netlist nets onto footprint indices. Footprints must follow the
/// netlist's component order, with pins in terminal order.
pub fn nets_from_netlist(netlist: &Netlist, fps: &[DeviceFootprint]) -> Vec<PlaceNet> {
    netlist
        .nets
        .iter()
        .map(|n| PlaceNet {
            name: n.name.clone(),
            weight: n.weight,
            pins: n
                .pins
                .iter()
                .filter_map(|p| {
                    let dev = fps.iter().position(|f| f.id == p.component)?;
                    (p.terminal < fps[dev].pins.len()).then_some((dev, p.terminal))
                })
                .collect(),
        })
        .collect()
}

/// Number of distinct nets touching device `i`.
pub fn connectivity_degree(i: usize, nets: &[PlaceNet]) -> usize {
    nets.iter().filter(|n| n.pins.iter().any(|&(d, _)| d == i)).count()
}

/// Devices sorted by descending degree, index order on ties.
pub fn connectivity_order(n_devices: usize, nets: &[PlaceNet]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_devices).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(connectivity_degree(i, nets)));
    order
}

fn snap(v: f64, grid: f64) -> f64 {
    (v / grid).round() * grid
}

fn snap_up(v: f64, grid: f64) -> f64 {
    (v / grid - 1e-9).ceil() * grid
}

/// Row placement in connectivity order. Gaps equal `spacing` in both axes;
/// rows wrap at twice the square root of the padded total area.
pub fn initial_placement(fps: &[DeviceFootprint], nets: &[PlaceNet], spacing: f64, grid: f64) -> Placement {
    let mut positions = vec![
        DevicePos {
            x: 0.0,
            y: 0.0,
            theta: Rotation::R0
        };
        fps.len()
    ];
    if fps.is_empty() {
        return Placement { positions };
    }
    let padded: f64 = fps.iter().map(|f| (f.width + spacing) * (f.height + spacing)).sum();
    let cap = 2.0 * padded.sqrt();
    let (mut x, mut y, mut row_h) = (0.0f64, 0.0f64, 0.0f64);
    let mut row_count = 0;
    for i in connectivity_order(fps.len(), nets) {
        let f = &fps[i];
        if row_count > 0 && x + f.width > cap {
            y = snap_up(y + row_h + spacing, grid);
            x = 0.0;
            row_h = 0.0;
            row_count = 0;
        }
        positions[i] = DevicePos {
            x,
            y,
            theta: Rotation::R0,
        };
        x = snap_up(x + f.width + spacing, grid);
        row_h = row_h.max(f.height);
        row_count += 1;
    }
    Placement { positions }
}

/// Criticality-weighted half-perimeter wirelength.
pub fn hpwl(fps: &[DeviceFootprint], placement: &Placement, nets: &[PlaceNet]) -> f64 {
    let mut total = 0.0;
    for n in nets {
        if n.pins.is_empty() {
            continue;
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(d, p) in &n.pins {
            let pt = placement.pin_position(fps, d, p);
            x0 = x0.min(pt.x);
            x1 = x1.max(pt.x);
            y0 = y0.min(pt.y);
            y1 = y1.max(pt.y);
        }
        total += n.weight * ((x1 - x0) + (y1 - y0));
    }
    total
}

pub fn overlap_area(a: &Rect, b: &Rect) -> f64 {
    a.overlap_area(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub hpwl: f64,
    pub overlap: f64,
    pub spacing_deficit: f64,
    pub total: f64,
}

/// `HPWL + K * sum overlap + spacing_weight * sum max(0, S - gap)^2` over
/// device pairs, where `gap` is the larger of the two axis separations.
pub fn placement_cost(
    fps: &[DeviceFootprint],
    placement: &Placement,
    nets: &[PlaceNet],
    spacing: f64,
    cfg: &PlaceConfig,
) -> CostBreakdown {
    let wl = hpwl(fps, placement, nets);
    let boxes: Vec<Rect> = (0..fps.len()).map(|i| placement.bbox(fps, i)).collect();
    let mut overlap = 0.0;
    let mut deficit = 0.0;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            overlap += overlap_area(&boxes[i], &boxes[j]);
            let (gx, gy) = boxes[i].axis_gaps(&boxes[j]);
            let short = (spacing - gx.max(gy)).max(0.0);
            deficit += short * short;
        }
    }
    CostBreakdown {
        hpwl: wl,
        overlap,
        spacing_deficit: deficit,
        total: wl + cfg.overlap_k * overlap + cfg.spacing_weight * deficit,
    }
}

/// Accept-if-better search. Even iterations propose swapping the anchors of
/// neighbours in connectivity order, odd iterations a seeded translation of
/// one device. Returns the final placement and the cost after every
/// iteration (the first entry is the starting cost).
pub fn local_search(
    fps: &[DeviceFootprint],
    start: &Placement,
    nets: &[PlaceNet],
    spacing: f64,
    cfg: &PlaceConfig,
    t_max: usize,
    seed: u64,
) -> (Placement, Vec<f64>) {
    let mut cur = start.clone();
    let mut cost = placement_cost(fps, &cur, nets, spacing, cfg).total;
    let mut trace = vec![cost];
    let n = fps.len();
    if n == 0 {
        return (cur, trace);
    }
    let order = connectivity_order(n, nets);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut swap_k, mut move_k) = (0usize, 0usize);
    for t in 0..t_max {
        let mut cand = cur.clone();
        if t % 2 == 0 && n >= 2 {
            let a = order[swap_k % (n - 1)];
            let b = order[swap_k % (n - 1) + 1];
            swap_k += 1;
            let (pa, pb) = (cand.positions[a], cand.positions[b]);
            cand.positions[a].x = pb.x;
            cand.positions[a].y = pb.y;
            cand.positions[b].x = pa.x;
            cand.positions[b].y = pa.y;
        } else {
            let d = order[move_k % n];
            move_k += 1;
            let dx = snap(rng.gen_range(-cfg.translate_step..=cfg.translate_step), cfg.snap);
            let dy = snap(rng.gen_range(-cfg.translate_step..=cfg.translate_step), cfg.snap);
            cand.positions[d].x = snap(cand.positions[d].x + dx, cfg.snap);
            cand.positions[d].y = snap(cand.positions[d].y + dy, cfg.snap);
        }
        let c = placement_cost(fps, &cand, nets, spacing, cfg).total;
        if c < cost {
            cur = cand;
            cost = c;
        }
        trace.push(cost);
    }
    (cur, trace)
}

/// Free run from `from` along `d` before hitting any box in `blockers` or
/// the `region` boundary.
fn free_run(from: Point, d: Dir, blockers: &[Rect], region: &Rect) -> f64 {
    let mut run = match d {
        Dir::Right => region.x1 - from.x,
        Dir::Left => from.x - region.x0,
        Dir::Up => region.y1 - from.y,
        Dir::Down => from.y - region.y0,
    }
    .max(0.0);
    for r in blockers {
        let dist = match d {
            Dir::Right | Dir::Left if from.y > r.y0 && from.y < r.y1 => {
                if d == Dir::Right {
                    r.x0 - from.x
                } else {
                    from.x - r.x1
                }
            }
            Dir::Up | Dir::Down if from.x > r.x0 && from.x < r.x1 => {
                if d == Dir::Up {
                    r.y0 - from.y
                } else {
                    from.y - r.y1
                }
            }
            _ => continue,
        };
        if dist >= 0.0 {
            run = run.min(dist);
        }
    }
    run
}

/// Distance from `p` to the edge of `b` travelling along `d`.
fn exit_distance(p: Point, d: Dir, b: &Rect) -> f64 {
    match d {
        Dir::Right => b.x1 - p.x,
        Dir::Left => p.x - b.x0,
        Dir::Up => b.y1 - p.y,
        Dir::Down => p.y - b.y0,
    }
    .max(0.0)
}

/// Device `i` rotated to `theta` about its current centre.
pub fn rotated_about_center(fps: &[DeviceFootprint], placement: &Placement, i: usize, theta: Rotation, grid: f64) -> DevicePos {
    let c = placement.bbox(fps, i).center();
    if theta == placement.positions[i].theta {
        return placement.positions[i];
    }
    let (w, h) = theta.rotated_size(fps[i].width, fps[i].height);
    DevicePos {
        x: snap(c.x - w / 2.0, grid),
        y: snap(c.y - h / 2.0, grid),
        theta,
    }
}

/// Escape score of device `i` at rotation `theta`: for every pin, the best
/// over allowed directions of free run minus (distance to own boundary +
/// margin); the minimum over pins. The region is the placement's extent
/// padded by `spacing`.
pub fn rotation_score(
    fps: &[DeviceFootprint],
    placement: &Placement,
    i: usize,
    theta: Rotation,
    spacing: f64,
    cfg: &PlaceConfig,
) -> f64 {
    let mut trial = placement.clone();
    trial.positions[i] = rotated_about_center(fps, placement, i, theta, cfg.snap);
    let own = trial.bbox(fps, i);
    let region = trial.extent(fps).expect("at least one device").dilate(spacing);
    let blockers: Vec<Rect> = (0..fps.len()).filter(|&j| j != i).map(|j| trial.bbox(fps, j)).collect();
    let mut score = f64::INFINITY;
    for (k, pin) in fps[i].pins.iter().enumerate() {
        let at = trial.pin_position(fps, i, k);
        let best = Dir::ALL
            .iter()
            .filter(|d| !pin.vertical_only || d.is_vertical())
            .map(|&d| {
                let need = exit_distance(at, d, &own) + cfg.m_margin;
                free_run(at, d, &blockers, &region) - need
            })
            .fold(f64::NEG_INFINITY, f64::max);
        score = score.min(best);
    }
    score
}

/// One pass in connectivity order fixing each device's rotation to the
/// best-scoring angle (ties prefer 0 then ascending angle). A rotation is
/// only admissible if it does not raise the placement cost, so the pass
/// never undoes the search.
pub fn select_rotations(
    fps: &[DeviceFootprint],
    placement: &Placement,
    nets: &[PlaceNet],
    spacing: f64,
    cfg: &PlaceConfig,
) -> (Placement, Vec<f64>) {
    let mut cur = placement.clone();
    let mut cost = placement_cost(fps, &cur, nets, spacing, cfg).total;
    let mut trace = Vec::new();
    for i in connectivity_order(fps.len(), nets) {
        if fps[i].pins.is_empty() {
            trace.push(cost);
            continue;
        }
        let mut best: Option<(f64, Placement, f64)> = None;
        for theta in Rotation::ALL {
            let mut trial = cur.clone();
            trial.positions[i] = rotated_about_center(fps, &cur, i, theta, cfg.snap);
            let c = placement_cost(fps, &trial, nets, spacing, cfg).total;
            if c > cost {
                continue;
            }
            let s = rotation_score(fps, &cur, i, theta, spacing, cfg);
            if best.as_ref().is_none_or(|(bs, _, _)| s > *bs) {
                best = Some((s, trial, c));
            }
        }
        if let Some((_, p, c)) = best {
            cur = p;
            cost = c;
        }
        trace.push(cost);
    }
    (cur, trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementResult {
    pub initial: Placement,
    pub placement: Placement,
    /// Cost after every search iteration and rotation decision.
    pub trace: Vec<f64>,
    pub spacing: f64,
    pub initial_hpwl: f64,
    pub final_cost: CostBreakdown,
}

/// Initial rows, local search with `t_max_factor * N^2` moves, then the
/// rotation pass.
pub fn place(fps: &[DeviceFootprint], nets: &[PlaceNet], f_ghz: f64, em: &EmRules, cfg: &PlaceConfig, seed: u64) -> PlacementResult {
    let spacing = min_spacing(f_ghz, em);
    let initial = initial_placement(fps, nets, spacing, cfg.snap);
    let t_max = cfg.t_max_factor * fps.len() * fps.len();
    let (searched, mut trace) = local_search(fps, &initial, nets, spacing, cfg, t_max, seed);
    let (rotated, rot_trace) = select_rotations(fps, &searched, nets, spacing, cfg);
    trace.extend(rot_trace);
    PlacementResult {
        initial_hpwl: hpwl(fps, &initial, nets),
        final_cost: placement_cost(fps, &rotated, nets, spacing, cfg),
        initial,
        placement: rotated,
        trace,
        spacing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_rule() {
        let r = EmRules {
            guard_fraction: 0.0,
            ..Default::default()
        };
        assert_eq!(min_spacing(3.0, &r), 10.0);
        assert_eq!(min_spacing(60.0, &r), 30.0);
        assert!((min_spacing(22.5, &r) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn four_boxes_in_a_row() {
        let fps: Vec<_> = (0..4).map(|i| DeviceFootprint::boxed(&format!("D{i}"), 10.0, 10.0, &[])).collect();
        let p = initial_placement(&fps, &[], 11.0, 0.1);
        let xs: Vec<f64> = p.positions.iter().map(|d| d.x).collect();
        assert_eq!(xs, vec![0.0, 21.0, 42.0, 63.0]);
        assert!(p.positions.iter().all(|d| d.y == 0.0));
    }

    #[test]
    fn single_net_hpwl() {
        let fps = vec![
            DeviceFootprint::boxed("a", 2.0, 2.0, &[("p", Dir::Left)]),
            DeviceFootprint::boxed("b", 2.0, 2.0, &[("p", Dir::Left)]),
        ];
        let p = Placement {
            positions: vec![
                DevicePos {
                    x: 0.0,
                    y: -1.0,
                    theta: Rotation::R0,
                },
                DevicePos {
                    x: 3.0,
                    y: 3.0,
                    theta: Rotation::R0,
                },
            ],
        };
        let nets = vec![PlaceNet {
            name: "n".into(),
            weight: 1.0,
            pins: vec![(0, 0), (1, 0)],
        }];
        assert_eq!(hpwl(&fps, &p, &nets), 7.0);
    }

    #[test]
    fn lone_device_scores_equal() {
        let fps = vec![DeviceFootprint::boxed("a", 10.0, 10.0, &[("p", Dir::Right)])];
        let p = initial_placement(&fps, &[], 12.0, 0.1);
        let cfg = PlaceConfig::default();
        let s: Vec<f64> = Rotation::ALL.iter().map(|&t| rotation_score(&fps, &p, 0, t, 12.0, &cfg)).collect();
        assert!(s.iter().all(|v| (v - s[0]).abs() < 1e-9), "{s:?}");
    }
}
