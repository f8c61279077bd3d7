//! Reference implementations used as test oracles. They share nothing with
//! the code under test beyond public types and the documented predicates.
#![allow(dead_code)]

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfsynth::flow::SynthResult;
use rfsynth::gdsii::{flatten, Element, GdsLibrary, GdsStructure, LayerMap};
use rfsynth::geom::{Dir, Point, Rect, Rotation};
use rfsynth::netlist::ComponentKind;
use rfsynth::nn::{MlpModel, NormStats};
use rfsynth::pcell::{
    cap_feasible, cap_order, cap_value, res_area, res_feasible, res_order, resistor_total, CapCandidate, CapStack,
    ResCandidate, ResTech, CAP_L_RANGE, CAP_W_RANGE, MAX_STRIPES, RES_L_RANGE, RES_W_RANGE,
};
use rfsynth::placement::{DeviceFootprint, PlaceConfig, PlaceNet, Placement};
use rfsynth::routing::{Node, RoutingGrid, ViaCost};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

// ---------------------------------------------------------------- MLP

/// Relative error as used by the gradient check.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

fn mse(model: &MlpModel, stats: &NormStats, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    let p = model.forward_batch(stats, rows).unwrap();
    p.iter().zip(targets).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / targets.len() as f64
}

/// A small network with every parameter (LayerNorm gains and shifts
/// included) drawn at random, plus a random batch and non-trivial stats.
pub fn random_net(widths: &[usize], seed: u64) -> (MlpModel, NormStats, Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let mut model = MlpModel::new(6, widths, seed);
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = r.gen_range(-1.0..1.0);
        }
    }
    let stats = NormStats {
        mu: (0..6).map(|_| r.gen_range(-2.0..2.0)).collect(),
        sigma: (0..6).map(|_| r.gen_range(0.5..3.0)).collect(),
    };
    let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..6).map(|_| r.gen_range(-4.0..4.0)).collect()).collect();
    let targets: Vec<f64> = (0..5).map(|_| r.gen_range(0.0..3.0)).collect();
    (model, stats, rows, targets)
}

/// Fourth-order central difference of `f` at `x0`.
fn central(f: impl Fn(f64) -> f64, x0: f64, h: f64) -> f64 {
    (f(x0 - 2.0 * h) - 8.0 * f(x0 - h) + 8.0 * f(x0 + h) - f(x0 + 2.0 * h)) / (12.0 * h)
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter and every input of every sample.
pub fn gradient_check(widths: &[usize], seed: u64) -> f64 {
    let (model, stats, rows, targets) = random_net(widths, seed);
    let back = model.backward(&stats, &rows, &targets).unwrap();
    let h = 1e-4;
    let mut worst: f64 = 0.0;

    let analytic: Vec<Vec<f64>> = back.params.tensors().iter().map(|t| t.to_vec()).collect();
    for (ti, grads) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let n = central(
                |v| {
                    let mut probe = model.clone();
                    probe.tensors_mut()[ti][k] = v;
                    mse(&probe, &stats, &rows, &targets)
                },
                model.tensors()[ti][k],
                h,
            );
            worst = worst.max(rel_err(a, n));
        }
    }

    for (i, row) in rows.iter().enumerate() {
        for j in 0..row.len() {
            let n = central(
                |v| {
                    let mut x = row.clone();
                    x[j] = v;
                    model.forward(&stats, &x).unwrap()
                },
                row[j],
                h,
            );
            worst = worst.max(rel_err(back.inputs[[i, j]], n));
        }
    }
    worst
}

// ---------------------------------------------------------------- pcell

/// Exhaustive search over the capacitor grid. Only rows and tails that
/// cannot contain a feasible point no larger than the incumbent are
/// skipped, using monotonicity of C and area in W and L.
pub fn cap_oracle(target: f64, stacks: &[CapStack], tol: f64) -> Option<CapCandidate> {
    let above = |v: f64| (v - target) / target > tol;
    let below = |v: f64| (v - target) / target < -tol;
    let um = |c: u32| c as f64 / 100.0;
    let mut best: Option<CapCandidate> = None;
    for (si, st) in stacks.iter().enumerate() {
        for w in CAP_W_RANGE.0..=CAP_W_RANGE.1 {
            if best.is_some_and(|b| w as u64 * CAP_L_RANGE.0 as u64 > b.area()) {
                break;
            }
            if below(cap_value(st, um(w), um(CAP_L_RANGE.1))) {
                continue;
            }
            for l in CAP_L_RANGE.0..=CAP_L_RANGE.1 {
                if best.is_some_and(|b| w as u64 * l as u64 > b.area()) || above(cap_value(st, um(w), um(l))) {
                    break;
                }
                if cap_feasible(st, w, l, target, tol) {
                    let c = CapCandidate { stack: si, w, l };
                    if best.is_none_or(|b| cap_order(stacks, &c, &b) == Ordering::Less) {
                        best = Some(c);
                    }
                }
            }
        }
    }
    best
}

/// Exhaustive search over stripe counts and the resistor grid, pruned the
/// same way as [`cap_oracle`].
pub fn res_oracle(target: f64, tech: &ResTech, tol: f64) -> Option<ResCandidate> {
    let (px, py) = ((tech.pitch_x * 100.0).round() as u64, (tech.pitch_y * 100.0).round() as u64);
    let above = |v: f64| (v - target) / target > tol;
    let below = |v: f64| (v - target) / target < -tol;
    let um = |c: u32| c as f64 / 100.0;
    let mut best: Option<ResCandidate> = None;
    let best_area = |b: &Option<ResCandidate>| b.map_or(u64::MAX, |c| res_area(&c, px, py));
    for ns in 1..=MAX_STRIPES {
        for np in 1..=MAX_STRIPES {
            for w in RES_W_RANGE.0..=RES_W_RANGE.1 {
                let lo = ResCandidate { w, l: RES_L_RANGE.0, ns, np };
                if res_area(&lo, px, py) > best_area(&best) {
                    break;
                }
                // R falls with W and rises with L
                if below(resistor_total(tech, um(w), um(RES_L_RANGE.1), ns, np)) {
                    continue;
                }
                for l in RES_L_RANGE.0..=RES_L_RANGE.1 {
                    let c = ResCandidate { w, l, ns, np };
                    if res_area(&c, px, py) > best_area(&best) || above(resistor_total(tech, um(w), um(l), ns, np)) {
                        break;
                    }
                    if res_feasible(tech, w, l, ns, np, target, tol) && best.is_none_or(|b| res_order(px, py, &c, &b) == Ordering::Less) {
                        best = Some(c);
                    }
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------- placement

/// Pin position from first principles: rotate the local offset
/// counter-clockwise, then shift the rotated box to the anchor.
pub fn pin_xy(fp: &DeviceFootprint, x: f64, y: f64, theta: Rotation, pin: usize) -> (f64, f64) {
    let (px, py) = (fp.pins[pin].offset.x, fp.pins[pin].offset.y);
    let (w, h) = (fp.width, fp.height);
    let (lx, ly) = match theta {
        Rotation::R0 => (px, py),
        Rotation::R90 => (h - py, px),
        Rotation::R180 => (w - px, h - py),
        Rotation::R270 => (py, w - px),
    };
    (x + lx, y + ly)
}

pub fn box_of(fp: &DeviceFootprint, x: f64, y: f64, theta: Rotation) -> (f64, f64, f64, f64) {
    let (w, h) = match theta {
        Rotation::R0 | Rotation::R180 => (fp.width, fp.height),
        Rotation::R90 | Rotation::R270 => (fp.height, fp.width),
    };
    (x, y, x + w, y + h)
}

/// Placement objective written out directly: weighted HPWL, `K` times the
/// pairwise overlap area, and the squared spacing shortfall per pair.
pub fn naive_cost(fps: &[DeviceFootprint], pl: &Placement, nets: &[PlaceNet], spacing: f64, cfg: &PlaceConfig) -> f64 {
    let mut wl = 0.0;
    for n in nets {
        if n.pins.is_empty() {
            continue;
        }
        let pts: Vec<(f64, f64)> = n
            .pins
            .iter()
            .map(|&(d, p)| {
                let q = pl.positions[d];
                pin_xy(&fps[d], q.x, q.y, q.theta, p)
            })
            .collect();
        let xs = pts.iter().map(|p| p.0);
        let ys = pts.iter().map(|p| p.1);
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let all: Vec<f64> = v.collect();
            all.iter().cloned().fold(f64::MIN, f64::max) - all.iter().cloned().fold(f64::MAX, f64::min)
        };
        wl += n.weight * (span(&mut xs.clone()) + span(&mut ys.clone()));
    }
    let boxes: Vec<_> = fps
        .iter()
        .zip(&pl.positions)
        .map(|(f, q)| box_of(f, q.x, q.y, q.theta))
        .collect();
    let mut pen = 0.0;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let (a, b) = (boxes[i], boxes[j]);
            let ox = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
            let oy = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
            let gx = (b.0 - a.2).max(a.0 - b.2);
            let gy = (b.1 - a.3).max(a.1 - b.3);
            let short = (spacing - gx.max(gy)).max(0.0);
            pen += cfg.overlap_k * ox * oy + cfg.spacing_weight * short * short;
        }
    }
    wl + pen
}

/// Random boxed devices with one to three pins and random multi-pin nets.
pub fn random_instance(seed: u64, n: usize) -> (Vec<DeviceFootprint>, Vec<PlaceNet>) {
    let mut r = rng(seed);
    let fps: Vec<DeviceFootprint> = (0..n)
        .map(|i| {
            let w = (r.gen_range(2.0..60.0f64) * 10.0).round() / 10.0;
            let h = (r.gen_range(2.0..60.0f64) * 10.0).round() / 10.0;
            let k = r.gen_range(1..=3);
            let dirs: Vec<(String, Dir)> = Dir::ALL.iter().take(k).enumerate().map(|(p, d)| (format!("P{p}"), *d)).collect();
            let pins: Vec<(&str, Dir)> = dirs.iter().map(|(s, d)| (s.as_str(), *d)).collect();
            let mut fp = DeviceFootprint::boxed(&format!("D{i}"), w, h, &pins);
            fp.kind = ComponentKind::Resistor;
            fp
        })
        .collect();
    let all_pins: Vec<(usize, usize)> = fps.iter().enumerate().flat_map(|(d, f)| (0..f.pins.len()).map(move |p| (d, p))).collect();
    let n_nets = r.gen_range(1..=n);
    let nets = (0..n_nets)
        .map(|k| {
            let size = r.gen_range(2..=4.min(all_pins.len()));
            let mut pins: Vec<(usize, usize)> = Vec::new();
            while pins.len() < size {
                let p = all_pins[r.gen_range(0..all_pins.len())];
                if !pins.contains(&p) {
                    pins.push(p);
                }
            }
            PlaceNet {
                name: format!("n{k}"),
                weight: r.gen_range(1..=3) as f64,
                pins,
            }
        })
        .collect();
    (fps, nets)
}

// ---------------------------------------------------------------- routing

fn via_cost(via: ViaCost, g: u64) -> u64 {
    match via {
        ViaCost::Proportional { factor } => g * (1 + factor),
        ViaCost::Fixed { penalty } => g + penalty,
    }
}

/// Label-setting Dijkstra over the whole window with the router's move
/// costs. Returns the least cost of reaching `t`'s (x, y) on any layer.
pub fn dijkstra(grid: &RoutingGrid, s: Node, t: Node, via: ViaCost) -> Option<u64> {
    if s == t {
        return Some(0);
    }
    let (nx, ny, nl) = (grid.nx as i64, grid.ny as i64, grid.n_layers());
    let idx = |n: &Node| ((n.layer as i64 * ny + (n.iy - grid.iy0)) * nx + (n.ix - grid.ix0)) as usize;
    let mut dist = vec![u64::MAX; nl * (nx * ny) as usize];
    let mut heap = BinaryHeap::new();
    dist[idx(&s)] = 0;
    heap.push(Reverse((0u64, s.layer, s.ix, s.iy)));
    while let Some(Reverse((g, layer, ix, iy))) = heap.pop() {
        let p = Node::new(ix, iy, layer);
        if g > dist[idx(&p)] {
            continue;
        }
        if ix == t.ix && iy == t.iy {
            let (lo, hi) = (layer.min(t.layer), layer.max(t.layer));
            if (lo..=hi).all(|l| l == layer || l == t.layer || !grid.is_blocked(&Node::new(ix, iy, l))) {
                return Some(g);
            }
        }
        let mut next: Vec<(Node, u64)> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .map(|&(dx, dy)| (Node::new(ix + dx, iy + dy, layer), g + 1))
            .collect();
        if (layer as usize) + 1 < nl {
            next.push((Node::new(ix, iy, layer + 1), via_cost(via, g)));
        }
        if layer > 0 {
            next.push((Node::new(ix, iy, layer - 1), via_cost(via, g)));
        }
        for (q, gq) in next {
            if grid.is_blocked(&q) {
                continue;
            }
            if gq < dist[idx(&q)] {
                dist[idx(&q)] = gq;
                heap.push(Reverse((gq, q.layer, q.ix, q.iy)));
            }
        }
    }
    None
}

/// Cost of a router path under the same move costs. The trailing vias
/// stacked on `t`'s (x, y) are free.
pub fn path_cost(path: &[Node], t: &Node, via: ViaCost) -> u64 {
    let mut end = path.len();
    while end > 1 && path[end - 2].ix == t.ix && path[end - 2].iy == t.iy {
        end -= 1;
    }
    let mut g = 0;
    for w in path[..end].windows(2) {
        g = if w[0].layer == w[1].layer { g + 1 } else { via_cost(via, g) };
    }
    g
}

/// Random window of up to `max` x `max` x 3 with rectangular and scattered
/// obstacles, plus two free endpoints.
pub fn random_grid(seed: u64, max: usize) -> (RoutingGrid, Node, Node) {
    let mut r = rng(seed);
    let nx = r.gen_range(5..=max);
    let ny = r.gen_range(5..=max);
    let layers: Vec<String> = ["M1", "QA", "QB"].iter().map(|s| s.to_string()).collect();
    let mut g = RoutingGrid::empty(0.1, &Rect::new(0.0, 0.0, (nx - 1) as f64 * 0.1, (ny - 1) as f64 * 0.1), &layers);
    for _ in 0..r.gen_range(0..12) {
        let (x0, y0) = (r.gen_range(0..nx as i64), r.gen_range(0..ny as i64));
        let (w, h) = (r.gen_range(1..=nx as i64 / 2 + 1), r.gen_range(1..=ny as i64 / 2 + 1));
        let layer = r.gen_range(0..4u8);
        for ix in x0..(x0 + w).min(nx as i64) {
            for iy in y0..(y0 + h).min(ny as i64) {
                for l in 0..3u8 {
                    // layer 3 means all layers
                    if layer == 3 || layer == l {
                        g.set_blocked(&Node::new(ix, iy, l), true);
                    }
                }
            }
        }
    }
    let density = r.gen_range(0.0..0.3);
    for ix in 0..nx as i64 {
        for iy in 0..ny as i64 {
            for l in 0..3u8 {
                if r.gen_bool(density) {
                    g.set_blocked(&Node::new(ix, iy, l), true);
                }
            }
        }
    }
    let pick = |r: &mut ChaCha8Rng| loop {
        let n = Node::new(r.gen_range(0..nx as i64), r.gen_range(0..ny as i64), r.gen_range(0..3u8));
        if !g.is_blocked(&n) {
            return n;
        }
    };
    let s = pick(&mut r);
    let t = pick(&mut r);
    (g, s, t)
}

/// Minimum total Manhattan length over every spanning tree of `pts`.
pub fn exhaustive_mst(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 2 {
        return 0.0;
    }
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut comp: Vec<usize> = (0..n).collect();
        let mut total = 0.0;
        for (k, &(i, j)) in edges.iter().enumerate() {
            if mask & (1 << k) != 0 {
                let (a, b) = (comp[i], comp[j]);
                for c in comp.iter_mut() {
                    if *c == b {
                        *c = a;
                    }
                }
                total += pts[i].manhattan(&pts[j]);
            }
        }
        if comp.iter().all(|&c| c == comp[0]) {
            best = best.min(total);
        }
    }
    best
}

/// Random inductor-free netlist text with `n` components.
pub fn random_netlist(seed: u64, n: usize) -> String {
    let mut r = rng(seed);
    let nets = ["a", "b", "c", "d", "e", "f"];
    let mut text = format!("* random {seed}\n.FREQ {}\n", r.gen_range(2..60));
    for i in 0..n {
        let pick = |r: &mut ChaCha8Rng| nets[r.gen_range(0..nets.len())];
        let (a, mut b) = (pick(&mut r), pick(&mut r));
        while b == a {
            b = pick(&mut r);
        }
        match r.gen_range(0..3) {
            0 => text += &format!("R{i} {a} {b} {:.1}\n", log_uniform(&mut r, 20.0, 5000.0)),
            1 => text += &format!("C{i} {a} {b} {:.3}\n", log_uniform(&mut r, 0.02, 1.0)),
            _ => text += &format!("M{i} {a} {b} {}\n", pick(&mut r)),
        }
    }
    text + ".END\n"
}

// ---------------------------------------------------------------- gdsii

/// One 1 x 1 um square on layer 10 in structure CELL of library LIB,
/// epoch timestamps. Bytes written out from the record definitions.
pub fn golden() -> Vec<u8> {
    let epoch = [0x07, 0xB2, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0];
    let mut b = vec![0x00, 0x06, 0x00, 0x02, 0x02, 0x58];
    b.extend([0x00, 0x1C, 0x01, 0x02]);
    b.extend(epoch);
    b.extend(epoch);
    b.extend([0x00, 0x08, 0x02, 0x06, b'L', b'I', b'B', 0]);
    b.extend([0x00, 0x14, 0x03, 0x05]);
    b.extend([0x3E, 0x41, 0x89, 0x37, 0x4B, 0xC6, 0xA7, 0xF0]);
    b.extend([0x39, 0x44, 0xB8, 0x2F, 0xA0, 0x9B, 0x5A, 0x54]);
    b.extend([0x00, 0x1C, 0x05, 0x02]);
    b.extend(epoch);
    b.extend(epoch);
    b.extend([0x00, 0x08, 0x06, 0x06, b'C', b'E', b'L', b'L']);
    b.extend([0x00, 0x04, 0x08, 0x00]);
    b.extend([0x00, 0x06, 0x0D, 0x02, 0x00, 0x0A]);
    b.extend([0x00, 0x06, 0x0E, 0x02, 0x00, 0x00]);
    b.extend([0x00, 0x2C, 0x10, 0x03]);
    for (x, y) in [(0i32, 0i32), (1000, 0), (1000, 1000), (0, 1000), (0, 0)] {
        b.extend(x.to_be_bytes());
        b.extend(y.to_be_bytes());
    }
    b.extend([0x00, 0x04, 0x11, 0x00]);
    b.extend([0x00, 0x04, 0x07, 0x00]);
    b.extend([0x00, 0x04, 0x04, 0x00]);
    b
}

pub fn square_lib() -> GdsLibrary {
    let mut lib = GdsLibrary::new("LIB");
    let mut s = GdsStructure::new("CELL");
    s.elements.push(Element::Boundary {
        layer: 10,
        datatype: 0,
        xy: vec![(0, 0), (1000, 0), (1000, 1000), (0, 1000), (0, 0)],
    });
    lib.structures.push(s);
    lib
}

fn to_db(v: f64) -> i64 {
    (v * 1000.0).round() as i64
}

/// Shape rectangle in world coordinates: rotate inside the `w x h` cell
/// box, then shift to the placed lower-left corner.
fn world(r: &Rect, w: f64, h: f64, x: f64, y: f64, theta: Rotation) -> (i64, i64, i64, i64) {
    let (a, b) = match theta {
        Rotation::R0 => ((r.x0, r.y0), (r.x1, r.y1)),
        Rotation::R90 => ((h - r.y0, r.x0), (h - r.y1, r.x1)),
        Rotation::R180 => ((w - r.x0, h - r.y0), (w - r.x1, h - r.y1)),
        Rotation::R270 => ((r.y0, w - r.x0), (r.y1, w - r.x1)),
    };
    (
        to_db(x + a.0.min(b.0)),
        to_db(y + a.1.min(b.1)),
        to_db(x + a.0.max(b.0)),
        to_db(y + a.1.max(b.1)),
    )
}

/// Compares the flattened library against every pcell shape placed by
/// hand. Returns the number of shapes checked and a description of each
/// shape with no flattened boundary within 1 db unit. Open or short
/// boundaries count as mismatches too.
pub fn flatten_mismatches(r: &SynthResult, layers: &LayerMap) -> (usize, Vec<String>) {
    let mut missing = Vec::new();
    let flat = match flatten(&r.library, &r.library.name) {
        Ok(f) => f,
        Err(e) => return (0, vec![e.to_string()]),
    };
    let boundaries: Vec<_> = flat.iter().filter(|e| !e.is_path).collect();
    for e in &boundaries {
        if e.xy.len() < 5 || e.xy.first() != e.xy.last() {
            missing.push(format!("open boundary on layer {}", e.layer));
        }
    }
    let mut checked = 0;
    for (i, cell) in r.sized.cells.iter().enumerate() {
        let pos = r.placement.placement.positions[i];
        let g = &cell.geometry;
        for s in &g.shapes {
            let (layer, datatype) = layers.get(&s.layer).unwrap();
            let want = world(&s.rect, g.width, g.height, pos.x, pos.y, pos.theta);
            let hit = boundaries.iter().any(|e| {
                let b = e.bbox();
                e.layer == layer
                    && e.datatype == datatype
                    && (b.0 - want.0).abs() <= 1
                    && (b.1 - want.1).abs() <= 1
                    && (b.2 - want.2).abs() <= 1
                    && (b.3 - want.3).abs() <= 1
            });
            if !hit {
                missing.push(format!("{} shape on {} at {want:?}", cell.id, s.layer));
            }
            checked += 1;
        }
    }
    (checked, missing)
}
