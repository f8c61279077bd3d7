use serde::Serialize;

use crate::geom::{Dir, Point, Rect};

use super::grid::EPS;
use super::{Node, RouteConfig, RoutingGrid};

/// Wire from a pin to its escape node: an exact polyline starting at the
/// pin (which may sit off the lattice) and ending on a lattice node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stub {
    pub net: String,
    pub device: usize,
    pub pin: usize,
    pub layer: u8,
    pub points: Vec<Point>,
}

impl Stub {
    /// Direction of the first leg out of the pin.
    pub fn facing(&self) -> Option<Dir> {
        let (a, b) = (self.points.first()?, self.points.get(1)?);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        if dx.abs() < EPS && dy.abs() < EPS {
            None
        } else if dx.abs() >= dy.abs() {
            Some(if dx > 0.0 { Dir::Right } else { Dir::Left })
        } else {
            Some(if dy > 0.0 { Dir::Up } else { Dir::Down })
        }
    }

    /// `r` cut back to the side of the pin the stub leaves on. Stub metal
    /// never reaches behind its pin.
    pub fn ahead(&self, r: Rect) -> Rect {
        let (Some(p), Some(d)) = (self.points.first(), self.facing()) else {
            return r;
        };
        let mut r = r;
        match d {
            Dir::Right => r.x0 = r.x0.max(p.x).min(r.x1),
            Dir::Left => r.x1 = r.x1.min(p.x).max(r.x0),
            Dir::Up => r.y0 = r.y0.max(p.y).min(r.y1),
            Dir::Down => r.y1 = r.y1.min(p.y).max(r.y0),
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeResult {
    /// Polyline from the exact pin position to the escape node.
    pub points: Vec<Point>,
    /// Lattice nodes visited after leaving the pin.
    pub nodes: Vec<Node>,
    pub escape: Node,
    pub dir: Dir,
    /// 1 for a straight escape, 2 for a dogleg.
    pub phase: u8,
}

fn strictly_inside(r: &Rect, p: Point) -> bool {
    p.x > r.x0 + EPS && p.x < r.x1 - EPS && p.y > r.y0 + EPS && p.y < r.y1 - EPS
}

/// First lattice node at least `lead` from `pin` along `d`. The sideways
/// jog onto the lattice happens there, so its metal stays ahead of the pin.
fn first_node(grid: &RoutingGrid, pin: Point, d: Dir, layer: u8, lead: f64) -> Node {
    let p = grid.pitch;
    let (fx, fy) = (pin.x / p, pin.y / p);
    let k = lead / p;
    let (ix, iy) = match d {
        Dir::Right => ((fx + k - EPS).ceil(), fy.round()),
        Dir::Left => ((fx - k + EPS).floor(), fy.round()),
        Dir::Up => (fx.round(), (fy + k - EPS).ceil()),
        Dir::Down => (fx.round(), (fy - k + EPS).floor()),
    };
    Node::new(ix as i64, iy as i64, layer)
}

/// Free steps from `n` along `d` (not counting `n`), capped at `cap`.
fn run_length(grid: &RoutingGrid, n: Node, d: Dir, cap: usize) -> usize {
    let mut k = 0;
    let mut cur = n;
    while k < cap {
        cur = cur.step(d);
        if grid.is_blocked(&cur) {
            break;
        }
        k += 1;
    }
    k
}

fn walk(n: Node, d: Dir, k: usize) -> Node {
    let (dx, dy) = d.delta();
    Node::new(n.ix + dx * k as i64, n.iy + dy * k as i64, n.layer)
}

/// Steps from `n` along `d` until the node is no longer strictly inside `halo`.
fn steps_to_exit(grid: &RoutingGrid, n: Node, d: Dir, halo: &Rect) -> usize {
    let mut k = 0;
    while strictly_inside(halo, grid.point(&walk(n, d, k))) {
        k += 1;
    }
    k
}

fn polyline(grid: &RoutingGrid, pin: Point, d: Dir, corners: &[Node]) -> Vec<Point> {
    let n0 = grid.point(&corners[0]);
    let bend = if d.is_vertical() { Point::new(pin.x, n0.y) } else { Point::new(n0.x, pin.y) };
    let mut pts = vec![pin, bend, n0];
    pts.extend(corners[1..].iter().map(|n| grid.point(n)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
    pts
}

fn nodes_along(start: Node, legs: &[(Dir, usize)]) -> Vec<Node> {
    let mut out = vec![start];
    let mut cur = start;
    for &(d, k) in legs {
        for _ in 0..k {
            cur = cur.step(d);
            out.push(cur);
        }
    }
    out
}

/// Two-phase escape of one pin out of its device keep-out `halo`.
///
/// Phase 1 tries straight runs in the allowed directions, longest free run
/// first. Phase 2 tries doglegs: out along a direction, sideways, then out
/// again. Every visited node must be unblocked in `grid`; the escape node is
/// the first one outside `halo`.
pub fn pin_escape(
    grid: &RoutingGrid,
    halo: &Rect,
    pin: Point,
    layer: u8,
    dirs: &[Dir],
    cfg: &RouteConfig,
) -> Option<EscapeResult> {
    let cap = grid.nx.max(grid.ny);
    let mut cands: Vec<(Dir, Node, usize)> = dirs
        .iter()
        .map(|&d| {
            let n0 = first_node(grid, pin, d, layer, cfg.width / 2.0);
            let free = if grid.is_blocked(&n0) { 0 } else { run_length(grid, n0, d, cap) + 1 };
            (d, n0, free)
        })
        .collect();
    // longest free run first; Dir::ALL order on ties
    cands.sort_by_key(|&(d, _, free)| (std::cmp::Reverse(free), Dir::ALL.iter().position(|x| *x == d)));

    for &(d, n0, free) in &cands {
        if free == 0 {
            continue;
        }
        let need = steps_to_exit(grid, n0, d, halo);
        if need < free {
            let nodes = nodes_along(n0, &[(d, need)]);
            let escape = *nodes.last().unwrap();
            return Some(EscapeResult {
                points: polyline(grid, pin, d, &[n0, escape]),
                nodes,
                escape,
                dir: d,
                phase: 1,
            });
        }
    }

    for &(d, n0, free) in &cands {
        for a in 0..free {
            let m0 = walk(n0, d, a);
            for o in d.orthogonal() {
                for b in 1..=cfg.max_dogleg {
                    let m = walk(m0, o, b);
                    if grid.is_blocked(&m) {
                        break;
                    }
                    for c in 0..=cfg.max_dogleg {
                        let e = walk(m, d, c);
                        if grid.is_blocked(&e) {
                            break;
                        }
                        if !strictly_inside(halo, grid.point(&e)) {
                            let nodes = nodes_along(n0, &[(d, a), (o, b), (d, c)]);
                            return Some(EscapeResult {
                                points: polyline(grid, pin, d, &[n0, m0, m, e]),
                                nodes,
                                escape: e,
                                dir: d,
                                phase: 2,
                            });
                        }
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::{build_grid, device_halo};
    use crate::placement::{DeviceFootprint, DevicePos, Placement};
    use crate::geom::Rotation;

    #[test]
    fn straight_right_escape() {
        let fps = vec![DeviceFootprint::boxed("a", 10.0, 10.0, &[("p", Dir::Right)])];
        let pl = Placement {
            positions: vec![DevicePos {
                x: 0.0,
                y: 0.0,
                theta: Rotation::R0,
            }],
        };
        let cfg = RouteConfig::default();
        let (grid, _) = build_grid(&fps, &pl, &cfg).unwrap();
        let body = pl.bbox(&fps, 0);
        let halo = device_halo(&body, &cfg);
        let r = pin_escape(&grid, &halo, Point::new(10.0, 5.0), 0, &[Dir::Right], &cfg).unwrap();
        assert_eq!(r.phase, 1);
        assert_eq!(r.dir, Dir::Right);
        // halo edge at 10 + s_dev + w/2 = 11.25; first lattice node at or beyond is 11.3
        let esc = grid.point(&r.escape);
        assert!((esc.x - 11.3).abs() < 1e-9 && (esc.y - 5.0).abs() < 1e-9);
        assert_eq!(r.points.first().copied(), Some(Point::new(10.0, 5.0)));
    }
}
