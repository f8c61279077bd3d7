use serde::Serialize;

use crate::geom::{Point, Rect};
use crate::placement::{DeviceFootprint, Placement};

use super::check::check_spacing;
use super::grid::{device_halo, escape_dirs};
use super::{astar_route, build_grid, mst, pin_escape, Corridor, Node, RouteConfig, RouteError, RoutingGrid, SpacingViolation, Stub};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinRequest {
    pub device: usize,
    pub pin: usize,
    /// Index into the routing layers.
    pub layer: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetRequest {
    pub name: String,
    pub weight: f64,
    pub pins: Vec<PinRequest>,
}

/// Grid path of one routed MST edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutePath {
    pub net: String,
    pub points: Vec<Node>,
    pub width: f64,
}

impl RoutePath {
    /// Every consecutive pair is one in-plane step or one layer change.
    pub fn is_well_formed(&self) -> bool {
        self.points.windows(2).all(|w| {
            let planar = w[0].layer == w[1].layer && w[0].manhattan_xy(&w[1]) == 1;
            let via = w[0].same_xy(&w[1]) && w[0].layer.abs_diff(w[1].layer) == 1;
            planar || via
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteFailure {
    pub net: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RoutedDesign {
    pub pitch: f64,
    pub width: f64,
    pub layers: Vec<String>,
    pub stubs: Vec<Stub>,
    pub paths: Vec<RoutePath>,
    pub failures: Vec<RouteFailure>,
    pub violations: Vec<SpacingViolation>,
    /// Size of the cumulative blocked set after each commit.
    pub blocked_history: Vec<usize>,
}

impl RoutedDesign {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty() && self.violations.is_empty()
    }

    pub fn wirelength(&self) -> f64 {
        self.paths
            .iter()
            .map(|p| p.points.windows(2).filter(|w| w[0].layer == w[1].layer).count() as f64 * self.pitch)
            .sum()
    }
}

/// Splits a node path into maximal straight same-layer runs. A layer
/// visited at a single node yields a zero-length run.
pub fn segments(points: &[Node]) -> Vec<(Node, Node)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let start = points[i];
        let mut j = i;
        let mut dir: Option<(i64, i64)> = None;
        while j + 1 < points.len() && points[j + 1].layer == start.layer {
            let d = (points[j + 1].ix - points[j].ix, points[j + 1].iy - points[j].iy);
            match dir {
                None => dir = Some(d),
                Some(prev) if prev != d => break,
                _ => {}
            }
            j += 1;
        }
        out.push((start, points[j]));
        if j + 1 < points.len() && points[j + 1].layer == start.layer {
            // direction change: next run starts at the corner
            i = j;
        } else {
            i = j + 1;
        }
    }
    out
}

fn seg_rect(grid_pitch: f64, a: &Node, b: &Node) -> Rect {
    Rect::new(
        a.ix as f64 * grid_pitch,
        a.iy as f64 * grid_pitch,
        b.ix as f64 * grid_pitch,
        b.iy as f64 * grid_pitch,
    )
}

/// Keep-out (open rectangle) that a committed wire imposes on other nets.
#[derive(Debug, Clone)]
struct Halo {
    layer: usize,
    rect: Rect,
    /// For pin stubs: the owning device and the smaller keep-out that
    /// applies to other pins of that same device.
    pin: Option<(usize, Rect)>,
}

fn path_halos(pitch: f64, points: &[Node], r: f64) -> Vec<Halo> {
    segments(points)
        .iter()
        .map(|(a, b)| Halo {
            layer: a.layer as usize,
            rect: seg_rect(pitch, a, b).dilate(r),
            pin: None,
        })
        .collect()
}

fn stub_halos(stub: &Stub, r: f64, r_pin: f64) -> Vec<Halo> {
    let first = stub.points.first().map(|p| Rect::new(p.x, p.y, p.x, p.y));
    stub.points
        .windows(2)
        .map(|w| Rect::new(w[0].x, w[0].y, w[1].x, w[1].y))
        .chain(first)
        .map(|seg| Halo {
            layer: stub.layer as usize,
            rect: seg.dilate(r),
            pin: Some((stub.device, stub.ahead(seg.dilate(r_pin)))),
        })
        .collect()
}

struct HaloStore {
    per_net: Vec<Vec<Halo>>,
}

impl HaloStore {
    /// `base` plus every other net's keep-outs. Stubs on `device` only
    /// block with their pin keep-out.
    fn view(&self, base: &RoutingGrid, exclude: usize, device: Option<usize>) -> RoutingGrid {
        let mut g = base.clone();
        for (n, halos) in self.per_net.iter().enumerate() {
            if n == exclude {
                continue;
            }
            for h in halos {
                match h.pin {
                    Some((d, r)) if Some(d) == device => g.block_open(Some(h.layer), &r),
                    _ => g.block_open(Some(h.layer), &h.rect),
                }
            }
        }
        g
    }
}

fn commit(global: &mut RoutingGrid, store: &mut HaloStore, net: usize, halos: Vec<Halo>, history: &mut Vec<usize>) {
    for h in &halos {
        global.block_open(Some(h.layer), &h.rect);
    }
    store.per_net[net].extend(halos);
    history.push(global.blocked_count());
}

/// Routes one net over `view`: MST over the escape nodes, then A* per edge.
/// Returns the committed paths; stops at the first unroutable edge.
pub fn route_net(name: &str, escapes: &[Node], view: &RoutingGrid, cfg: &RouteConfig) -> Result<Vec<RoutePath>, RouteError> {
    let pts: Vec<Point> = escapes.iter().map(|n| view.point(n)).collect();
    let mut out = Vec::new();
    for (k, (i, j)) in mst(&pts).into_iter().enumerate() {
        let r = astar_route(view, escapes[i], escapes[j], cfg.via).map_err(|_| RouteError::NetUnroutable {
            net: name.to_string(),
            edge: k,
        })?;
        if r.path.len() > 1 {
            out.push(RoutePath {
                net: name.to_string(),
                points: r.path,
                width: cfg.width,
            });
        }
    }
    Ok(out)
}

/// Net order: weight descending, pin count descending, name.
pub fn net_order(nets: &[NetRequest]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..nets.len()).collect();
    order.sort_by(|&a, &b| {
        let (na, nb) = (&nets[a], &nets[b]);
        nb.weight
            .total_cmp(&na.weight)
            .then(nb.pins.len().cmp(&na.pins.len()))
            .then(na.name.cmp(&nb.name))
    });
    order
}

/// Escapes every pin, then routes nets in priority order. Each committed
/// wire becomes a keep-out for all other nets. Failures are collected per
/// net; the result always ends with a spacing audit.
pub fn route_all(
    fps: &[DeviceFootprint],
    placement: &Placement,
    nets: &[NetRequest],
    cfg: &RouteConfig,
) -> Result<RoutedDesign, RouteError> {
    let mut design = RoutedDesign {
        pitch: cfg.pitch,
        width: cfg.width,
        layers: cfg.layers.clone(),
        ..Default::default()
    };
    if fps.is_empty() {
        if nets.iter().any(|n| !n.pins.is_empty()) {
            return Err(RouteError::EmptyPlacement);
        }
        return Ok(design);
    }
    let (grid, corridors) = build_grid(fps, placement, cfg)?;
    let halos: Vec<Rect> = (0..fps.len()).map(|i| device_halo(&placement.bbox(fps, i), cfg)).collect();
    // trunks never use corridors
    let mut trunk_base = grid.clone();
    for h in &halos {
        trunk_base.block_open(None, h);
    }
    let mut global = trunk_base.clone();
    let mut store = HaloStore {
        per_net: vec![Vec::new(); nets.len()],
    };
    let r = cfg.net_halo();
    let order = net_order(nets);
    let mut escapes: Vec<Vec<Node>> = vec![Vec::new(); nets.len()];
    let mut failed = vec![false; nets.len()];

    for &n in &order {
        for req in &nets[n].pins {
            let mut base = trunk_base.clone();
            let own: Vec<&Corridor> = corridors.iter().filter(|c| c.device == req.device && c.pin == req.pin).collect();
            for c in &own {
                base.fill_closed(None, &c.rect, false);
            }
            for (i, h) in halos.iter().enumerate() {
                if i != req.device && own.iter().any(|c| c.rect.overlap_area(h) > 0.0) {
                    base.block_open(None, h);
                }
            }
            // other nets' wires stay blocked inside our corridors
            let view = store.view(&base, n, Some(req.device));
            let body = placement.bbox(fps, req.device);
            let at = placement.pin_position(fps, req.device, req.pin);
            let dirs = escape_dirs(&body, at, cfg.width);
            match pin_escape(&view, &halos[req.device], at, req.layer, &dirs, cfg) {
                Some(e) => {
                    let stub = Stub {
                        net: nets[n].name.clone(),
                        device: req.device,
                        pin: req.pin,
                        layer: req.layer,
                        points: e.points,
                    };
                    commit(&mut global, &mut store, n, stub_halos(&stub, r, cfg.pin_halo()), &mut design.blocked_history);
                    design.stubs.push(stub);
                    escapes[n].push(e.escape);
                }
                None => {
                    failed[n] = true;
                    design.failures.push(RouteFailure {
                        net: nets[n].name.clone(),
                        reason: RouteError::EscapeFailure {
                            device: fps[req.device].id.clone(),
                            pin: fps[req.device].pins[req.pin].name.clone(),
                        }
                        .to_string(),
                    });
                }
            }
        }
    }

    for &n in &order {
        if failed[n] || escapes[n].len() < 2 {
            continue;
        }
        let view = store.view(&trunk_base, n, None);
        let pts: Vec<Point> = escapes[n].iter().map(|e| view.point(e)).collect();
        for (k, (i, j)) in mst(&pts).into_iter().enumerate() {
            match astar_route(&view, escapes[n][i], escapes[n][j], cfg.via) {
                Ok(res) => {
                    if res.path.len() > 1 {
                        let halos = path_halos(cfg.pitch, &res.path, r);
                        commit(&mut global, &mut store, n, halos, &mut design.blocked_history);
                        design.paths.push(RoutePath {
                            net: nets[n].name.clone(),
                            points: res.path,
                            width: cfg.width,
                        });
                    }
                }
                Err(_) => design.failures.push(RouteFailure {
                    net: nets[n].name.clone(),
                    reason: RouteError::NetUnroutable {
                        net: nets[n].name.clone(),
                        edge: k,
                    }
                    .to_string(),
                }),
            }
        }
    }

    let bodies: Vec<(String, Rect)> = (0..fps.len()).map(|i| (fps[i].id.clone(), placement.bbox(fps, i))).collect();
    design.violations = check_spacing(&design, &bodies, cfg);
    Ok(design)
}
