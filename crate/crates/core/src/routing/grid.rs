use serde::Serialize;

use crate::geom::{Dir, Point, Rect};
use crate::placement::{DeviceFootprint, Placement};

use super::{RouteConfig, RouteError};

/// Slack used when testing lattice points against rectangle edges, um.
pub(crate) const EPS: f64 = 1e-7;

/// Dense bit matrix, row-major with 64-bit words per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    nx: usize,
    ny: usize,
    wpr: usize,
    words: Vec<u64>,
}

impl BitGrid {
    pub fn new(nx: usize, ny: usize) -> Self {
        let wpr = nx.div_ceil(64);
        Self {
            nx,
            ny,
            wpr,
            words: vec![0; wpr * ny],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.words[j * self.wpr + i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let w = &mut self.words[j * self.wpr + i / 64];
        if v {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    /// Sets or clears the inclusive block `[i0, i1] x [j0, j1]`.
    pub fn fill(&mut self, i0: usize, i1: usize, j0: usize, j1: usize, v: bool) {
        for j in j0..=j1 {
            let row = &mut self.words[j * self.wpr..(j + 1) * self.wpr];
            let (w0, w1) = (i0 / 64, i1 / 64);
            for (w, word) in row.iter_mut().enumerate().take(w1 + 1).skip(w0) {
                let lo = if w == w0 { i0 % 64 } else { 0 };
                let hi = if w == w1 { i1 % 64 } else { 63 };
                let mask = if hi - lo == 63 {
                    u64::MAX
                } else {
                    ((1u64 << (hi - lo + 1)) - 1) << lo
                };
                if v {
                    *word |= mask;
                } else {
                    *word &= !mask;
                }
            }
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn or_assign(&mut self, other: &BitGrid) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_superset_of(&self, other: &BitGrid) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == *b)
    }
}

/// A routing-grid node: global lattice indices (`x = ix * pitch`) and layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Node {
    pub ix: i64,
    pub iy: i64,
    pub layer: u8,
}

impl Node {
    pub fn new(ix: i64, iy: i64, layer: u8) -> Self {
        Self { ix, iy, layer }
    }

    pub fn same_xy(&self, other: &Node) -> bool {
        self.ix == other.ix && self.iy == other.iy
    }

    pub fn manhattan_xy(&self, other: &Node) -> u64 {
        self.ix.abs_diff(other.ix) + self.iy.abs_diff(other.iy)
    }

    pub fn step(&self, d: Dir) -> Node {
        let (dx, dy) = d.delta();
        Node::new(self.ix + dx, self.iy + dy, self.layer)
    }
}

/// Lattice window with per-layer blocked bits.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingGrid {
    pub pitch: f64,
    pub ix0: i64,
    pub iy0: i64,
    pub nx: usize,
    pub ny: usize,
    pub layers: Vec<String>,
    blocked: Vec<BitGrid>,
}

impl RoutingGrid {
    /// Unblocked grid covering `extent` (snapped outward to the lattice).
    pub fn empty(pitch: f64, extent: &Rect, layers: &[String]) -> Self {
        let ix0 = ((extent.x0 + EPS) / pitch).floor() as i64;
        let iy0 = ((extent.y0 + EPS) / pitch).floor() as i64;
        let ix1 = ((extent.x1 - EPS) / pitch).ceil() as i64;
        let iy1 = ((extent.y1 - EPS) / pitch).ceil() as i64;
        let nx = (ix1 - ix0 + 1).max(1) as usize;
        let ny = (iy1 - iy0 + 1).max(1) as usize;
        Self {
            pitch,
            ix0,
            iy0,
            nx,
            ny,
            layers: layers.to_vec(),
            blocked: layers.iter().map(|_| BitGrid::new(nx, ny)).collect(),
        }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn extent(&self) -> Rect {
        Rect::new(
            self.ix0 as f64 * self.pitch,
            self.iy0 as f64 * self.pitch,
            (self.ix0 + self.nx as i64 - 1) as f64 * self.pitch,
            (self.iy0 + self.ny as i64 - 1) as f64 * self.pitch,
        )
    }

    #[inline]
    pub fn local(&self, n: &Node) -> Option<(usize, usize)> {
        let i = n.ix - self.ix0;
        let j = n.iy - self.iy0;
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 || n.layer as usize >= self.blocked.len() {
            return None;
        }
        Some((i as usize, j as usize))
    }

    pub fn contains(&self, n: &Node) -> bool {
        self.local(n).is_some()
    }

    /// Out-of-window nodes count as blocked.
    #[inline]
    pub fn is_blocked(&self, n: &Node) -> bool {
        match self.local(n) {
            Some((i, j)) => self.blocked[n.layer as usize].get(i, j),
            None => true,
        }
    }

    pub fn set_blocked(&mut self, n: &Node, v: bool) {
        if let Some((i, j)) = self.local(n) {
            self.blocked[n.layer as usize].set(i, j, v);
        }
    }

    pub fn point(&self, n: &Node) -> Point {
        Point::new(n.ix as f64 * self.pitch, n.iy as f64 * self.pitch)
    }

    pub fn nearest(&self, p: Point, layer: u8) -> Node {
        Node::new((p.x / self.pitch).round() as i64, (p.y / self.pitch).round() as i64, layer)
    }

    fn local_range(&self, lo: i64, hi: i64, origin: i64, n: usize) -> Option<(usize, usize)> {
        let lo = (lo - origin).max(0);
        let hi = (hi - origin).min(n as i64 - 1);
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    /// Lattice indices strictly inside `(a, b)`.
    fn open_span(&self, a: f64, b: f64) -> (i64, i64) {
        (((a + EPS) / self.pitch).floor() as i64 + 1, ((b - EPS) / self.pitch).ceil() as i64 - 1)
    }

    /// Lattice indices inside `[a, b]`.
    fn closed_span(&self, a: f64, b: f64) -> (i64, i64) {
        (((a - EPS) / self.pitch).ceil() as i64, ((b + EPS) / self.pitch).floor() as i64)
    }

    fn fill_span(&mut self, layer: Option<usize>, xs: (i64, i64), ys: (i64, i64), v: bool) {
        let (Some((i0, i1)), Some((j0, j1))) = (
            self.local_range(xs.0, xs.1, self.ix0, self.nx),
            self.local_range(ys.0, ys.1, self.iy0, self.ny),
        ) else {
            return;
        };
        match layer {
            Some(l) => self.blocked[l].fill(i0, i1, j0, j1, v),
            None => self.blocked.iter_mut().for_each(|b| b.fill(i0, i1, j0, j1, v)),
        }
    }

    /// Blocks nodes strictly inside `r` on one layer or all layers.
    pub fn block_open(&mut self, layer: Option<usize>, r: &Rect) {
        let xs = self.open_span(r.x0, r.x1);
        let ys = self.open_span(r.y0, r.y1);
        self.fill_span(layer, xs, ys, true);
    }

    /// Sets nodes inside closed `r` to `v`.
    pub fn fill_closed(&mut self, layer: Option<usize>, r: &Rect, v: bool) {
        let xs = self.closed_span(r.x0, r.x1);
        let ys = self.closed_span(r.y0, r.y1);
        self.fill_span(layer, xs, ys, v);
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().map(BitGrid::count).sum()
    }

    pub fn layer_bits(&self, layer: usize) -> &BitGrid {
        &self.blocked[layer]
    }

    pub fn or_assign(&mut self, other: &RoutingGrid) {
        for (a, b) in self.blocked.iter_mut().zip(&other.blocked) {
            a.or_assign(b);
        }
    }

    pub fn is_superset_of(&self, other: &RoutingGrid) -> bool {
        self.blocked.iter().zip(&other.blocked).all(|(a, b)| a.is_superset_of(b))
    }
}

/// Clear lane from a pin out through its device halo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corridor {
    pub device: usize,
    pub pin: usize,
    pub dir: Dir,
    pub rect: Rect,
}

/// Directions in which a wire of `width` can leave `pin` without running
/// over the device body.
pub fn escape_dirs(body: &Rect, pin: Point, width: f64) -> Vec<Dir> {
    let hw = width / 2.0;
    Dir::ALL
        .into_iter()
        .filter(|&d| {
            let probe = match d {
                Dir::Right => Rect::new(pin.x, pin.y - hw, pin.x + 1.0, pin.y + hw),
                Dir::Left => Rect::new(pin.x - 1.0, pin.y - hw, pin.x, pin.y + hw),
                Dir::Up => Rect::new(pin.x - hw, pin.y, pin.x + hw, pin.y + 1.0),
                Dir::Down => Rect::new(pin.x - hw, pin.y - 1.0, pin.x + hw, pin.y),
            };
            probe.overlap_area(body) <= 1e-12
        })
        .collect()
}

/// Device keep-out: the body grown by the device clearance plus half a wire.
pub fn device_halo(body: &Rect, cfg: &RouteConfig) -> Rect {
    body.dilate(cfg.s_dev + cfg.width / 2.0)
}

/// Corridor rectangle from `pin` along `d` to the edge of `halo`,
/// `width + s_same` wide.
pub fn corridor_rect(halo: &Rect, pin: Point, d: Dir, cfg: &RouteConfig) -> Rect {
    let hw = (cfg.width + cfg.s_same) / 2.0;
    match d {
        Dir::Right => Rect::new(pin.x, pin.y - hw, halo.x1, pin.y + hw),
        Dir::Left => Rect::new(halo.x0, pin.y - hw, pin.x, pin.y + hw),
        Dir::Up => Rect::new(pin.x - hw, pin.y, pin.x + hw, halo.y1),
        Dir::Down => Rect::new(pin.x - hw, halo.y0, pin.x + hw, pin.y),
    }
}

/// Routing window around the placement with device halos blocked on every
/// layer, except for corridors leading out from each pin.
pub fn build_grid(
    fps: &[DeviceFootprint],
    placement: &Placement,
    cfg: &RouteConfig,
) -> Result<(RoutingGrid, Vec<Corridor>), RouteError> {
    let extent = placement.extent(fps).ok_or(RouteError::EmptyPlacement)?;
    let mut grid = RoutingGrid::empty(cfg.pitch, &extent.dilate(cfg.margin()), &cfg.layers);
    let mut corridors = Vec::new();
    for i in 0..fps.len() {
        let body = placement.bbox(fps, i);
        let halo = device_halo(&body, cfg);
        grid.block_open(None, &halo);
        for k in 0..fps[i].pins.len() {
            let at = placement.pin_position(fps, i, k);
            for d in escape_dirs(&body, at, cfg.width) {
                corridors.push(Corridor {
                    device: i,
                    pin: k,
                    dir: d,
                    rect: corridor_rect(&halo, at, d, cfg),
                });
            }
        }
    }
    for c in &corridors {
        grid.fill_closed(None, &c.rect, false);
    }
    // corridors never open another device's keep-out
    for i in 0..fps.len() {
        let halo = device_halo(&placement.bbox(fps, i), cfg);
        if corridors.iter().any(|c| c.device != i && c.rect.overlap_area(&halo) > 0.0) {
            grid.block_open(None, &halo);
            for c in corridors.iter().filter(|c| c.device == i) {
                grid.fill_closed(None, &c.rect, false);
            }
        }
    }
    Ok((grid, corridors))
}
