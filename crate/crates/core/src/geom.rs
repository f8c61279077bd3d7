//! Planar geometry shared by the layout stages.
//!
//! All coordinates are in micrometres. Rotations are restricted to the four
//! Manhattan orientations, so every transformed rectangle stays axis-aligned.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn manhattan(&self, other: &Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }
}

/// Axis-aligned rectangle, `x0 <= x1` and `y0 <= y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    /// Builds a rectangle from any two opposite corners.
    pub fn new(xa: f64, ya: f64, xb: f64, yb: f64) -> Self {
        Self {
            x0: xa.min(xb),
            y0: ya.min(yb),
            x1: xa.max(xb),
            y1: ya.max(yb),
        }
    }

    pub fn from_size(origin: Point, width: f64, height: f64) -> Self {
        Self::new(origin.x, origin.y, origin.x + width, origin.y + height)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect::new(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)
    }

    pub fn dilate(&self, d: f64) -> Rect {
        Rect::new(self.x0 - d, self.y0 - d, self.x1 + d, self.y1 + d)
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect::new(
            self.x0.min(other.x0),
            self.y0.min(other.y0),
            self.x1.max(other.x1),
            self.y1.max(other.y1),
        )
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Area of the intersection; shared edges contribute zero.
    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let ox = self.x1.min(other.x1) - self.x0.max(other.x0);
        let oy = self.y1.min(other.y1) - self.y0.max(other.y0);
        ox.max(0.0) * oy.max(0.0)
    }

    /// Per-axis separation; negative along an axis when the projections overlap.
    pub fn axis_gaps(&self, other: &Rect) -> (f64, f64) {
        let gx = (other.x0 - self.x1).max(self.x0 - other.x1);
        let gy = (other.y0 - self.y1).max(self.y0 - other.y1);
        (gx, gy)
    }

    /// Euclidean distance between the two closed rectangles (0 when touching).
    pub fn distance(&self, other: &Rect) -> f64 {
        let (gx, gy) = self.axis_gaps(other);
        gx.max(0.0).hypot(gy.max(0.0))
    }

    /// Chebyshev distance from a point to the rectangle (0 inside).
    pub fn linf_distance(&self, p: Point) -> f64 {
        let dx = (self.x0 - p.x).max(p.x - self.x1).max(0.0);
        let dy = (self.y0 - p.y).max(p.y - self.y1).max(0.0);
        dx.max(dy)
    }

    /// Closed polygon (first point repeated), counter-clockwise.
    pub fn to_polygon(&self) -> Vec<Point> {
        vec![
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x1, self.y1),
            Point::new(self.x0, self.y1),
            Point::new(self.x0, self.y0),
        ]
    }
}

/// Device orientation; counter-clockwise rotation about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u32 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(deg: u32) -> Option<Rotation> {
        match deg % 360 {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }

    /// Rotates `p` about the origin.
    pub fn apply(self, p: Point) -> Point {
        match self {
            Rotation::R0 => p,
            Rotation::R90 => Point::new(-p.y, p.x),
            Rotation::R180 => Point::new(-p.x, -p.y),
            Rotation::R270 => Point::new(p.y, -p.x),
        }
    }

    pub fn swaps_axes(self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }

    /// Footprint dimensions after rotating a `w` x `h` box.
    pub fn rotated_size(self, w: f64, h: f64) -> (f64, f64) {
        if self.swaps_axes() {
            (h, w)
        } else {
            (w, h)
        }
    }
}

/// Placement transform for a cell whose local bounding box is `[0,w] x [0,h]`.
///
/// The cell is rotated about its local origin and then shifted so that the
/// rotated bounding box has its lower-left corner at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placed {
    pub origin: Point,
    pub rotation: Rotation,
    pub size: (f64, f64),
}

impl Placed {
    pub fn new(origin: Point, rotation: Rotation, size: (f64, f64)) -> Self {
        Self {
            origin,
            rotation,
            size,
        }
    }

    /// Translation applied after the rotation (the GDS reference origin).
    pub fn shift(&self) -> Point {
        let (w, h) = self.size;
        let shift = match self.rotation {
            Rotation::R0 => Point::new(0.0, 0.0),
            Rotation::R90 => Point::new(h, 0.0),
            Rotation::R180 => Point::new(w, h),
            Rotation::R270 => Point::new(0.0, w),
        };
        shift.offset(self.origin.x, self.origin.y)
    }

    pub fn point(&self, local: Point) -> Point {
        let r = self.rotation.apply(local);
        let s = self.shift();
        Point::new(r.x + s.x, r.y + s.y)
    }

    pub fn rect(&self, local: &Rect) -> Rect {
        let a = self.point(Point::new(local.x0, local.y0));
        let b = self.point(Point::new(local.x1, local.y1));
        Rect::new(a.x, a.y, b.x, b.y)
    }

    pub fn bbox(&self) -> Rect {
        let (w, h) = self.rotation.rotated_size(self.size.0, self.size.1);
        Rect::from_size(self.origin, w, h)
    }
}

/// Escape direction on the routing plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    Right,
    Left,
    Up,
    Down,
}

impl Dir {
    /// Fixed preference order used for deterministic tie-breaking.
    pub const ALL: [Dir; 4] = [Dir::Right, Dir::Left, Dir::Up, Dir::Down];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir::Right => (1, 0),
            Dir::Left => (-1, 0),
            Dir::Up => (0, 1),
            Dir::Down => (0, -1),
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Dir::Up | Dir::Down)
    }

    pub fn orthogonal(self) -> [Dir; 2] {
        if self.is_vertical() {
            [Dir::Right, Dir::Left]
        } else {
            [Dir::Up, Dir::Down]
        }
    }

    pub fn rotate(self, r: Rotation) -> Dir {
        let (dx, dy) = self.delta();
        let p = r.apply(Point::new(dx as f64, dy as f64));
        match (p.x.round() as i64, p.y.round() as i64) {
            (1, 0) => Dir::Right,
            (-1, 0) => Dir::Left,
            (0, 1) => Dir::Up,
            _ => Dir::Down,
        }
    }
}

/// A rectangle drawn on a named logical layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub layer: String,
    pub rect: Rect,
    /// Terminal index the shape is electrically tied to, when meaningful.
    pub terminal: Option<usize>,
}

impl Shape {
    pub fn new(layer: impl Into<String>, rect: Rect) -> Self {
        Self {
            layer: layer.into(),
            rect,
            terminal: None,
        }
    }

    pub fn on_terminal(mut self, t: usize) -> Self {
        self.terminal = Some(t);
        self
    }
}

/// Connection point of a cell, in local coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinShape {
    pub name: String,
    pub at: Point,
    /// Outward escape direction in the unrotated cell.
    pub facing: Dir,
}

/// Complete layout of one component cell, local bounding box `[0,w] x [0,h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    pub width: f64,
    pub height: f64,
    pub shapes: Vec<Shape>,
    pub pins: Vec<PinShape>,
}

impl CellGeometry {
    pub fn bbox(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    /// Bounding box of the drawn shapes, `None` for an empty cell.
    pub fn shapes_bbox(&self) -> Option<Rect> {
        self.shapes
            .iter()
            .map(|s| s.rect)
            .reduce(|a, b| a.union(&b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_cases() {
        let a = Rect::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(a.overlap_area(&Rect::new(1.0, 1.0, 3.0, 3.0)), 1.0);
        assert_eq!(a.overlap_area(&Rect::new(5.0, 5.0, 6.0, 6.0)), 0.0);
        assert_eq!(a.overlap_area(&Rect::new(2.0, 0.0, 4.0, 2.0)), 0.0);
    }

    #[test]
    fn placed_bbox_matches_transformed_corners() {
        let size = (10.0, 4.0);
        for r in Rotation::ALL {
            let p = Placed::new(Point::new(3.0, 7.0), r, size);
            let local = Rect::new(0.0, 0.0, size.0, size.1);
            let got = p.rect(&local);
            let want = p.bbox();
            assert!((got.x0 - want.x0).abs() < 1e-12, "{r:?}");
            assert!((got.y0 - want.y0).abs() < 1e-12, "{r:?}");
            assert!((got.x1 - want.x1).abs() < 1e-12, "{r:?}");
            assert!((got.y1 - want.y1).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn dir_rotation() {
        assert_eq!(Dir::Right.rotate(Rotation::R90), Dir::Up);
        assert_eq!(Dir::Right.rotate(Rotation::R180), Dir::Left);
        assert_eq!(Dir::Up.rotate(Rotation::R270), Dir::Right);
    }

    #[test]
    fn rect_distance() {
        let a = Rect::new(0.0, 0.0, 1.0, 1.0);
        let b = Rect::new(4.0, 5.0, 6.0, 6.0);
        assert!((a.distance(&b) - 5.0).abs() < 1e-12);
        assert_eq!(a.distance(&Rect::new(1.0, 0.0, 2.0, 1.0)), 0.0);
    }
}
