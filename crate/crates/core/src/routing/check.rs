use serde::Serialize;

use crate::geom::{Point, Rect};

use super::{segments, RouteConfig, RoutedDesign};

/// Tolerance on clearance comparisons, um.
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireRect {
    pub net: String,
    pub layer: u8,
    pub rect: Rect,
    /// Device a pin stub belongs to; `None` for trunk wires.
    pub stub_of: Option<usize>,
    /// Pin location of a stub.
    pub pin: Option<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    WireToDevice,
    WireToWire,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingViolation {
    pub kind: ViolationKind,
    pub net: String,
    /// Other net name, or the device id for wire-to-device violations.
    pub other: String,
    pub layer: u8,
    pub distance: f64,
    pub required: f64,
}

/// Metal rectangles of every stub and trunk: each straight run widened by
/// half the wire width on all sides, so vias and corners get full pads.
/// Stub metal is cut off at its pin.
pub fn route_rects(design: &RoutedDesign) -> Vec<WireRect> {
    let hw = design.width / 2.0;
    let mut out = Vec::new();
    for s in &design.stubs {
        for w in s.points.windows(2) {
            out.push(WireRect {
                net: s.net.clone(),
                layer: s.layer,
                rect: s.ahead(Rect::new(w[0].x, w[0].y, w[1].x, w[1].y).dilate(hw)),
                stub_of: Some(s.device),
                pin: s.points.first().copied(),
            });
        }
    }
    let p = design.pitch;
    for path in &design.paths {
        for (a, b) in segments(&path.points) {
            let r = Rect::new(a.ix as f64 * p, a.iy as f64 * p, b.ix as f64 * p, b.iy as f64 * p);
            out.push(WireRect {
                net: path.net.clone(),
                layer: a.layer,
                rect: r.dilate(path.width / 2.0),
                stub_of: None,
                pin: None,
            });
        }
    }
    out
}

/// Audits the finished wiring: every wire rectangle against every device
/// body (a stub is exempt against its own device), and every same-layer
/// pair of rectangles on different nets. Two stubs on the same device need
/// only one grid pitch between them, or less when the device itself puts
/// the two pin pads closer than that.
pub fn check_spacing(design: &RoutedDesign, bodies: &[(String, Rect)], cfg: &RouteConfig) -> Vec<SpacingViolation> {
    let rects = route_rects(design);
    let mut out = Vec::new();
    for w in &rects {
        for (i, (id, body)) in bodies.iter().enumerate() {
            if w.stub_of == Some(i) {
                continue;
            }
            let d = w.rect.distance(body);
            if d < cfg.s_dev - TOL {
                out.push(SpacingViolation {
                    kind: ViolationKind::WireToDevice,
                    net: w.net.clone(),
                    other: id.clone(),
                    layer: w.layer,
                    distance: d,
                    required: cfg.s_dev,
                });
            }
        }
    }
    for (i, a) in rects.iter().enumerate() {
        for b in &rects[i + 1..] {
            if a.layer != b.layer || a.net == b.net {
                continue;
            }
            let required = match (a.stub_of, a.pin, b.pin) {
                (Some(_), Some(pa), Some(pb)) if a.stub_of == b.stub_of => {
                    let hw = design.width / 2.0;
                    let pads = Rect::new(pa.x, pa.y, pa.x, pa.y).dilate(hw).distance(&Rect::new(pb.x, pb.y, pb.x, pb.y).dilate(hw));
                    (cfg.pin_halo() - cfg.width).min(pads)
                }
                _ => cfg.s_same,
            };
            let d = a.rect.distance(&b.rect);
            if d < required - TOL {
                out.push(SpacingViolation {
                    kind: ViolationKind::WireToWire,
                    net: a.net.clone(),
                    other: b.net.clone(),
                    layer: a.layer,
                    distance: d,
                    required,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::{Node, RoutePath};

    fn design(paths: Vec<RoutePath>) -> RoutedDesign {
        RoutedDesign {
            pitch: 0.1,
            width: 0.5,
            paths,
            ..Default::default()
        }
    }

    fn hline(net: &str, y: i64, layer: u8) -> RoutePath {
        RoutePath {
            net: net.into(),
            points: (0..=50).map(|x| Node::new(x, y, layer)).collect(),
            width: 0.5,
        }
    }

    #[test]
    fn parallel_wires() {
        let cfg = RouteConfig::default();
        // centrelines 1.0 apart: edges 0.5 apart, exactly the clearance
        let ok = design(vec![hline("a", 0, 0), hline("b", 10, 0)]);
        assert!(check_spacing(&ok, &[], &cfg).is_empty());
        let bad = design(vec![hline("a", 0, 0), hline("b", 9, 0)]);
        let v = check_spacing(&bad, &[], &cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::WireToWire);
        assert!((v[0].distance - 0.4).abs() < 1e-9);
        let other_layer = design(vec![hline("a", 0, 0), hline("b", 1, 1)]);
        assert!(check_spacing(&other_layer, &[], &cfg).is_empty());
    }

    #[test]
    fn wire_near_device() {
        let cfg = RouteConfig::default();
        let d = design(vec![hline("a", 0, 0)]);
        // wire top edge at 0.25; body bottom at 1.25 is exactly s_dev away
        let ok = [("m".to_string(), Rect::new(0.0, 1.25, 2.0, 3.0))];
        assert!(check_spacing(&d, &ok, &cfg).is_empty());
        let near = [("m".to_string(), Rect::new(0.0, 1.0, 2.0, 3.0))];
        assert_eq!(check_spacing(&d, &near, &cfg)[0].kind, ViolationKind::WireToDevice);
    }
}
