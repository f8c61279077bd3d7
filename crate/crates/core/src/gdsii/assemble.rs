use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{CellGeometry, Point, Rect};
use crate::placement::{DeviceFootprint, Placement};
use crate::routing::RoutedDesign;

use super::{Element, GdsError, GdsLibrary, GdsStructure, Timestamps};

/// Logical layer name to GDS `(layer, datatype)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, [i16; 2]>", into = "BTreeMap<String, [i16; 2]>")]
pub struct LayerMap {
    map: BTreeMap<String, (i16, i16)>,
}

impl Default for LayerMap {
    fn default() -> Self {
        Self::new([
            ("OUTLINE", (0, 0)),
            ("M1", (10, 0)),
            ("QA", (11, 0)),
            ("QB", (12, 0)),
            ("M2", (13, 0)),
            ("M3", (14, 0)),
            ("M4", (15, 0)),
            ("M5", (16, 0)),
            ("RES", (20, 0)),
            ("PIN", (63, 0)),
        ])
        .expect("default map is injective")
    }
}

impl LayerMap {
    pub fn new<'a>(entries: impl IntoIterator<Item = (&'a str, (i16, i16))>) -> Result<Self, GdsError> {
        let map: BTreeMap<String, (i16, i16)> = entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let mut seen = std::collections::BTreeSet::new();
        for &v in map.values() {
            if !seen.insert(v) {
                return Err(GdsError::LayerClash(v.0, v.1));
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, name: &str) -> Result<(i16, i16), GdsError> {
        self.map.get(name).copied().ok_or_else(|| GdsError::UnknownLayer(name.into()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, (i16, i16))> {
        self.map.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl TryFrom<BTreeMap<String, [i16; 2]>> for LayerMap {
    type Error = GdsError;
    fn try_from(m: BTreeMap<String, [i16; 2]>) -> Result<Self, GdsError> {
        Self::new(m.iter().map(|(k, v)| (k.as_str(), (v[0], v[1]))))
    }
}

impl From<LayerMap> for BTreeMap<String, [i16; 2]> {
    fn from(m: LayerMap) -> Self {
        m.map.into_iter().map(|(k, v)| (k, [v.0, v.1])).collect()
    }
}

/// Geometry of one placed component. Components sharing `cell` share one
/// child structure, so `cell` must identify the design uniquely.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCell {
    pub id: String,
    pub cell: String,
    pub geometry: CellGeometry,
}

/// Half-size of the square pin marker, um.
const PIN_MARK: f64 = 0.1;

fn boundary(lib: &GdsLibrary, (layer, datatype): (i16, i16), r: &Rect) -> Result<Element, GdsError> {
    let (x0, y0, x1, y1) = (lib.to_db(r.x0)?, lib.to_db(r.y0)?, lib.to_db(r.x1)?, lib.to_db(r.y1)?);
    Ok(Element::Boundary {
        layer,
        datatype,
        xy: vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)],
    })
}

fn cell_structure(lib: &GdsLibrary, name: &str, g: &CellGeometry, layers: &LayerMap, ts: Timestamps) -> Result<GdsStructure, GdsError> {
    let mut s = GdsStructure::new(name);
    s.timestamps = ts;
    let bbox = g.bbox();
    s.elements.push(boundary(lib, layers.get("OUTLINE")?, &bbox)?);
    for shape in &g.shapes {
        s.elements.push(boundary(lib, layers.get(&shape.layer)?, &shape.rect)?);
    }
    let pin = layers.get("PIN")?;
    for p in &g.pins {
        let m = Rect::new(p.at.x - PIN_MARK, p.at.y - PIN_MARK, p.at.x + PIN_MARK, p.at.y + PIN_MARK);
        let clipped = Rect::new(m.x0.max(bbox.x0), m.y0.max(bbox.y0), m.x1.min(bbox.x1), m.y1.min(bbox.y1));
        s.elements.push(boundary(lib, pin, &clipped)?);
    }
    Ok(s)
}

/// Drops interior points that lie on a straight line through their neighbours.
fn simplify(pts: &[(i32, i32)]) -> Vec<(i32, i32)> {
    let mut out: Vec<(i32, i32)> = Vec::with_capacity(pts.len());
    for &p in pts {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let cross = (b.0 as i64 - a.0 as i64) * (p.1 as i64 - b.1 as i64) - (b.1 as i64 - a.1 as i64) * (p.0 as i64 - b.0 as i64);
            if cross == 0 {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

fn route_elements(lib: &GdsLibrary, routed: &RoutedDesign, layers: &LayerMap) -> Result<Vec<Element>, GdsError> {
    let width = lib.to_db(routed.width)?;
    let path = |layer: (i16, i16), xy: Vec<(i32, i32)>| Element::Path {
        layer: layer.0,
        datatype: layer.1,
        pathtype: 0,
        width,
        xy,
    };
    let mut out = Vec::new();
    for stub in &routed.stubs {
        let layer = layers.get(&routed.layers[stub.layer as usize])?;
        let xy = stub.points.iter().map(|p| Ok((lib.to_db(p.x)?, lib.to_db(p.y)?))).collect::<Result<Vec<_>, GdsError>>()?;
        let xy = simplify(&xy);
        if xy.len() >= 2 {
            out.push(path(layer, xy));
        }
    }
    let p = routed.pitch;
    let hw = routed.width / 2.0;
    for rp in &routed.paths {
        let mut i = 0;
        while i < rp.points.len() {
            let l = rp.points[i].layer;
            let mut j = i;
            while j + 1 < rp.points.len() && rp.points[j + 1].layer == l {
                j += 1;
            }
            let xy = rp.points[i..=j]
                .iter()
                .map(|n| Ok((lib.to_db(n.ix as f64 * p)?, lib.to_db(n.iy as f64 * p)?)))
                .collect::<Result<Vec<_>, GdsError>>()?;
            let xy = simplify(&xy);
            if xy.len() >= 2 {
                out.push(path(layers.get(&routed.layers[l as usize])?, xy));
            }
            if j + 1 < rp.points.len() {
                // via: a pad on both layers
                let n = rp.points[j];
                let c = Point::new(n.ix as f64 * p, n.iy as f64 * p);
                let pad = Rect::new(c.x - hw, c.y - hw, c.x + hw, c.y + hw);
                out.push(boundary(lib, layers.get(&routed.layers[l as usize])?, &pad)?);
                out.push(boundary(lib, layers.get(&routed.layers[rp.points[j + 1].layer as usize])?, &pad)?);
            }
            i = j + 1;
        }
    }
    Ok(out)
}

/// Builds a two-level library: one child structure per distinct cell, and a
/// top structure holding one reference per placed component plus all
/// routed wires.
pub fn assemble_design(
    top: &str,
    cells: &[ComponentCell],
    fps: &[DeviceFootprint],
    placement: &Placement,
    routed: Option<&RoutedDesign>,
    layers: &LayerMap,
    timestamps: Timestamps,
) -> Result<GdsLibrary, GdsError> {
    let mut lib = GdsLibrary::new(top);
    lib.timestamps = timestamps;
    let mut top_s = GdsStructure::new(top);
    top_s.timestamps = timestamps;
    let mut children: Vec<(String, &CellGeometry)> = Vec::new();
    for (i, fp) in fps.iter().enumerate() {
        let c = cells
            .iter()
            .find(|c| c.id == fp.id)
            .ok_or_else(|| GdsError::MissingGeometry(fp.id.clone()))?;
        match children.iter().find(|(n, _)| *n == c.cell) {
            Some((_, g)) if **g != c.geometry => return Err(GdsError::DuplicateStructure(c.cell.clone())),
            Some(_) => {}
            None => children.push((c.cell.clone(), &c.geometry)),
        }
        let placed = placement.placed(fps, i);
        let o = placed.shift();
        top_s.elements.push(Element::SRef {
            sname: c.cell.clone(),
            origin: (lib.to_db(o.x)?, lib.to_db(o.y)?),
            angle: placed.rotation.degrees() as f64,
            reflect: false,
        });
    }
    if let Some(r) = routed {
        top_s.elements.extend(route_elements(&lib, r, layers)?);
    }
    for (name, g) in &children {
        let s = cell_structure(&lib, name, g, layers, timestamps)?;
        lib.structures.push(s);
    }
    lib.structures.push(top_s);
    Ok(lib)
}

/// Element with every reference resolved into top-level coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatElement {
    pub layer: i16,
    pub datatype: i16,
    /// Zero for boundaries.
    pub width: i32,
    pub is_path: bool,
    pub xy: Vec<(i64, i64)>,
}

impl FlatElement {
    pub fn bbox(&self) -> (i64, i64, i64, i64) {
        let xs = self.xy.iter().map(|p| p.0);
        let ys = self.xy.iter().map(|p| p.1);
        (
            xs.clone().min().unwrap_or(0),
            ys.clone().min().unwrap_or(0),
            xs.max().unwrap_or(0),
            ys.max().unwrap_or(0),
        )
    }
}

#[derive(Clone, Copy)]
struct Xform {
    // 2x2 integer-friendly matrix plus offset
    m: [[f64; 2]; 2],
    t: (f64, f64),
}

impl Xform {
    const ID: Xform = Xform {
        m: [[1.0, 0.0], [0.0, 1.0]],
        t: (0.0, 0.0),
    };

    fn sref(origin: (i32, i32), angle: f64, reflect: bool) -> Xform {
        let (s, c) = match angle {
            a if a == 0.0 => (0.0, 1.0),
            a if a == 90.0 => (1.0, 0.0),
            a if a == 180.0 => (0.0, -1.0),
            a if a == 270.0 => (-1.0, 0.0),
            a => a.to_radians().sin_cos(),
        };
        let f = if reflect { -1.0 } else { 1.0 };
        Xform {
            m: [[c, -s * f], [s, c * f]],
            t: (origin.0 as f64, origin.1 as f64),
        }
    }

    fn then(self, outer: Xform) -> Xform {
        let a = outer.m;
        let b = self.m;
        Xform {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
            t: (
                a[0][0] * self.t.0 + a[0][1] * self.t.1 + outer.t.0,
                a[1][0] * self.t.0 + a[1][1] * self.t.1 + outer.t.1,
            ),
        }
    }

    fn apply(&self, p: (i32, i32)) -> (i64, i64) {
        let (x, y) = (p.0 as f64, p.1 as f64);
        (
            (self.m[0][0] * x + self.m[0][1] * y + self.t.0).round() as i64,
            (self.m[1][0] * x + self.m[1][1] * y + self.t.1).round() as i64,
        )
    }
}

/// Resolves all references below `top`, depth first in element order.
/// Unknown references are reported as missing geometry.
pub fn flatten(lib: &GdsLibrary, top: &str) -> Result<Vec<FlatElement>, GdsError> {
    fn walk(lib: &GdsLibrary, name: &str, x: Xform, depth: usize, out: &mut Vec<FlatElement>) -> Result<(), GdsError> {
        let s = lib.structure(name).ok_or_else(|| GdsError::MissingGeometry(name.into()))?;
        if depth > 64 {
            return Err(GdsError::DuplicateStructure(name.into()));
        }
        for e in &s.elements {
            match e {
                Element::Boundary { layer, datatype, xy } => out.push(FlatElement {
                    layer: *layer,
                    datatype: *datatype,
                    width: 0,
                    is_path: false,
                    xy: xy.iter().map(|&p| x.apply(p)).collect(),
                }),
                Element::Path {
                    layer,
                    datatype,
                    width,
                    xy,
                    ..
                } => out.push(FlatElement {
                    layer: *layer,
                    datatype: *datatype,
                    width: *width,
                    is_path: true,
                    xy: xy.iter().map(|&p| x.apply(p)).collect(),
                }),
                Element::SRef {
                    sname,
                    origin,
                    angle,
                    reflect,
                } => walk(lib, sname, Xform::sref(*origin, *angle, *reflect).then(x), depth + 1, out)?,
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(lib, top, Xform::ID, 0, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Dir, PinShape, Rotation, Shape};
    use crate::placement::DevicePos;

    fn cell() -> CellGeometry {
        CellGeometry {
            width: 4.0,
            height: 2.0,
            shapes: vec![Shape::new("M1", Rect::new(0.5, 0.5, 1.5, 1.0))],
            pins: vec![PinShape {
                name: "A".into(),
                at: Point::new(0.0, 1.0),
                facing: Dir::Left,
            }],
        }
    }

    #[test]
    fn identical_cells_share_a_structure() {
        let g = cell();
        let cells = vec![
            ComponentCell {
                id: "C1".into(),
                cell: "CAP_A".into(),
                geometry: g.clone(),
            },
            ComponentCell {
                id: "C2".into(),
                cell: "CAP_A".into(),
                geometry: g.clone(),
            },
        ];
        let fps: Vec<DeviceFootprint> = cells
            .iter()
            .map(|c| DeviceFootprint::from_geometry(&c.id, crate::netlist::ComponentKind::Capacitor, &c.geometry))
            .collect();
        let pl = Placement {
            positions: vec![
                DevicePos {
                    x: 0.0,
                    y: 0.0,
                    theta: Rotation::R0,
                },
                DevicePos {
                    x: 10.0,
                    y: 0.0,
                    theta: Rotation::R90,
                },
            ],
        };
        let lib = assemble_design("TOP", &cells, &fps, &pl, None, &LayerMap::default(), super::super::EPOCH).unwrap();
        assert_eq!(lib.structures.len(), 2);
        let top = lib.structure("TOP").unwrap();
        assert_eq!(top.elements.iter().filter(|e| matches!(e, Element::SRef { .. })).count(), 2);
        // the rotated copy's M1 shape lands where the placement transform puts it
        let flat = flatten(&lib, "TOP").unwrap();
        let m1: Vec<_> = flat.iter().filter(|f| f.layer == 10).map(|f| f.bbox()).collect();
        let want = pl.placed(&fps, 1).rect(&g.shapes[0].rect);
        let w = (
            (want.x0 * 1000.0).round() as i64,
            (want.y0 * 1000.0).round() as i64,
            (want.x1 * 1000.0).round() as i64,
            (want.y1 * 1000.0).round() as i64,
        );
        assert!(m1.contains(&w), "{m1:?} vs {w:?}");
    }

    #[test]
    fn missing_cell_is_an_error() {
        let fps = vec![DeviceFootprint::boxed("R9", 1.0, 1.0, &[])];
        let pl = Placement {
            positions: vec![DevicePos {
                x: 0.0,
                y: 0.0,
                theta: Rotation::R0,
            }],
        };
        let r = assemble_design("TOP", &[], &fps, &pl, None, &LayerMap::default(), super::super::EPOCH);
        assert_eq!(r, Err(GdsError::MissingGeometry("R9".into())));
    }

    #[test]
    fn collinear_points_collapse() {
        assert_eq!(simplify(&[(0, 0), (1, 0), (2, 0), (2, 3), (2, 3)]), vec![(0, 0), (2, 0), (2, 3)]);
    }
}
