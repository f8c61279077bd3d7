//! Writes a small hierarchical GDSII library by hand, reads it back and
//! flattens it.
//!
//! cargo run --example write_gds -- [out.gds]

use rfsynth::gdsii::{flatten, read_gds, write_gds, Element, GdsLibrary, GdsStructure};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "demo.gds".into());
    let mut lib = GdsLibrary::new("DEMO");

    // A 2 x 1 um pad on M1 with a 0.5 um wide path leaving it.
    let mut pad = GdsStructure::new("PAD");
    pad.elements.push(Element::Boundary {
        layer: 10,
        datatype: 0,
        xy: vec![(0, 0), (2000, 0), (2000, 1000), (0, 1000), (0, 0)],
    });
    pad.elements.push(Element::Path {
        layer: 10,
        datatype: 0,
        pathtype: 0,
        width: 500,
        xy: vec![(2000, 500), (5000, 500), (5000, 3000)],
    });
    let mut top = GdsStructure::new("TOP");
    for (i, angle) in [0.0, 90.0, 180.0].into_iter().enumerate() {
        top.elements.push(Element::SRef {
            sname: "PAD".into(),
            origin: (i as i32 * 10_000, 0),
            angle,
            reflect: false,
        });
    }
    lib.structures = vec![pad, top];

    let bytes = write_gds(&lib)?;
    std::fs::write(&out, &bytes)?;
    println!("wrote {} bytes to {out}", bytes.len());

    let back = read_gds(&bytes)?;
    println!("read back {} structures; rewrite identical: {}", back.structures.len(), write_gds(&back)? == bytes);
    for e in flatten(&back, "TOP")? {
        let (x0, y0, x1, y1) = e.bbox();
        let kind = if e.is_path { "path" } else { "boundary" };
        println!("  {kind:<8} layer {} bbox ({x0}, {y0}) - ({x1}, {y1}) db units", e.layer);
    }
    Ok(())
}
