mod common;

use common::{golden, square_lib};
use proptest::prelude::*;
use rfsynth::flow::{synthesize, SynthOptions};
use rfsynth::gdsii::{decode_real8, encode_real8, read_gds, write_gds, Element, GdsStructure};
use rfsynth::netlist::parse_netlist;
use rfsynth::tech::TechRules;

#[test]
fn golden_square() {
    let bytes = write_gds(&square_lib()).unwrap();
    assert_eq!(bytes, golden());
    assert_eq!(read_gds(&golden()).unwrap(), square_lib());
}

#[test]
fn unit_reals() {
    assert_eq!(encode_real8(1e-3).unwrap(), [0x3E, 0x41, 0x89, 0x37, 0x4B, 0xC6, 0xA7, 0xF0]);
    assert_eq!(encode_real8(1e-9).unwrap(), [0x39, 0x44, 0xB8, 0x2F, 0xA0, 0x9B, 0x5A, 0x54]);
    // 90.0 = 0x5A = (0x5A / 256) * 16^2
    assert_eq!(encode_real8(90.0).unwrap(), [0x42, 0x5A, 0, 0, 0, 0, 0, 0]);
    assert_eq!(encode_real8(0.0).unwrap(), [0; 8]);
}

const NETLIST: &str = "\
* amplifier core without inductors
M1 in out 0
R1 vdd out 200
C1 out load 0.3
R2 in bias 1000
C2 load 0 0.1
.FREQ 12
";

fn design() -> rfsynth::flow::SynthResult {
    let nl = parse_netlist(NETLIST).unwrap();
    synthesize(&nl, &TechRules::builtin(), None, &SynthOptions::default()).unwrap()
}

#[test]
fn design_round_trips_to_a_fixpoint() {
    let r = design();
    let back = read_gds(&r.gds).unwrap();
    assert_eq!(back, r.library);
    assert_eq!(write_gds(&back).unwrap(), r.gds);
}

#[test]
fn flattened_cells_match_placed_shapes() {
    let r = design();
    let (checked, missing) = common::flatten_mismatches(&r, &TechRules::builtin().layers);
    assert!(missing.is_empty(), "{missing:?}");
    assert!(checked > 10);
}

#[test]
fn third_party_reader_accepts_output() {
    let r = design();
    let lib = gds21::GdsLibrary::from_bytes(&r.gds).unwrap();
    assert_eq!(lib.structs.len(), r.library.structures.len());
    let top = lib.structs.iter().find(|s| s.name == "TOP").unwrap();
    let refs = top
        .elems
        .iter()
        .filter(|e| matches!(e, gds21::GdsElement::GdsStructRef(_)))
        .count();
    assert_eq!(refs, r.sized.cells.len());
    assert!((lib.units.0 - 1e-3).abs() < 1e-18 && (lib.units.1 - 1e-9).abs() < 1e-24);
    let ours = write_gds(&square_lib()).unwrap();
    let sq = gds21::GdsLibrary::from_bytes(&ours).unwrap();
    match &sq.structs[0].elems[0] {
        gds21::GdsElement::GdsBoundary(b) => {
            assert_eq!(b.layer, 10);
            assert_eq!(b.xy.len(), 5);
            assert_eq!((b.xy[2].x, b.xy[2].y), (1000, 1000));
        }
        other => panic!("unexpected element {other:?}"),
    }
}

#[test]
fn rejects_bad_input() {
    let mut open = square_lib();
    if let Element::Boundary { xy, .. } = &mut open.structures[0].elements[0] {
        xy.pop();
    }
    assert!(write_gds(&open).is_err());
    let mut dup = square_lib();
    dup.structures.push(GdsStructure::new("CELL"));
    assert!(write_gds(&dup).is_err());
    let mut long = square_lib();
    long.structures[0].name = "X".repeat(40);
    assert!(write_gds(&long).is_err());
    assert!(read_gds(&[]).is_err());
}

proptest! {
    #[test]
    fn real8_round_trips(m in 1e-12..1e12f64, neg in any::<bool>()) {
        let x = if neg { -m } else { m };
        prop_assert_eq!(decode_real8(encode_real8(x).unwrap()), x);
    }

    #[test]
    fn truncated_streams_error_without_panic(cut in 0usize..200) {
        let g = golden();
        let cut = cut.min(g.len() - 1);
        prop_assert!(read_gds(&g[..cut]).is_err());
    }

    #[test]
    fn corrupted_streams_never_panic(pos in 0usize..200, byte in any::<u8>()) {
        let mut g = golden();
        let pos = pos % g.len();
        g[pos] = byte;
        let _ = read_gds(&g);
    }
}
