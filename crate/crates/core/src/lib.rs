//! Netlist-to-GDSII physical synthesis for RF circuits.
//!
//! The flow is: parse a netlist, size capacitors and resistors as
//! parametric cells, pick inductor layouts by gradient ascent through a
//! learned Q surrogate, place devices, route nets on a three-layer grid and
//! write a hierarchical GDSII library.

pub mod geom;
pub mod netlist;
pub mod nn;
pub mod inductor;
pub mod pcell;
pub mod placement;
pub mod routing;
pub mod gdsii;
pub mod tech;
pub mod flow;
