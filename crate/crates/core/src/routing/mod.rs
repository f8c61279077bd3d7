//! Grid routing on three layers: MST topology per net, A* segments with
//! via penalties, device keep-outs with pin corridors, and spacing halos
//! around committed wires.

mod astar;
mod check;
mod escape;
mod grid;
mod route;

use serde::{Deserialize, Serialize};

pub use astar::{astar_route, mst, mst_length, SearchResult};
pub use check::{check_spacing, route_rects, SpacingViolation, ViolationKind, WireRect};
pub use escape::{pin_escape, EscapeResult, Stub};
pub use grid::{build_grid, corridor_rect, device_halo, escape_dirs, BitGrid, Corridor, Node, RoutingGrid};
pub use route::{route_all, route_net, segments, NetRequest, PinRequest, RouteFailure, RoutePath, RoutedDesign};

use crate::placement::{min_spacing, EmRules};

/// Cost charged for a layer change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ViaCost {
    /// `g' = g + factor * g`: proportional to the cost accumulated so far.
    Proportional { factor: u64 },
    /// `g' = g + penalty` in grid steps.
    Fixed { penalty: u64 },
}

impl Default for ViaCost {
    fn default() -> Self {
        ViaCost::Proportional { factor: 10 }
    }
}

impl ViaCost {
    #[inline]
    pub fn apply(self, g: u64) -> u64 {
        match self {
            ViaCost::Proportional { factor } => g.saturating_add(g.saturating_mul(factor)),
            ViaCost::Fixed { penalty } => g.saturating_add(penalty),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteConfig {
    pub pitch: f64,
    pub width: f64,
    /// Wire-to-device clearance, um.
    pub s_dev: f64,
    /// Wire-to-wire clearance between different nets on one layer, um.
    pub s_same: f64,
    pub via: ViaCost,
    pub layers: Vec<String>,
    /// Grid margin around the placement in pitches (before clearances are added).
    pub margin_pitches: usize,
    /// Longest orthogonal dogleg leg tried during pin escape, in steps.
    pub max_dogleg: usize,
}

impl Default for RouteConfig {
    fn default() -> Self {
        Self {
            pitch: 0.1,
            width: 0.5,
            s_dev: 1.0,
            s_same: 0.5,
            via: ViaCost::default(),
            layers: vec!["M1".into(), "QA".into(), "QB".into()],
            margin_pitches: 20,
            max_dogleg: 400,
        }
    }
}

impl RouteConfig {
    /// Clearances derived from the EM spacing at `f_ghz`: device clearance
    /// `dev_fraction * S`, net clearance `net_fraction * S`.
    pub fn for_frequency(f_ghz: f64, em: &EmRules, dev_fraction: f64, net_fraction: f64) -> Self {
        let s = min_spacing(f_ghz, em);
        Self {
            s_dev: dev_fraction * s,
            s_same: net_fraction * s,
            ..Default::default()
        }
    }

    /// Window margin: the fixed pitch margin plus room for a halo and a
    /// wire to pass around the outermost devices.
    pub fn margin(&self) -> f64 {
        self.margin_pitches as f64 * self.pitch + 2.0 * (self.s_dev + self.width + self.s_same)
    }

    /// Centreline keep-out radius around another net's wire.
    pub fn net_halo(&self) -> f64 {
        self.width + self.s_same
    }

    /// Keep-out radius between stubs of different nets on the same device.
    /// Their separation is set by the device's pin pitch, so they only have
    /// to stay one grid pitch apart.
    pub fn pin_halo(&self) -> f64 {
        self.width + self.pitch
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("nothing to route: placement is empty")]
    EmptyPlacement,
    #[error("no path from {from:?} to {to:?}")]
    Unroutable { from: Node, to: Node },
    #[error("pin {pin} of device {device} cannot escape")]
    EscapeFailure { device: String, pin: String },
    #[error("net {net}: edge {edge} unroutable")]
    NetUnroutable { net: String, edge: usize },
}
