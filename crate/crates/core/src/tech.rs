//! Technology rules loaded from a TOML file.
//!
//! Every section is optional; missing keys take the built-in defaults. The
//! numbers in [`DEFAULT_TECH`] are placeholders, not foundry data.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gdsii::LayerMap;
use crate::pcell::{CapStack, ResTech, DEFAULT_TOL};
use crate::placement::{EmRules, PlaceConfig};
use crate::routing::{RouteConfig, ViaCost};

/// The default technology file, as shipped in `tech/default.toml`.
pub const DEFAULT_TECH: &str = include_str!("../tech/default.toml");

#[derive(Debug, thiserror::Error)]
pub enum TechError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("tech file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("tech file: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingRules {
    pub pitch: f64,
    pub width: f64,
    /// Wire-to-device clearance as a fraction of the EM spacing.
    pub dev_fraction: f64,
    /// Wire-to-wire clearance as a fraction of the EM spacing.
    pub net_fraction: f64,
    pub via: ViaCost,
    pub layers: Vec<String>,
    pub margin_pitches: usize,
    pub max_dogleg: usize,
}

impl Default for RoutingRules {
    fn default() -> Self {
        let rc = RouteConfig::default();
        Self {
            pitch: rc.pitch,
            width: rc.width,
            dev_fraction: 0.2,
            net_fraction: 0.1,
            via: rc.via,
            layers: rc.layers,
            margin_pitches: rc.margin_pitches,
            max_dogleg: rc.max_dogleg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcellRules {
    pub tol: f64,
    pub res_layer: String,
    pub contact_layer: String,
    pub res: ResTech,
    pub cap_stacks: Vec<CapStack>,
}

impl Default for PcellRules {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            res_layer: "RES".into(),
            contact_layer: "M1".into(),
            res: ResTech::default(),
            cap_stacks: vec![
                CapStack::new("MOM3", 1.0, &["M1", "M2", "M3"]),
                CapStack::new("MOM5", 1.8, &["M1", "M2", "M3", "M4", "M5"]),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InductorRules {
    /// Trace width for inductors without a `W=` hint, um.
    pub default_width: f64,
    pub layer: String,
    pub lr: f64,
    pub steps: usize,
    /// Surrogate checkpoint, relative to the tech file.
    pub checkpoint: String,
    /// Settings for the fallback training run when no checkpoint exists.
    pub train_samples: usize,
    pub train_epochs: usize,
    pub train_batch: usize,
}

impl Default for InductorRules {
    fn default() -> Self {
        Self {
            default_width: 4.0,
            layer: "QB".into(),
            lr: 0.01,
            steps: 3000,
            checkpoint: "surrogate.ckpt".into(),
            train_samples: 20_000,
            train_epochs: 15,
            train_batch: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmosRules {
    pub width: f64,
    pub height: f64,
}

impl Default for NmosRules {
    fn default() -> Self {
        Self {
            width: 10.0,
            height: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TechRules {
    pub em: EmRules,
    pub place: PlaceConfig,
    pub routing: RoutingRules,
    pub pcell: PcellRules,
    pub inductor: InductorRules,
    pub nmos: NmosRules,
    pub layers: LayerMap,
    /// Directory relative paths resolve against; set by [`TechRules::load`].
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<(), TechError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(TechError::Invalid(format!("{name} must be positive, got {v}")))
    }
}

impl TechRules {
    pub fn from_toml(text: &str) -> Result<Self, TechError> {
        let t: TechRules = toml::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, TechError> {
        let text = std::fs::read_to_string(path).map_err(|source| TechError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut t = Self::from_toml(&text)?;
        t.base_dir = path.parent().map(Path::to_path_buf);
        Ok(t)
    }

    pub fn builtin() -> Self {
        Self::from_toml(DEFAULT_TECH).expect("built-in tech file is valid")
    }

    pub fn validate(&self) -> Result<(), TechError> {
        let em = &self.em;
        for (n, v) in [
            ("em.spacing_low", em.spacing_low),
            ("em.spacing_high", em.spacing_high),
            ("em.f_low", em.f_low),
            ("em.f_high", em.f_high),
            ("routing.pitch", self.routing.pitch),
            ("routing.width", self.routing.width),
            ("routing.dev_fraction", self.routing.dev_fraction),
            ("routing.net_fraction", self.routing.net_fraction),
            ("pcell.tol", self.pcell.tol),
            ("pcell.res.rs", self.pcell.res.rs),
            ("pcell.res.r_end", self.pcell.res.r_end),
            ("pcell.res.pitch_x", self.pcell.res.pitch_x),
            ("pcell.res.pitch_y", self.pcell.res.pitch_y),
            ("inductor.default_width", self.inductor.default_width),
            ("inductor.lr", self.inductor.lr),
            ("nmos.width", self.nmos.width),
            ("nmos.height", self.nmos.height),
            ("place.snap", self.place.snap),
        ] {
            positive(n, v)?;
        }
        if em.guard_fraction < 0.0 || em.f_high <= em.f_low {
            return Err(TechError::Invalid("em: need guard_fraction >= 0 and f_high > f_low".into()));
        }
        if self.routing.layers.len() != 3 {
            return Err(TechError::Invalid("routing.layers must name exactly three layers".into()));
        }
        if self.pcell.cap_stacks.is_empty() {
            return Err(TechError::Invalid("pcell.cap_stacks is empty".into()));
        }
        for s in &self.pcell.cap_stacks {
            positive(&format!("rho of stack {}", s.name), s.rho)?;
            if s.layers.len() < 3 {
                return Err(TechError::Invalid(format!("stack {} spans fewer than 3 layers", s.name)));
            }
        }
        let mut needed: Vec<&str> = vec!["OUTLINE", "PIN", &self.pcell.res_layer, &self.pcell.contact_layer, &self.inductor.layer];
        needed.extend(self.routing.layers.iter().map(String::as_str));
        needed.extend(self.pcell.cap_stacks.iter().flat_map(|s| s.layers.iter().map(String::as_str)));
        for l in needed {
            if !self.layers.contains(l) {
                return Err(TechError::Invalid(format!("layer {l} is missing from [layers]")));
            }
        }
        if !self.routing.layers.contains(&self.inductor.layer) {
            return Err(TechError::Invalid(format!("inductor layer {} is not a routing layer", self.inductor.layer)));
        }
        Ok(())
    }

    /// Router settings at operating frequency `f_ghz`.
    pub fn route_config(&self, f_ghz: f64) -> RouteConfig {
        let r = &self.routing;
        let mut rc = RouteConfig::for_frequency(f_ghz, &self.em, r.dev_fraction, r.net_fraction);
        rc.pitch = r.pitch;
        rc.width = r.width;
        rc.via = r.via;
        rc.layers = r.layers.clone();
        rc.margin_pitches = r.margin_pitches;
        rc.max_dogleg = r.max_dogleg;
        rc
    }

    /// Checkpoint path: absolute as given, otherwise beside the tech file.
    pub fn checkpoint_path(&self) -> PathBuf {
        let p = PathBuf::from(&self.inductor.checkpoint);
        match &self.base_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p,
        }
    }
}
