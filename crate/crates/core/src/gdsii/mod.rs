//! GDSII stream output: an in-memory library model, a byte-exact writer,
//! a reader for the same record subset, and design assembly.

mod assemble;
mod stream;

use serde::Serialize;

pub use assemble::{assemble_design, flatten, ComponentCell, FlatElement, LayerMap};
pub use stream::{read_gds, write_gds};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GdsError {
    #[error("{0} is outside the GDSII real range")]
    Range(f64),
    #[error("structure name {0:?} is longer than 32 characters")]
    NameTooLong(String),
    #[error("name {0:?} uses characters outside [A-Za-z0-9_?$]")]
    InvalidName(String),
    #[error("coordinate {0} um does not fit in 32 bits of database units")]
    CoordinateOverflow(f64),
    #[error("element in {0} has too many points for one record")]
    RecordTooLong(String),
    #[error("boundary in {0} is not closed or has fewer than 4 points")]
    OpenBoundary(String),
    #[error("duplicate structure name {0}")]
    DuplicateStructure(String),
    #[error("malformed record at byte {offset}")]
    MalformedRecord { offset: usize },
    #[error("unsupported record type 0x{rtype:02x} at byte {offset}")]
    UnsupportedRecord { rtype: u8, offset: usize },
    #[error("no geometry for component {0}")]
    MissingGeometry(String),
    #[error("layer {0} is not in the layer map")]
    UnknownLayer(String),
    #[error("layer map assigns ({0}, {1}) twice")]
    LayerClash(i16, i16),
}

/// BGNLIB/BGNSTR date fields: modification then access time, each as
/// year, month, day, hour, minute, second.
pub type Timestamps = [i16; 12];

/// 1970-01-01 00:00:00 twice, for reproducible output.
pub const EPOCH: Timestamps = [1970, 1, 1, 0, 0, 0, 1970, 1, 1, 0, 0, 0];

/// Current UTC time in both date slots.
pub fn now_timestamps() -> Timestamps {
    let t = time::OffsetDateTime::now_utc();
    let one = [
        t.year() as i16,
        u8::from(t.month()) as i16,
        t.day() as i16,
        t.hour() as i16,
        t.minute() as i16,
        t.second() as i16,
    ];
    let mut out = [0; 12];
    out[..6].copy_from_slice(&one);
    out[6..].copy_from_slice(&one);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Element {
    Boundary {
        layer: i16,
        datatype: i16,
        xy: Vec<(i32, i32)>,
    },
    Path {
        layer: i16,
        datatype: i16,
        pathtype: i16,
        width: i32,
        xy: Vec<(i32, i32)>,
    },
    SRef {
        sname: String,
        origin: (i32, i32),
        /// Counter-clockwise, degrees.
        angle: f64,
        /// Mirror about the x axis before rotating.
        reflect: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdsStructure {
    pub name: String,
    pub timestamps: Timestamps,
    pub elements: Vec<Element>,
}

impl GdsStructure {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            timestamps: EPOCH,
            elements: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdsLibrary {
    pub name: String,
    /// Database unit expressed in user units (first UNITS value).
    pub db_in_user: f64,
    /// Size of a database unit in metres.
    pub db_unit: f64,
    pub timestamps: Timestamps,
    pub structures: Vec<GdsStructure>,
}

impl GdsLibrary {
    /// Library in micrometre user units with a 1 nm database grid.
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            db_in_user: 1e-3,
            db_unit: 1e-9,
            timestamps: EPOCH,
            structures: Vec::new(),
        }
    }

    pub fn structure(&self, name: &str) -> Option<&GdsStructure> {
        self.structures.iter().find(|s| s.name == name)
    }

    /// Database units per micrometre.
    pub fn db_per_um(&self) -> f64 {
        1e-6 / self.db_unit
    }

    /// Converts micrometres to database units, rounding to nearest.
    pub fn to_db(&self, um: f64) -> Result<i32, GdsError> {
        let v = (um * self.db_per_um()).round();
        if !v.is_finite() || v > i32::MAX as f64 || v < -(i32::MAX as f64) {
            return Err(GdsError::CoordinateOverflow(um));
        }
        Ok(v as i32)
    }
}

/// Encodes `x` as an excess-64 base-16 real with a 56-bit mantissa. Every
/// finite `f64` in range is represented exactly.
pub fn encode_real8(x: f64) -> Result<[u8; 8], GdsError> {
    if x == 0.0 {
        return Ok([0; 8]);
    }
    if !x.is_finite() {
        return Err(GdsError::Range(x));
    }
    let bits = x.to_bits();
    let sign = (bits >> 63) as u8;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e2) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp_bits - 1075) };
    // x = m * 2^e2; find shift s so that m << s has 53..=56 bits and the
    // remaining power of two is a whole number of hex digits
    let bitlen = 64 - m.leading_zeros() as i64;
    let mut s = 53 - bitlen;
    while (e2 - s + 56).rem_euclid(4) != 0 {
        s += 1;
    }
    let exp16 = (e2 - s + 56) / 4 + 64;
    if !(0..=127).contains(&exp16) {
        return Err(GdsError::Range(x));
    }
    let mant = m << s;
    let mut out = [0u8; 8];
    out[0] = (sign << 7) | exp16 as u8;
    out[1..].copy_from_slice(&mant.to_be_bytes()[1..]);
    Ok(out)
}

pub fn decode_real8(b: [u8; 8]) -> f64 {
    let sign = if b[0] & 0x80 != 0 { -1.0 } else { 1.0 };
    let exp16 = (b[0] & 0x7f) as i32;
    let mut m = [0u8; 8];
    m[1..].copy_from_slice(&b[1..]);
    let mant = u64::from_be_bytes(m);
    if mant == 0 {
        return 0.0;
    }
    sign * mant as f64 * 2f64.powi(4 * (exp16 - 64) - 56)
}

/// Valid structure name: 1 to 32 characters from `[A-Za-z0-9_?$]`.
pub fn check_name(name: &str) -> Result<(), GdsError> {
    if name.len() > 32 {
        return Err(GdsError::NameTooLong(name.into()));
    }
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "_?$".contains(c)) {
        return Err(GdsError::InvalidName(name.into()));
    }
    Ok(())
}
