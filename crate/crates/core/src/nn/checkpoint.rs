//! Binary checkpoint: magic, version, widths, architecture hash,
//! normalization statistics and parameters, all little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{MlpModel, NnError, NormStats};

const MAGIC: &[u8; 4] = b"RFQM";
const VERSION: u32 = 1;

/// SHA-256 over a canonical description of the layer stack.
pub fn arch_hash(input_dim: usize, widths: &[usize]) -> [u8; 32] {
    let desc = format!(
        "linear-relu-layernorm;in={input_dim};widths={};head=linear-softplus",
        widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
    );
    let digest = Sha256::digest(desc.as_bytes());
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    out
}

pub fn write_checkpoint<W: Write>(model: &MlpModel, stats: &NormStats, mut w: W) -> Result<(), NnError> {
    let widths = model.widths();
    let input = model.input_dim();
    let mut buf = Vec::with_capacity(16 + 8 * model.param_count());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(input as u32).to_le_bytes());
    buf.extend_from_slice(&(widths.len() as u32).to_le_bytes());
    for &wd in &widths {
        buf.extend_from_slice(&(wd as u32).to_le_bytes());
    }
    buf.extend_from_slice(&arch_hash(input, &widths));
    buf.extend_from_slice(&model.eps.to_le_bytes());
    for v in stats.mu.iter().chain(&stats.sigma) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for t in model.tensors() {
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], NnError> {
        if self.pos + n > self.bytes.len() {
            return Err(NnError::BadCheckpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, NnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses a checkpoint. When `expected_widths` is given, the stored
/// architecture must match it.
pub fn read_checkpoint<R: Read>(mut r: R, expected_widths: Option<&[usize]>) -> Result<(MlpModel, NormStats), NnError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(NnError::BadCheckpoint("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(NnError::BadCheckpoint(format!("unsupported version {version}")));
    }
    let input = c.u32()? as usize;
    let n_layers = c.u32()? as usize;
    if input == 0 || n_layers > 1024 {
        return Err(NnError::BadCheckpoint("implausible header".into()));
    }
    let widths: Vec<usize> = (0..n_layers).map(|_| c.u32().map(|w| w as usize)).collect::<Result<_, _>>()?;
    let stored = c.take(32)?;
    if stored != arch_hash(input, &widths) {
        return Err(NnError::ArchitectureMismatch("architecture hash does not match stored widths".into()));
    }
    if let Some(exp) = expected_widths {
        if exp != widths.as_slice() {
            return Err(NnError::ArchitectureMismatch(format!("expected widths {exp:?}, found {widths:?}")));
        }
    }
    let mut model = MlpModel::zeros(input, &widths);
    model.eps = c.f64()?;
    let mu = (0..input).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?;
    let sigma = (0..input).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?;
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = c.f64()?;
        }
    }
    if c.pos != bytes.len() {
        return Err(NnError::BadCheckpoint(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(NnError::BadCheckpoint("non-positive sigma".into()));
    }
    Ok((model, NormStats { mu, sigma }))
}

pub fn save_checkpoint(path: &Path, model: &MlpModel, stats: &NormStats) -> Result<(), NnError> {
    let mut buf = Vec::new();
    write_checkpoint(model, stats, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path, expected_widths: Option<&[usize]>) -> Result<(MlpModel, NormStats), NnError> {
    read_checkpoint(fs::File::open(path)?, expected_widths)
}
