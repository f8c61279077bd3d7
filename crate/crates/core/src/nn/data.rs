use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NnError;

pub const CSV_HEADER: [&str; 7] = ["f", "W", "L", "Lv", "Lh", "Lcn", "Q"];

/// Index sets into a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Rows of `(f, W, L, Lv, Lh, Lcn)` with unnormalized Q targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub features: Vec<[f64; 6]>,
    pub targets: Vec<f64>,
    pub split: Split,
}

impl Dataset {
    /// Drops non-finite or negative-Q rows and applies an 80:10:10 split.
    pub fn new(features: Vec<[f64; 6]>, targets: Vec<f64>, seed: u64) -> Result<Self, NnError> {
        if features.len() != targets.len() {
            return Err(NnError::LengthMismatch(features.len(), targets.len()));
        }
        let (features, targets): (Vec<_>, Vec<_>) = features
            .into_iter()
            .zip(targets)
            .filter(|(x, q)| q.is_finite() && *q >= 0.0 && x.iter().all(|v| v.is_finite()))
            .unzip();
        let split = split_indices(features.len(), seed);
        Ok(Self {
            features,
            targets,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn rows(&self, idx: &[usize]) -> (Vec<[f64; 6]>, Vec<f64>) {
        (
            idx.iter().map(|&i| self.features[i]).collect(),
            idx.iter().map(|&i| self.targets[i]).collect(),
        )
    }

    pub fn train_rows(&self) -> (Vec<[f64; 6]>, Vec<f64>) {
        self.rows(&self.split.train)
    }

    pub fn val_rows(&self) -> (Vec<[f64; 6]>, Vec<f64>) {
        self.rows(&self.split.val)
    }

    pub fn test_rows(&self) -> (Vec<[f64; 6]>, Vec<f64>) {
        self.rows(&self.split.test)
    }
}

/// Shuffled 80:10:10 partition of `0..n`.
pub fn split_indices(n: usize, seed: u64) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    Split {
        train: idx[..n_train].to_vec(),
        val: idx[n_train..n_train + n_val].to_vec(),
        test: idx[n_train + n_val..].to_vec(),
    }
}

pub fn write_dataset_csv<W: Write>(ds: &Dataset, out: W) -> Result<(), NnError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| NnError::Dataset(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for (x, q) in ds.features.iter().zip(&ds.targets) {
        let rec: Vec<String> = x.iter().chain(std::iter::once(q)).map(|v| format!("{v}")).collect();
        w.write_record(&rec).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV with header `f,W,L,Lv,Lh,Lcn,Q` and splits it with `seed`.
pub fn read_dataset_csv<R: Read>(input: R, seed: u64) -> Result<Dataset, NnError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| NnError::Dataset(e.to_string()))?;
    if headers.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(NnError::Dataset(format!("unexpected header {:?}", headers)));
    }
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| NnError::Dataset(e.to_string()))?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| NnError::Dataset(format!("row {}: {e}", i + 2)))?;
        if vals.len() != 7 {
            return Err(NnError::Dataset(format!("row {}: expected 7 fields", i + 2)));
        }
        features.push([vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]]);
        targets.push(vals[6]);
    }
    Dataset::new(features, targets, seed)
}
