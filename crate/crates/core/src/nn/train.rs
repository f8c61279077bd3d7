use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::metrics::normalized_matrix;
use super::{AdamState, Dataset, EarlyStopping, MlpModel, NnError, NormStats, PlateauScheduler, N_FEATURES, PAPER_WIDTHS};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub widths: Vec<usize>,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub initial_lr: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub plateau_threshold: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
    /// Print a progress line to stderr every this many epochs (0 = quiet).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            widths: PAPER_WIDTHS.to_vec(),
            batch_size: 16384,
            max_epochs: 300,
            initial_lr: 1e-3,
            plateau_factor: 0.5,
            plateau_patience: 10,
            plateau_threshold: 1e-4,
            early_stop_patience: 25,
            seed: 0,
            log_every: 0,
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::Config("batch_size must be at least 1".into()));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(NnError::Config("plateau_factor must lie in (0, 1)".into()));
        }
        if !(self.initial_lr > 0.0) {
            return Err(NnError::Config("initial_lr must be positive".into()));
        }
        Ok(())
    }
}

/// Per-epoch history. `lr[k]` is the rate used during epoch `k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub lr: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub best_val_mse: f64,
    pub final_lr: f64,
    pub stopped_early: bool,
}

fn inverse_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().max(1e-12).ln()
    }
}

fn gather(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let d = x.ncols();
    let mut out = Array2::zeros((idx.len(), d));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}

/// Trains a fresh network on the dataset's train split, keeping the
/// parameters with the lowest validation MSE.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, NormStats, TrainReport), NnError> {
    cfg.check()?;
    let (train_x, train_y) = ds.train_rows();
    let (val_x, val_y) = ds.val_rows();
    if train_x.is_empty() {
        return Err(NnError::EmptySplit("train"));
    }
    if val_x.is_empty() {
        return Err(NnError::EmptySplit("validation"));
    }
    let stats = NormStats::from_rows(&train_x)?;
    let mut model = MlpModel::new(N_FEATURES, &cfg.widths, cfg.seed);
    let mean_q = train_y.iter().sum::<f64>() / train_y.len() as f64;
    model.head.b[0] = inverse_softplus(mean_q.max(1e-3));

    let mut report = TrainReport {
        best_val_mse: f64::INFINITY,
        final_lr: cfg.initial_lr,
        ..Default::default()
    };
    if cfg.max_epochs == 0 {
        return Ok((model, stats, report));
    }

    let xtr = normalized_matrix(&stats, &train_x);
    let xval = normalized_matrix(&stats, &val_x);
    let mut adam = AdamState::for_tensors(&model.tensors(), cfg.initial_lr);
    let mut plateau = PlateauScheduler::new(cfg.plateau_factor, cfg.plateau_patience, cfg.plateau_threshold);
    let mut stopper = EarlyStopping::new(cfg.early_stop_patience);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut best = model.clone();
    let mut lr = cfg.initial_lr;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = gather(&xtr, chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| train_y[i]).collect();
            let (loss, grads) = model.mse_grads(xb.view(), &yb);
            loss_sum += loss * chunk.len() as f64;
            adam.step(&mut model.tensors_mut(), &grads.tensors())?;
        }
        let train_loss = loss_sum / train_x.len() as f64;
        let pred = model.predict_normalized(xval.view());
        let val = pred.iter().zip(&val_y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / val_y.len() as f64;

        report.train_loss.push(train_loss);
        report.val_loss.push(val);
        report.lr.push(lr);
        if cfg.log_every > 0 && (epoch + 1) % cfg.log_every == 0 {
            eprintln!("epoch {:>4}  train {:.5}  val {:.5}  lr {:.2e}", epoch + 1, train_loss, val, lr);
        }

        let (improved, stop) = stopper.step(val);
        if improved {
            best = model.clone();
            report.best_epoch = Some(epoch);
            report.best_val_mse = val;
        }
        lr = plateau.step(val, lr);
        adam.lr = lr;
        if stop {
            report.stopped_early = true;
            break;
        }
    }
    report.final_lr = lr;
    Ok((best, stats, report))
}
