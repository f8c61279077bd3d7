//! Trains the Q surrogate on synthetic oracle data and reports test metrics.
//!
//! cargo run --release --example train_surrogate -- [samples] [epochs] [batch] [out.ckpt]

use std::path::PathBuf;

use rfsynth::inductor::{generate_dataset, SampleRanges};
use rfsynth::nn::{evaluate, save_checkpoint, train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let epochs: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let batch: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(512);
    let out = args.get(3).map(PathBuf::from);

    let ds = generate_dataset(n, &SampleRanges::default(), 7);
    let cfg = TrainConfig {
        batch_size: batch,
        max_epochs: epochs,
        seed: 7,
        log_every: 1,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let (model, stats, report) = train(&ds, &cfg)?;
    println!(
        "trained {} epochs in {:.1}s, best val MSE {:.4} at epoch {:?}",
        report.val_loss.len(),
        t0.elapsed().as_secs_f64(),
        report.best_val_mse,
        report.best_epoch.map(|e| e + 1)
    );
    let (x, y) = ds.test_rows();
    let m = evaluate(&model, &stats, &x, &y)?;
    println!("test  MAE {:.4}  MSE {:.4}  RMSE {:.4}  R2 {:.5}  MAPE {:.2}%", m.mae, m.mse, m.rmse, m.r2, m.mape);
    if let Some(path) = out {
        save_checkpoint(&path, &model, &stats)?;
        println!("checkpoint written to {}", path.display());
    }
    Ok(())
}
