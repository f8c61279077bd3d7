/// Multiplies the learning rate by `factor` once validation loss has failed
/// to improve on the best value by more than `threshold` (relative) for
/// more than `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    pub threshold: f64,
    pub min_lr: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(factor: f64, patience: usize, threshold: f64) -> Self {
        Self {
            factor,
            patience,
            threshold,
            min_lr: 0.0,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    /// Feeds one epoch's validation loss; returns the learning rate to use next.
    pub fn step(&mut self, val_loss: f64, lr: f64) -> f64 {
        if val_loss < self.best * (1.0 - self.threshold) {
            self.best = val_loss;
            self.bad_epochs = 0;
            return lr;
        }
        self.bad_epochs += 1;
        if self.bad_epochs > self.patience {
            self.bad_epochs = 0;
            return (lr * self.factor).max(self.min_lr);
        }
        lr
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

/// Stops after `patience` epochs without a new best validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    best: f64,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            since_best: 0,
        }
    }

    /// Returns `(improved, should_stop)`.
    pub fn step(&mut self, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best {
            self.best = val_loss;
            self.since_best = 0;
            (true, false)
        } else {
            self.since_best += 1;
            (false, self.since_best >= self.patience)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_loss_keeps_lr() {
        let mut s = PlateauScheduler::new(0.5, 2, 1e-4);
        let mut lr = 1.0;
        for k in 0..50 {
            lr = s.step(100.0 / (k + 1) as f64, lr);
        }
        assert_eq!(lr, 1.0);
    }

    #[test]
    fn constant_loss_halves_each_window() {
        let mut s = PlateauScheduler::new(0.5, 3, 1e-4);
        let mut lrs = Vec::new();
        let mut lr = 1.0;
        for _ in 0..10 {
            lr = s.step(1.0, lr);
            lrs.push(lr);
        }
        // first epoch sets the best; epochs 2..=5 are bad, reduction on the 4th bad epoch
        assert_eq!(lrs, vec![1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.25, 0.25]);
    }

    #[test]
    fn early_stop_counts() {
        let mut e = EarlyStopping::new(2);
        assert_eq!(e.step(1.0), (true, false));
        assert_eq!(e.step(1.0), (false, false));
        assert_eq!(e.step(0.5), (true, false));
        assert_eq!(e.step(0.6), (false, false));
        assert_eq!(e.step(0.6), (false, true));
    }
}
