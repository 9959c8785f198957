//! Mini-batch Adam with early stopping on validation accuracy.

mod adam;
mod evaluate;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, adam_update};
pub use evaluate::{accuracy_of, argmax, evaluate, tally, Confusion, Evaluation, EVAL_BATCH};

use crate::dataset::N_CLASSES;
use crate::error::{Error, Result};
use crate::nn::{loss_and_gradients, Moments, Network, Params};
use crate::segmentation::{Partition, WindowSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    pub init: u64,
    pub shuffle: u64,
    pub dropout: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            init: 1,
            shuffle: 2,
            dropout: 3,
        }
    }
}

impl Seeds {
    /// Every seed shifted by the same offset.
    pub fn offset(self, by: u64) -> Self {
        Self {
            init: self.init.wrapping_add(by),
            shuffle: self.shuffle.wrapping_add(by),
            dropout: self.dropout.wrapping_add(by),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seeds: Seeds,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            patience: 10,
            max_epochs: 200,
            seeds: Seeds::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Usage(m.into()));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return fail("patience must be at least 1");
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return fail("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0 && self.adam_eps.is_finite()) {
            return fail("adam_eps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    /// Measured on the dropout-active training passes.
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub stopping_epoch: usize,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub stopped_early: bool,
    pub n_train: usize,
    pub n_val: usize,
    /// Where the best-epoch checkpoint was written, if it was.
    pub checkpoint: Option<String>,
}

impl TrainReport {
    /// Equality ignoring wall-clock timings.
    pub fn same_trajectory(&self, other: &TrainReport) -> bool {
        let strip = |r: &TrainReport| {
            let mut r = r.clone();
            r.epochs.iter_mut().for_each(|e| e.wall_seconds = 0.0);
            r
        };
        strip(self) == strip(other)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Tracks the best validation accuracy; only a strictly greater value counts
/// as improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::NEG_INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records an epoch and returns whether it is the new best.
    pub fn observe(&mut self, epoch: usize, val_accuracy: f64) -> bool {
        if val_accuracy > self.best {
            self.best = val_accuracy;
            self.best_epoch = epoch;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best(&self) -> (usize, f64) {
        (self.best_epoch, self.best)
    }
}

/// Parameters and optimizer state of the best epoch, restored into the
/// network on return.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub moments: Moments<f32>,
}

/// Trains `net` on the train partition of `ws`, monitoring the validation
/// partition. `on_epoch` sees every record as it is produced.
pub fn train(
    ws: &WindowSet,
    net: &mut Network<f32>,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ws.n_channels() != net.dims.n_channels {
        return Err(Error::Shape(format!(
            "windows have {} channels, model expects {}",
            ws.n_channels(),
            net.dims.n_channels
        )));
    }
    let mut train_idx = ws.indices(Partition::Train);
    let n_val = ws.indices(Partition::Val).len();
    if train_idx.is_empty() || n_val == 0 {
        return Err(Error::Usage(format!(
            "need non-empty train and validation partitions, have {} and {n_val}",
            train_idx.len()
        )));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seeds.shuffle);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seeds.dropout);
    let mut moments = Moments::zeros(&net.dims);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best: (Params<f32>, Moments<f32>) = (net.params.clone(), moments.clone());
    let mut epochs = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        train_idx.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut hits = 0usize;
        for (b, chunk) in train_idx.chunks(cfg.batch_size).enumerate() {
            let x = ws.gather(chunk);
            let labels = ws.gather_labels(chunk);
            let (loss, probs, grads) =
                loss_and_gradients(&net.params, &net.dims, x.view(), &labels, Some(&mut dropout_rng))?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss {loss} at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            adam_step(&mut net.params, &grads.params, &mut moments, cfg)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {}: {e}", b + 1)))?;
            loss_sum += f64::from(loss) * chunk.len() as f64;
            let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
            tally(&mut confusion, probs.view(), &labels);
            hits += (0..N_CLASSES).map(|k| confusion[k][k] as usize).sum::<usize>();
        }
        let val = evaluate(&net.params, &net.dims, ws, Partition::Val)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_idx.len() as f64,
            train_accuracy: hits as f64 / train_idx.len() as f64,
            val_accuracy: val.accuracy,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        log::debug!(
            "epoch {epoch}: loss {:.4}, train acc {:.4}, val acc {:.4}",
            record.train_loss,
            record.train_accuracy,
            record.val_accuracy
        );
        on_epoch(&record);
        if stopper.observe(epoch, record.val_accuracy) {
            best = (net.params.clone(), moments.clone());
        }
        epochs.push(record);
        if stopper.should_stop() {
            break;
        }
    }

    let (best_epoch, best_val_accuracy) = stopper.best();
    let stopping_epoch = epochs.len();
    net.params = best.0;
    Ok(TrainOutcome {
        report: TrainReport {
            stopped_early: stopping_epoch < cfg.max_epochs,
            epochs,
            stopping_epoch,
            best_epoch,
            best_val_accuracy,
            n_train: train_idx.len(),
            n_val,
            checkpoint: None,
        },
        moments: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.batch_size, 128);
        assert_eq!(cfg.patience, 10);
        cfg.validate().unwrap();
        for bad in [
            TrainConfig {
                batch_size: 0,
                ..cfg.clone()
            },
            TrainConfig {
                patience: 0,
                ..cfg.clone()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..cfg.clone()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn equal_accuracy_does_not_reset_patience() {
        let mut s = EarlyStopping::new(2);
        assert!(s.observe(1, 0.5));
        assert!(!s.observe(2, 0.5));
        assert!(!s.should_stop());
        assert!(!s.observe(3, 0.4));
        assert!(s.should_stop());
        assert_eq!(s.best(), (1, 0.5));
    }

    #[test]
    fn improvement_resets_patience() {
        let mut s = EarlyStopping::new(2);
        s.observe(1, 0.2);
        s.observe(2, 0.1);
        assert!(s.observe(3, 0.3));
        assert!(!s.should_stop());
        assert_eq!(s.best(), (3, 0.3));
    }
}
