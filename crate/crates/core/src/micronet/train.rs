use std::io;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{Dataset, DatasetRef};
use super::net::{accuracy, cross_entropy, init_network, Network};
use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::report;

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Seeds weight initialization and minibatch order.
    pub seed: u64,
    pub dataset: DatasetRef,
    pub activation: Activation,
    /// Hidden layer widths; input and output sizes come from the data.
    pub hidden: Vec<usize>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(format!(
                "epochs and batch size must be positive, got {} and {}",
                self.epochs, self.batch_size
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        self.activation.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean cross-entropy over the whole training set after the epoch.
    pub loss: f64,
    pub test_accuracy: f64,
    /// Smallest hidden activation derivative used by any update this epoch.
    pub min_activation_grad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    pub history: Vec<EpochStats>,
}

impl TrainOutcome {
    pub fn final_accuracy(&self) -> f64 {
        self.history.last().map_or(0.0, |h| h.test_accuracy)
    }
}

/// Loads the configured data and trains.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let (train_set, test_set) = config.dataset.load()?;
    train_on(config, &train_set, &test_set)
}

pub(crate) fn train_on(
    config: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut dims = vec![train_set.dim()];
    dims.extend(&config.hidden);
    dims.push(train_set.classes);
    let mut net = init_network(&dims, config.activation, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_ba7c);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut min_grad = f64::INFINITY;
        for chunk in order.chunks(config.batch_size) {
            let batch = train_set.features.select_rows(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            let (logits, cache) = net.forward(&batch)?;
            let grads = net.backward(&logits, &cache, &labels)?;
            min_grad = min_grad.min(grads.min_activation_grad);
            net.apply_sgd(&grads, config.learning_rate);
        }
        let loss = cross_entropy(&net.logits(&train_set.features)?, &train_set.labels)?;
        let test_accuracy = if test_set.is_empty() {
            f64::NAN
        } else {
            accuracy(&net.logits(&test_set.features)?, &test_set.labels)
        };
        history.push(EpochStats {
            epoch,
            loss,
            test_accuracy,
            min_activation_grad: min_grad,
        });
    }
    Ok(TrainOutcome {
        network: net,
        history,
    })
}

/// Per-activation summary across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub activation: String,
    pub seeds: usize,
    pub mean_accuracy: f64,
    /// Population standard deviation of final test accuracy across seeds.
    pub std_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    /// Mean loss over the first five epochs, averaged across seeds.
    pub early_loss: f64,
    /// Mean loss over the last five epochs, averaged across seeds.
    pub late_loss: f64,
}

/// One epoch of one run, in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub activation: String,
    pub seed: u64,
    pub epoch: usize,
    pub loss: f64,
    pub test_accuracy: f64,
}

fn window_mean(history: &[EpochStats], late: bool) -> f64 {
    let k = history.len().min(5);
    let slice = if late {
        &history[history.len() - k..]
    } else {
        &history[..k]
    };
    slice.iter().map(|h| h.loss).sum::<f64>() / k as f64
}

/// Trains `base` once per (activation, seed), changing nothing else, and
/// summarises final test accuracy per activation. Rows follow the order of
/// `kinds`; history rows follow (kind, seed, epoch).
pub fn compare_activations(
    base: &TrainConfig,
    kinds: &[Activation],
    seeds: &[u64],
) -> Result<(Vec<ComparisonRow>, Vec<HistoryRow>)> {
    if seeds.is_empty() || kinds.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one activation and one seed".into(),
        ));
    }
    let (train_set, test_set) = base.dataset.load()?;
    let mut rows = Vec::with_capacity(kinds.len());
    let mut history_rows = Vec::new();
    for &act in kinds {
        let mut accs = Vec::with_capacity(seeds.len());
        let (mut early, mut late) = (0.0, 0.0);
        for &seed in seeds {
            let config = TrainConfig {
                seed,
                activation: act,
                ..base.clone()
            };
            let outcome = train_on(&config, &train_set, &test_set)?;
            accs.push(outcome.final_accuracy());
            early += window_mean(&outcome.history, false);
            late += window_mean(&outcome.history, true);
            history_rows.extend(outcome.history.iter().map(|h| HistoryRow {
                activation: act.name().to_string(),
                seed,
                epoch: h.epoch,
                loss: h.loss,
                test_accuracy: h.test_accuracy,
            }));
        }
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        rows.push(ComparisonRow {
            activation: act.name().to_string(),
            seeds: seeds.len(),
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            min_accuracy: accs.iter().copied().fold(f64::INFINITY, f64::min),
            max_accuracy: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            early_loss: early / n,
            late_loss: late / n,
        });
    }
    Ok((rows, history_rows))
}

pub fn write_comparison_csv<W: io::Write>(rows: &[ComparisonRow], sink: W) -> Result<()> {
    report::write_rows(rows, sink)
}

pub fn read_comparison_csv<R: io::Read>(source: R) -> Result<Vec<ComparisonRow>> {
    report::read_rows(source)
}

pub fn write_history_csv<W: io::Write>(rows: &[HistoryRow], sink: W) -> Result<()> {
    report::write_rows(rows, sink)
}

pub fn read_history_csv<R: io::Read>(source: R) -> Result<Vec<HistoryRow>> {
    report::read_rows(source)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_config(activation: Activation) -> TrainConfig {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.5,
            seed: 1,
            dataset: DatasetRef::blobs(3, 600, 0.15, 7),
            activation,
            hidden: vec![16],
        }
    }

    #[test]
    fn stl_learns_blobs() {
        let out = train(&blob_config(Activation::STL)).unwrap();
        assert_eq!(out.history.len(), 30);
        assert!(
            out.final_accuracy() >= 0.95,
            "accuracy {}",
            out.final_accuracy()
        );
        assert!(out.history.iter().all(|h| h.min_activation_grad > 0.0));
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 4,
            ..blob_config(Activation::Tanh)
        };
        let out = train(&cfg).unwrap();
        assert!(out.history.windows(2).all(|w| w[0].loss == w[1].loss));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            epochs: 5,
            ..blob_config(Activation::Serf)
        };
        assert_eq!(train(&cfg).unwrap(), train(&cfg).unwrap());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = blob_config(Activation::STL);
        for bad in [
            TrainConfig {
                epochs: 0,
                ..base.clone()
            },
            TrainConfig {
                batch_size: 0,
                ..base.clone()
            },
            TrainConfig {
                learning_rate: f64::NAN,
                ..base.clone()
            },
            TrainConfig {
                activation: Activation::Stl { alpha: 0.0 },
                ..base.clone()
            },
        ] {
            assert!(train(&bad).is_err());
        }
        let missing = TrainConfig {
            dataset: DatasetRef::idx("/nonexistent/img", "/nonexistent/lab", None),
            ..base
        };
        assert!(matches!(train(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn comparison_shape() {
        let cfg = TrainConfig {
            epochs: 6,
            ..blob_config(Activation::STL)
        };
        let (rows, hist) =
            compare_activations(&cfg, &[Activation::Relu, Activation::STL], &[1, 2, 3]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].activation, "relu");
        assert_eq!(hist.len(), 2 * 3 * 6);
        let (one, _) = compare_activations(&cfg, &[Activation::STL], &[4]).unwrap();
        let single = train(&TrainConfig {
            seed: 4,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(one[0].mean_accuracy, single.final_accuracy());
        assert_eq!(one[0].std_accuracy, 0.0);
        assert!(compare_activations(&cfg, &[Activation::STL], &[]).is_err());
    }
}
