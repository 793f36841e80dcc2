//! Mini-batch gradient descent on the averaged weighted block loss.
//!
//! Besides the per-epoch snapshots, training keeps a running average of the
//! weights over the last three quarters of the epochs. The average usually
//! scores a lower held-out loss than any single snapshot, since the step size
//! is large and consecutive epochs land on different sides of the minimum.
//! Whichever candidate, snapshot or average, has the lowest held-out loss is
//! returned.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::featurize::{Featurizer, SparseVec};
use super::loss::{balanced_weights, NUM_CLASSES};
use super::model::HeadModel;
use crate::action::ActionBlock;
use crate::dataset::{source_episode_id, TrainingSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub rng_seed: u64,
    /// Share of episodes held out for model selection.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 60, batch_size: 16, learning_rate: 24.0, l2: 1e-6, rng_seed: 0, holdout_fraction: 0.1 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.l2 >= 0.0
            && (0.0..1.0).contains(&self.holdout_fraction);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid training configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub heldout_loss: Option<f64>,
}

/// Which weights a training run returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The snapshot taken at the end of this 1-based epoch.
    Epoch(usize),
    /// The mean of the snapshots from `first` through `last`, inclusive.
    Average { first: usize, last: usize },
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Selection::Epoch(e) => write!(f, "epoch {e}"),
            Selection::Average { first, last } => write!(f, "average of epochs {first}-{last}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_train_loss: f64,
    pub epochs: Vec<EpochStats>,
    pub selection: Selection,
    /// Held-out loss of the returned weights (training loss without a
    /// held-out split).
    pub selected_loss: f64,
    pub class_weights: [f64; NUM_CLASSES],
    pub train_samples: usize,
    pub heldout_samples: usize,
}

/// Pooled action counts over every position of every target block.
pub fn class_counts<'a>(targets: impl IntoIterator<Item = &'a ActionBlock>) -> [u64; NUM_CLASSES] {
    let mut counts = [0u64; NUM_CLASSES];
    for b in targets {
        for a in b.actions() {
            counts[a.index()] += 1;
        }
    }
    counts
}

pub fn train(samples: &[TrainingSample], cfg: &TrainConfig, f: &Featurizer) -> Result<HeadModel> {
    Ok(train_with_report(samples, cfg, f)?.0)
}

pub fn train_with_report(
    samples: &[TrainingSample],
    cfg: &TrainConfig,
    f: &Featurizer,
) -> Result<(HeadModel, TrainReport)> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    let n_a = samples[0].target.len();
    if let Some(s) = samples.iter().find(|s| s.target.len() != n_a) {
        return Err(Error::BlockLength { expected: n_a, got: s.target.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let (train_idx, held_idx) = split_by_episode(samples, cfg.holdout_fraction, &mut rng);

    let features: Vec<SparseVec> = samples.par_iter().map(|s| f.featurize(&s.prompt)).collect::<Result<_>>()?;
    let class_weights = balanced_weights(class_counts(train_idx.iter().map(|&i| &samples[i].target)))?;
    let mut model = HeadModel::zeros(f.clone(), n_a, class_weights);

    let mean_loss = |m: &HeadModel, idx: &[usize]| -> Result<f64> {
        let total: f64 = idx
            .par_iter()
            .map(|&i| m.loss(&features[i], &samples[i].target))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        Ok(total / idx.len() as f64)
    };

    let initial_train_loss = mean_loss(&model, &train_idx)?;
    let mut best = (f64::INFINITY, Selection::Epoch(0), model.clone());
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut order = train_idx.clone();
    let average_from = cfg.epochs / 4 + 1;
    let mut average: Option<HeadModel> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let grads = batch
                .par_iter()
                .map(|&i| model.sample_gradient(&features[i], &samples[i].target))
                .collect::<Result<Vec<_>>>()?;
            let decay = 1.0 - cfg.learning_rate * cfg.l2;
            if decay != 1.0 {
                model.shrink_weights(decay);
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for (&i, g) in batch.iter().zip(&grads) {
                model.apply_gradient(&features[i], g, step);
            }
        }
        model.fold_scale();
        let train_loss = mean_loss(&model, &train_idx)?;
        let heldout_loss = if held_idx.is_empty() { None } else { Some(mean_loss(&model, &held_idx)?) };
        let score = heldout_loss.unwrap_or(train_loss);
        if score < best.0 {
            best = (score, Selection::Epoch(epoch), model.clone());
        }
        if epoch >= average_from {
            let avg = match average.as_mut() {
                None => average.insert(model.clone()),
                Some(avg) => {
                    avg.blend_toward(&model, 1.0 / (epoch - average_from + 1) as f64);
                    avg
                }
            };
            // A single snapshot was already scored above.
            if epoch > average_from {
                let avg_score = mean_loss(avg, if held_idx.is_empty() { &train_idx } else { &held_idx })?;
                if avg_score < best.0 {
                    best = (avg_score, Selection::Average { first: average_from, last: epoch }, avg.clone());
                }
            }
        }
        epochs.push(EpochStats { epoch, train_loss, heldout_loss });
    }

    let report = TrainReport {
        initial_train_loss,
        epochs,
        selection: best.1,
        selected_loss: best.0,
        class_weights,
        train_samples: train_idx.len(),
        heldout_samples: held_idx.len(),
    };
    Ok((best.2, report))
}

/// Holds out whole episodes, reflections included, so no scene contributes
/// to both sides.
fn split_by_episode(samples: &[TrainingSample], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let source = |i: usize| source_episode_id(&samples[i].episode_id);
    let mut ids: Vec<&str> = (0..samples.len()).map(source).collect::<BTreeSet<_>>().into_iter().collect();
    ids.shuffle(rng);
    let n_held = if ids.len() < 2 { 0 } else { ((ids.len() as f64 * fraction).round() as usize).min(ids.len() - 1) };
    let held: BTreeSet<&str> = ids[..n_held].iter().copied().collect();
    (0..samples.len()).partition(|&i| !held.contains(source(i)))
}
