use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Model, NetworkConfig};
use super::objective::{adam_step, gradients, loss, AdamConfig, AdamState, Example};
use crate::error::{Error, Result};
use crate::features::{FeatureManifest, FeatureVector};
use crate::stats::kendall_tau_b;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            batch_size: 75,
            max_epochs: 800,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        let positive = [a.learning_rate, a.epsilon].iter().all(|v| *v > 0.0 && v.is_finite());
        let betas = [a.beta1, a.beta2].iter().all(|b| (0.0..1.0).contains(b));
        if !positive || !betas || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid training configuration: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Provenance stored alongside trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub config: TrainConfig,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_tau: f64,
    pub train_examples: usize,
    pub validation_examples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    /// `None` when no validation record carries a human/machine label.
    pub val_accuracy: Option<f64>,
    /// Kendall τ-b between scores and human judgments; 0 when undefined
    /// (all scores tied).
    pub val_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_tau: f64,
}

/// 1-based index of the first maximum.
pub fn best_epoch(taus: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &t) in taus.iter().enumerate() {
        if best.is_none_or(|(_, b)| t > b) {
            best = Some((i, t));
        }
    }
    best.map(|(i, _)| i + 1)
}

/// Fraction of labelled vectors whose predicted class matches.
pub fn classification_accuracy(model: &Model, vectors: &[FeatureVector]) -> Result<Option<f64>> {
    let mut total = 0usize;
    let mut correct = 0usize;
    for v in vectors {
        if let Some(class) = v.label.class() {
            let predicted = usize::from(model.score(&v.values)? > 0.5);
            total += 1;
            correct += usize::from(predicted == class);
        }
    }
    Ok((total > 0).then(|| correct as f64 / total as f64))
}

fn validation_tau(model: &Model, vectors: &[FeatureVector], human: &[f64]) -> Result<f64> {
    let scores = vectors
        .iter()
        .map(|v| model.score(&v.values))
        .collect::<Result<Vec<_>>>()?;
    match kendall_tau_b(&scores, human) {
        Ok(t) => Ok(t),
        Err(Error::ZeroVariance(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Minibatch Adam on the cross-entropy objective, keeping the parameters of
/// the epoch with the highest validation Kendall τ.
pub fn train(
    train_set: &[FeatureVector],
    validation: &[FeatureVector],
    manifest: &FeatureManifest,
    net: &NetworkConfig,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if validation.len() < 2 {
        return Err(Error::Empty("validation set needs at least two records"));
    }
    let examples = train_set
        .iter()
        .map(|v| {
            let class = v.label.class().ok_or_else(|| {
                Error::record(
                    &v.image_id,
                    format!("training record {} has no human/machine label", v.index),
                )
            })?;
            if v.values.len() != manifest.len() {
                return Err(Error::Dimension {
                    expected: manifest.len(),
                    actual: v.values.len(),
                });
            }
            Ok(Example { x: &v.values, class })
        })
        .collect::<Result<Vec<_>>>()?;
    let human = validation
        .iter()
        .map(|v| {
            v.human_score
                .ok_or_else(|| Error::record(&v.image_id, format!("validation record {} has no human score", v.index)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut model = Model::init(net, manifest.clone())?;
    let mut state = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.max_epochs);
    let mut best: Option<(usize, f64, Model)> = None;
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i]));
            let grads = gradients(&model, &batch)?;
            adam_step(&mut model, &grads, &mut state, &cfg.adam)?;
        }
        if !model.is_finite() {
            return Err(Error::Internal(format!("non-finite parameters after epoch {epoch}")));
        }
        let stats = EpochStats {
            epoch,
            train_loss: loss(&model, &examples)?,
            train_accuracy: classification_accuracy(&model, train_set)?.unwrap_or(0.0),
            val_accuracy: classification_accuracy(&model, validation)?,
            val_tau: validation_tau(&model, validation, &human)?,
        };
        if best.as_ref().is_none_or(|(_, t, _)| stats.val_tau > *t) {
            best = Some((epoch, stats.val_tau, model.clone()));
        }
        log::debug!(
            "epoch {epoch}: loss {:.5} train acc {:.4} val τ {:.4}",
            stats.train_loss,
            stats.train_accuracy,
            stats.val_tau
        );
        epochs.push(stats);
    }
    let (best_epoch, best_tau, mut best_model) = best.expect("max_epochs ≥ 1");
    best_model.training = Some(TrainingMeta {
        config: cfg.clone(),
        epochs_run: epochs.len(),
        best_epoch,
        best_tau,
        train_examples: train_set.len(),
        validation_examples: validation.len(),
    });
    Ok((
        best_model,
        TrainHistory {
            epochs,
            best_epoch,
            best_tau,
        },
    ))
}
