//! Synthetic feature sets and the architecture comparison run on them.
//!
//! Real judgment corpora are not redistributable, so these generators give
//! training and model-selection code something with a known answer.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureManifest, FeatureVector};
use crate::model::{classification_accuracy, train, NetworkConfig, TrainConfig};
use crate::stats::kendall_tau_b;

/// Manifest of `d` external features named `ext:x0 .. ext:x{d-1}`.
pub fn synthetic_manifest(d: usize) -> Result<FeatureManifest> {
    let names: Vec<String> = (0..d).map(|i| format!("ext:x{i}")).collect();
    FeatureManifest::new(&names)
}

fn vector(id: String, index: usize, label: Label, human_score: f64, values: Vec<f64>) -> FeatureVector {
    FeatureVector {
        image_id: id,
        index,
        label,
        human_score: Some(human_score),
        system_id: None,
        values,
    }
}

/// Linearly separable set: human vectors ~ U[0.7, 1]^d, machine vectors
/// ~ U[0, 0.3]^d, interleaved. The human score of each vector is the mean of
/// its features.
pub fn separable_set(d: usize, per_class: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..per_class {
        for (label, lo) in [(Label::Human, 0.7), (Label::Machine, 0.0)] {
            let values: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..=lo + 0.3)).collect();
            let mean = values.iter().sum::<f64>() / d as f64;
            let index = out.len();
            out.push(vector(format!("sep{i}"), index, label, mean, values));
        }
    }
    out
}

/// Squared radius of the disc covering half of the unit square.
pub const DISC_RADIUS_SQ: f64 = 1.0 / (2.0 * std::f64::consts::PI);

/// Two features uniform on the unit square; human iff the point lies inside
/// the disc centred at (0.5, 0.5) covering half the square. The human score
/// decreases with distance from the centre, so no linear function of the
/// features ranks the points consistently.
pub fn disc_set(n: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (x, y): (f64, f64) = (rng.gen(), rng.gen());
            let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
            let label = if r2 < DISC_RADIUS_SQ {
                Label::Human
            } else {
                Label::Machine
            };
            vector(format!("disc{i}"), i, label, 1.0 - 2.0 * r2, vec![x, y])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureRow {
    pub name: String,
    /// `None` for the mean-of-features baseline.
    pub hidden_sizes: Option<Vec<usize>>,
    pub val_tau: f64,
    pub val_accuracy: Option<f64>,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureTable {
    pub rows: Vec<ArchitectureRow>,
}

impl ArchitectureTable {
    pub fn row(&self, name: &str) -> Option<&ArchitectureRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for ArchitectureTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>9} {:>9} {:>6}", "model", "val tau", "val acc", "epoch")?;
        for r in &self.rows {
            let acc = r.val_accuracy.map_or("-".to_string(), |a| format!("{a:.4}"));
            let epoch = r.best_epoch.map_or("-".to_string(), |e| e.to_string());
            writeln!(f, "{:<16} {:>9.4} {:>9} {:>6}", r.name, r.val_tau, acc, epoch)?;
        }
        Ok(())
    }
}

fn tau_or_zero(scores: &[f64], human: &[f64]) -> Result<f64> {
    match kendall_tau_b(scores, human) {
        Err(Error::ZeroVariance(_)) => Ok(0.0),
        other => other,
    }
}

/// Mean-of-features baseline followed by one trained model per entry of
/// `architectures`, each scored by validation Kendall τ.
pub fn architecture_comparison(
    train_set: &[FeatureVector],
    validation: &[FeatureVector],
    manifest: &FeatureManifest,
    architectures: &[Vec<usize>],
    seed: u64,
    cfg: &TrainConfig,
) -> Result<ArchitectureTable> {
    let human: Vec<f64> = validation
        .iter()
        .map(|v| v.human_score.ok_or(Error::Empty("validation human scores")))
        .collect::<Result<_>>()?;
    let means: Vec<f64> = validation
        .iter()
        .map(|v| v.values.iter().sum::<f64>() / v.values.len() as f64)
        .collect();
    let mut rows = vec![ArchitectureRow {
        name: "mean-features".into(),
        hidden_sizes: None,
        val_tau: tau_or_zero(&means, &human)?,
        val_accuracy: None,
        best_epoch: None,
    }];
    for hidden in architectures {
        let mut net = NetworkConfig::new(manifest.len(), hidden.clone());
        net.seed = seed;
        let (model, history) = train(train_set, validation, manifest, &net, cfg)?;
        let name = if hidden.is_empty() {
            "linear".to_string()
        } else {
            format!("hidden {hidden:?}")
        };
        rows.push(ArchitectureRow {
            name,
            hidden_sizes: Some(hidden.clone()),
            val_tau: history.best_tau,
            val_accuracy: classification_accuracy(&model, validation)?,
            best_epoch: Some(history.best_epoch),
        });
    }
    Ok(ArchitectureTable { rows })
}

/// Training settings used for the disc comparison. The default learning rate
/// needs thousands of epochs to bend a decision boundary into a disc, so this
/// run uses a larger step and fewer epochs.
pub fn disc_train_config() -> TrainConfig {
    let mut cfg = TrainConfig {
        max_epochs: 200,
        ..TrainConfig::default()
    };
    cfg.adam.learning_rate = 0.01;
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_set_ranges() {
        let set = separable_set(4, 10, 1);
        assert_eq!(set.len(), 20);
        for v in &set {
            let (lo, hi) = if v.label == Label::Human {
                (0.7, 1.0)
            } else {
                (0.0, 0.3)
            };
            assert!(v.values.iter().all(|x| (lo..=hi).contains(x)));
        }
        assert_eq!(set, separable_set(4, 10, 1));
    }

    #[test]
    fn disc_set_is_roughly_balanced() {
        let set = disc_set(2000, 3);
        let humans = set.iter().filter(|v| v.label == Label::Human).count();
        assert!((800..1200).contains(&humans), "{humans}");
    }
}
