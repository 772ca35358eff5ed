//! Feed-forward human-vs-machine classifier whose human-class probability
//! is the metric score.

mod io;
mod network;
mod objective;
mod train;

pub use io::{load_model, model_from_str, model_to_string, save_model};
pub use network::{softmax, Forward, Layer, Model, NetworkConfig, CLASSES, MAX_HIDDEN_LAYERS};
pub use objective::{adam_step, gradients, loss, AdamConfig, AdamState, Example, Gradients};
pub use train::{best_epoch, classification_accuracy, train, EpochStats, TrainConfig, TrainHistory, TrainingMeta};

use crate::error::Result;
use crate::features::{FeatureManifest, FeatureVector};

impl Model {
    /// Scores feature vectors, refusing ones built from a different manifest.
    pub fn score_vectors(&self, manifest: &FeatureManifest, vectors: &[FeatureVector]) -> Result<Vec<f64>> {
        self.manifest.ensure_matches(manifest)?;
        vectors.iter().map(|v| self.score(&v.values)).collect()
    }
}
