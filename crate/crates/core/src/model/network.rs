use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::TrainingMeta;
use crate::error::{Error, Result};
use crate::features::FeatureManifest;

/// Output classes: index 0 = machine, 1 = human.
pub const CLASSES: usize = 2;
pub const MAX_HIDDEN_LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_dim: usize,
    /// Empty for a linear softmax model.
    pub hidden_sizes: Vec<usize>,
    /// Coefficient of the squared-weight penalty.
    pub l2: f64,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_sizes: Vec<usize>) -> Self {
        NetworkConfig {
            input_dim,
            hidden_sizes,
            l2: 1e-4,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidArgument("input_dim must be ≥ 1".into()));
        }
        if self.hidden_sizes.len() > MAX_HIDDEN_LAYERS {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_HIDDEN_LAYERS} hidden layers supported"
            )));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidArgument("hidden layer sizes must be ≥ 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidArgument("l2 coefficient must be finite and ≥ 0".into()));
        }
        Ok(())
    }

    /// (outputs, inputs) for each layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_sizes);
        dims.push(CLASSES);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

/// Dense affine layer, weights stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub outputs: usize,
    pub inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Layer {
            outputs,
            inputs,
            weights: vec![0.0; outputs * inputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Values kept from a forward pass for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub logits: [f64; CLASSES],
    pub probs: [f64; CLASSES],
    /// Input followed by each hidden layer's post-ReLU output.
    pub activations: Vec<Vec<f64>>,
}

/// Numerically stable two-class softmax.
pub fn softmax(z: [f64; CLASSES]) -> [f64; CLASSES] {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

pub(crate) fn log_softmax(z: [f64; CLASSES], class: usize) -> f64 {
    let m = z[0].max(z[1]);
    z[class] - m - ((z[0] - m).exp() + (z[1] - m).exp()).ln()
}

/// Feed-forward classifier: ReLU hidden layers, softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub layers: Vec<Layer>,
    pub manifest: FeatureManifest,
    pub config: NetworkConfig,
    /// Set by training; recorded in saved model files.
    pub training: Option<TrainingMeta>,
}

impl Model {
    /// Glorot-uniform weights, zero biases, deterministic in `config.seed`.
    pub fn init(config: &NetworkConfig, manifest: FeatureManifest) -> Result<Self> {
        config.validate()?;
        if manifest.len() != config.input_dim {
            return Err(Error::Dimension {
                expected: config.input_dim,
                actual: manifest.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(out, inp)| {
                let limit = (6.0 / (inp + out) as f64).sqrt();
                let mut layer = Layer::zeros(out, inp);
                for w in &mut layer.weights {
                    *w = rng.gen_range(-limit..=limit);
                }
                layer
            })
            .collect();
        Ok(Model {
            layers,
            manifest,
            config: config.clone(),
            training: None,
        })
    }

    /// A model with every parameter zero.
    pub fn zeros(config: &NetworkConfig, manifest: FeatureManifest) -> Result<Self> {
        let mut m = Model::init(config, manifest)?;
        for layer in &mut m.layers {
            layer.weights.fill(0.0);
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut activations = vec![x.to_vec()];
        let (last, hidden) = self.layers.split_last().expect("at least one layer");
        for layer in hidden {
            let h: Vec<f64> = layer
                .apply(activations.last().expect("non-empty"))
                .into_iter()
                .map(|v| v.max(0.0))
                .collect();
            activations.push(h);
        }
        let z = last.apply(activations.last().expect("non-empty"));
        let logits = [z[0], z[1]];
        Ok(Forward {
            logits,
            probs: softmax(logits),
            activations,
        })
    }

    /// Probability that the candidate is human-written: the metric value.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?.probs[1])
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(d: usize) -> FeatureManifest {
        let names: Vec<String> = (0..d).map(|i| format!("ext:x{i}")).collect();
        FeatureManifest::new(&names).unwrap()
    }

    #[test]
    fn init_shapes_and_determinism() {
        let cfg = NetworkConfig::new(12, vec![12]);
        let a = Model::init(&cfg, manifest(12)).unwrap();
        let b = Model::init(&cfg, manifest(12)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.layers[0].outputs, a.layers[0].inputs), (12, 12));
        assert_eq!((a.layers[1].outputs, a.layers[1].inputs), (2, 12));
        assert_eq!(a.layers[0].bias, vec![0.0; 12]);
        let limit = (6.0f64 / 24.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));

        let linear = Model::init(&NetworkConfig::new(12, vec![]), manifest(12)).unwrap();
        assert_eq!(linear.layers.len(), 1);
        assert_eq!((linear.layers[0].outputs, linear.layers[0].inputs), (2, 12));
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::new(0, vec![]).validate().is_err());
        assert!(NetworkConfig::new(3, vec![2, 2, 2]).validate().is_err());
        assert!(NetworkConfig::new(3, vec![0]).validate().is_err());
        assert!(Model::init(&NetworkConfig::new(3, vec![]), manifest(4)).is_err());
    }

    #[test]
    fn forward_examples() {
        let m = Model::zeros(&NetworkConfig::new(3, vec![4]), manifest(3)).unwrap();
        assert_eq!(m.forward(&[0.1, 0.2, 0.3]).unwrap().probs, [0.5, 0.5]);
        assert_eq!(m.score(&[0.9, 0.0, 1.0]).unwrap(), 0.5);
        assert!(m.forward(&[0.1]).is_err());

        let p = softmax([0.0, 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let big = softmax([1000.0, 1001.0]);
        assert!(big.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn relu_zeroes_negative_preactivations() {
        let mut m = Model::zeros(&NetworkConfig::new(2, vec![3]), manifest(2)).unwrap();
        m.layers[0].bias = vec![-1.0, -2.0, -0.5];
        let f = m.forward(&[0.2, 0.3]).unwrap();
        assert_eq!(f.activations[1], vec![0.0; 3]);
    }

    #[test]
    fn score_is_monotone_in_human_logit() {
        let mut m = Model::zeros(&NetworkConfig::new(1, vec![]), manifest(1)).unwrap();
        let mut last = m.score(&[0.5]).unwrap();
        for step in 1..10 {
            m.layers[0].bias[1] = step as f64 * 0.3;
            let s = m.score(&[0.5]).unwrap();
            assert!(s > last);
            last = s;
        }
    }
}
