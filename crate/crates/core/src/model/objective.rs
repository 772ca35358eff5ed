//! Cross-entropy loss with an L2 weight penalty, its analytic gradient, and
//! the Adam update.

use serde::{Deserialize, Serialize};

use super::network::{log_softmax, Layer, Model, CLASSES};
use crate::error::{Error, Result};

/// One labelled training example; `class` is 0 (machine) or 1 (human).
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub x: &'a [f64],
    pub class: usize,
}

fn check_batch(batch: &[Example<'_>]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    if let Some(e) = batch.iter().find(|e| e.class >= CLASSES) {
        return Err(Error::InvalidArgument(format!("unknown class label {}", e.class)));
    }
    Ok(())
}

/// Mean negative log-likelihood plus `l2 · Σ W²` (biases excluded).
pub fn loss(model: &Model, batch: &[Example<'_>]) -> Result<f64> {
    check_batch(batch)?;
    let mut nll = 0.0;
    for e in batch {
        nll -= log_softmax(model.forward(e.x)?.logits, e.class);
    }
    Ok(nll / batch.len() as f64 + model.config.l2 * model.weight_norm_sq())
}

/// Gradient with the same shape as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    fn zeros_like(model: &Model) -> Self {
        Gradients {
            layers: model.layers.iter().map(|l| Layer::zeros(l.outputs, l.inputs)).collect(),
        }
    }
}

/// Exact gradient of [`loss`] by backpropagation.
pub fn gradients(model: &Model, batch: &[Example<'_>]) -> Result<Gradients> {
    check_batch(batch)?;
    let mut grads = Gradients::zeros_like(model);
    let scale = 1.0 / batch.len() as f64;
    for e in batch {
        let fwd = model.forward(e.x)?;
        // d(-log p_y)/dz = p - onehot(y)
        let mut delta: Vec<f64> = (0..CLASSES)
            .map(|k| (fwd.probs[k] - if k == e.class { 1.0 } else { 0.0 }) * scale)
            .collect();
        for (l, layer) in model.layers.iter().enumerate().rev() {
            let input = &fwd.activations[l];
            let g = &mut grads.layers[l];
            for (r, d) in delta.iter().enumerate() {
                g.bias[r] += d;
                let row = &mut g.weights[r * layer.inputs..(r + 1) * layer.inputs];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if l == 0 {
                break;
            }
            // Back through W and the ReLU of the previous layer.
            delta = (0..layer.inputs)
                .map(|c| {
                    if input[c] > 0.0 {
                        (0..layer.outputs).map(|r| layer.weight(r, c) * delta[r]).sum()
                    } else {
                        0.0
                    }
                })
                .collect();
        }
    }
    let two_beta = 2.0 * model.config.l2;
    if two_beta != 0.0 {
        for (g, layer) in grads.layers.iter_mut().zip(&model.layers) {
            for (gw, w) in g.weights.iter_mut().zip(&layer.weights) {
                *gw += two_beta * w;
            }
        }
    }
    Ok(grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Layer>,
    v: Vec<Layer>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &Model) -> Self {
        let zeros = || model.layers.iter().map(|l| Layer::zeros(l.outputs, l.inputs)).collect();
        AdamState {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn adam_update(theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], cfg: &AdamConfig, c1: f64, c2: f64) {
    for i in 0..theta.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(model: &mut Model, grads: &Gradients, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.layers.len() != model.layers.len() || state.m.len() != model.layers.len() {
        return Err(Error::Internal("optimizer state does not match model".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (l, layer) in model.layers.iter_mut().enumerate() {
        let g = &grads.layers[l];
        let (m, v) = (&mut state.m[l], &mut state.v[l]);
        adam_update(
            &mut layer.weights,
            &g.weights,
            &mut m.weights,
            &mut v.weights,
            cfg,
            c1,
            c2,
        );
        adam_update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias, cfg, c1, c2);
    }
    Ok(())
}
