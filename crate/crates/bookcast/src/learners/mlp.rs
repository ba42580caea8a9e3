//! One-hidden-layer sigmoid network trained with mini-batch gradient
//! descent plus momentum, cross-entropy loss and early stopping on a 10%
//! validation slice of the training data.
//!
//! Parameters live in one flat vector `[W1 | b1 | w2 | b2]` (W1 row-major,
//! hidden x input) and the loss/gradient is a pure function of it, so the
//! backward pass can be validated against central finite differences.
//! Weights initialize uniformly in +-1/sqrt(fan_in) from the training seed;
//! biases start at zero.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnarDataset, Target};
use crate::error::Result;
use crate::rng::SeededRng;

use super::logistic::{sigmoid, softplus};
use super::{Encoder, FeatureSpace, Prediction, TrainConfig, TrainedModel};

/// Trained network. `params` layout: W1 (hidden x input, row-major), then
/// b1 (hidden), w2 (hidden), b2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNet {
    encoder: Encoder,
    pub hidden_units: usize,
    pub params: Vec<f64>,
    pub epochs_run: usize,
    /// Validation cross-entropy of the restored best parameters, if early
    /// stopping was active.
    pub best_val_loss: Option<f64>,
}

impl NeuralNet {
    pub fn feature_space(&self) -> &FeatureSpace {
        self.encoder.feature_space()
    }

    pub fn predict(&self, ds: &ColumnarDataset) -> Result<Prediction> {
        let m = self.encoder.transform(ds)?;
        let scores = (0..m.n)
            .map(|row| {
                let xi = &m.x[row * m.d..(row + 1) * m.d];
                forward(&self.params, xi, m.d, self.hidden_units)
            })
            .collect();
        Ok(Prediction {
            scores,
            flagged: m.flagged,
        })
    }
}

pub(crate) fn param_count(d: usize, h: usize) -> usize {
    h * d + h + h + 1
}

/// Forward pass for one row: sigmoid(w2 . sigmoid(W1 x + b1) + b2).
fn forward(params: &[f64], xi: &[f64], d: usize, h: usize) -> f64 {
    let (w1, rest) = params.split_at(h * d);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(h);
    let mut z2 = b2[0];
    for j in 0..h {
        let mut z1 = b1[j];
        let row = &w1[j * d..(j + 1) * d];
        for (w, &x) in row.iter().zip(xi) {
            z1 += w * x;
        }
        z2 += w2[j] * sigmoid(z1);
    }
    sigmoid(z2)
}

/// Mean cross-entropy over `rows` plus L2 on the weight matrices (biases
/// unpenalized), with its gradient.
pub fn mlp_loss_and_grad(
    params: &[f64],
    x: &[f64],
    y: &[f64],
    rows: &[usize],
    d: usize,
    h: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    debug_assert_eq!(params.len(), param_count(d, h));
    let (w1, rest) = params.split_at(h * d);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(h);

    let mut grad = vec![0.0f64; params.len()];
    let mut loss = 0.0f64;
    let mut a1 = vec![0.0f64; h];
    let n = rows.len() as f64;
    for &row in rows {
        let xi = &x[row * d..(row + 1) * d];
        let mut z2 = b2[0];
        for j in 0..h {
            let mut z1 = b1[j];
            let w_row = &w1[j * d..(j + 1) * d];
            for (w, &v) in w_row.iter().zip(xi) {
                z1 += w * v;
            }
            a1[j] = sigmoid(z1);
            z2 += w2[j] * a1[j];
        }
        loss += softplus(z2) - y[row] * z2;

        // backward
        let dz2 = (sigmoid(z2) - y[row]) / n;
        let (g_w1, g_rest) = grad.split_at_mut(h * d);
        let (g_b1, g_rest) = g_rest.split_at_mut(h);
        let (g_w2, g_b2) = g_rest.split_at_mut(h);
        g_b2[0] += dz2;
        for j in 0..h {
            g_w2[j] += dz2 * a1[j];
            let dz1 = dz2 * w2[j] * a1[j] * (1.0 - a1[j]);
            g_b1[j] += dz1;
            let g_row = &mut g_w1[j * d..(j + 1) * d];
            for (g, &v) in g_row.iter_mut().zip(xi) {
                *g += dz1 * v;
            }
        }
    }
    loss /= n;
    // L2 on W1 and w2 only
    let mut penalty = 0.0;
    for (k, w) in w1.iter().enumerate() {
        penalty += w * w;
        grad[k] += l2 * w;
    }
    for (j, w) in w2.iter().enumerate() {
        penalty += w * w;
        grad[h * d + h + j] += l2 * w;
    }
    loss += 0.5 * l2 * penalty;
    (loss, grad)
}

/// Validation cross-entropy (no penalty).
fn validation_loss(params: &[f64], x: &[f64], y: &[f64], rows: &[usize], d: usize, h: usize) -> f64 {
    let mut loss = 0.0;
    for &row in rows {
        let xi = &x[row * d..(row + 1) * d];
        let p = forward(params, xi, d, h).clamp(1e-12, 1.0 - 1e-12);
        loss -= y[row] * p.ln() + (1.0 - y[row]) * (1.0 - p).ln();
    }
    loss / rows.len() as f64
}

/// Train the network. Numeric predictors are standardized by the encoder;
/// missing values are rejected.
pub fn train_mlp(ds: &ColumnarDataset, target: Target, cfg: &TrainConfig) -> Result<NeuralNet> {
    cfg.validate()?;
    let labels = ds.target(target)?;
    if labels.iter().all(|&v| v) || labels.iter().all(|&v| !v) {
        return Err(crate::error::Error::DegenerateTarget);
    }
    let encoder = Encoder::fit(ds)?;
    let m = encoder.transform(ds)?;
    let y: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();
    let (d, h) = (m.d, cfg.hidden_units);

    let mut rng = SeededRng::new(cfg.seed);
    let mut params = vec![0.0f64; param_count(d, h)];
    let w1_scale = 1.0 / (d.max(1) as f64).sqrt();
    for p in params[..h * d].iter_mut() {
        *p = (rng.next_f64() * 2.0 - 1.0) * w1_scale;
    }
    let w2_scale = 1.0 / (h as f64).sqrt();
    for p in params[h * d + h..h * d + h + h].iter_mut() {
        *p = (rng.next_f64() * 2.0 - 1.0) * w2_scale;
    }

    // held-out validation slice for early stopping
    let mut order: Vec<usize> = (0..m.n).collect();
    rng.shuffle(&mut order);
    let val_n = m.n / 10;
    let early_stopping = val_n >= 1 && m.n >= 20;
    let (train_rows, val_rows) = if early_stopping {
        let split = m.n - val_n;
        (order[..split].to_vec(), order[split..].to_vec())
    } else {
        (order, Vec::new())
    };

    let mut velocity = vec![0.0f64; params.len()];
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;
    let mut epochs_run = 0usize;
    let mut batch_order = train_rows.clone();
    for _epoch in 0..cfg.epochs {
        rng.shuffle(&mut batch_order);
        for batch in batch_order.chunks(cfg.batch_size) {
            let (_, grad) = mlp_loss_and_grad(&params, &m.x, &y, batch, d, h, cfg.l2);
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
        }
        epochs_run += 1;
        if early_stopping {
            let val = validation_loss(&params, &m.x, &y, &val_rows, d, h);
            if val + 1e-12 < best_val {
                best_val = val;
                best_params.copy_from_slice(&params);
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }
    if early_stopping {
        params = best_params;
    }

    Ok(NeuralNet {
        encoder,
        hidden_units: h,
        params,
        epochs_run,
        best_val_loss: early_stopping.then_some(best_val),
    })
}

impl From<NeuralNet> for TrainedModel {
    fn from(m: NeuralNet) -> TrainedModel {
        TrainedModel::Mlp(m)
    }
}
