//! L2-regularized logistic regression trained by full-batch gradient
//! descent from zero-initialized weights.
//!
//! Convergence is declared when the gradient max-norm drops below 1e-6;
//! hitting the epoch limit first is not an error, just a `converged = false`
//! flag on the model. The loss/gradient pair is exposed as a pure function
//! over a flat parameter vector so it can be checked against finite
//! differences.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnarDataset, Target};
use crate::error::Result;

use super::{Encoder, FeatureSpace, Prediction, TrainConfig, TrainedModel};

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// ln(1 + e^z) without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

const GRADIENT_TOL: f64 = 1e-6;

/// Trained logistic model: weights over the encoded design matrix plus an
/// (unpenalized) intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    encoder: Encoder,
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Gradient max-norm fell below 1e-6 before the epoch limit.
    pub converged: bool,
    pub final_grad_norm: f64,
    pub epochs_run: usize,
}

impl LogisticModel {
    pub fn feature_space(&self) -> &FeatureSpace {
        self.encoder.feature_space()
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn predict(&self, ds: &ColumnarDataset) -> Result<Prediction> {
        let m = self.encoder.transform(ds)?;
        let mut scores = Vec::with_capacity(m.n);
        for row in 0..m.n {
            let xi = &m.x[row * m.d..(row + 1) * m.d];
            let z = self.intercept
                + xi.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
            scores.push(sigmoid(z));
        }
        Ok(Prediction {
            scores,
            flagged: m.flagged,
        })
    }
}

/// Mean negative log-likelihood with an L2 penalty on the weights (not the
/// intercept). `params` is `[w_0 .. w_{d-1}, intercept]`; `x` is row-major
/// n x d; `y` holds 0/1 labels.
pub fn nll_loss_and_grad(
    params: &[f64],
    x: &[f64],
    y: &[f64],
    d: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let n = y.len();
    debug_assert_eq!(params.len(), d + 1);
    debug_assert_eq!(x.len(), n * d);
    let (weights, intercept) = (&params[..d], params[d]);
    let mut loss = 0.0;
    let mut grad = vec![0.0f64; d + 1];
    for row in 0..n {
        let xi = &x[row * d..(row + 1) * d];
        let z = intercept + xi.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        loss += softplus(z) - y[row] * z;
        let residual = sigmoid(z) - y[row];
        for (g, &v) in grad[..d].iter_mut().zip(xi) {
            *g += residual * v;
        }
        grad[d] += residual;
    }
    let n_f = n as f64;
    loss /= n_f;
    for g in grad.iter_mut() {
        *g /= n_f;
    }
    for (g, &w) in grad[..d].iter_mut().zip(weights) {
        *g += l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

/// Train on an imputed dataset (missing values are a `MissingValues` error).
pub fn train_logistic(
    ds: &ColumnarDataset,
    target: Target,
    cfg: &TrainConfig,
) -> Result<LogisticModel> {
    cfg.validate()?;
    let labels = ds.target(target)?;
    if labels.iter().all(|&v| v) || labels.iter().all(|&v| !v) {
        return Err(crate::error::Error::DegenerateTarget);
    }
    let encoder = Encoder::fit(ds)?;
    let m = encoder.transform(ds)?;
    let y: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();

    let mut params = vec![0.0f64; m.d + 1];
    let mut grad_norm = f64::INFINITY;
    let mut epochs_run = 0;
    for _ in 0..cfg.epochs {
        let (_, grad) = nll_loss_and_grad(&params, &m.x, &y, m.d, cfg.l2);
        grad_norm = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        if grad_norm < GRADIENT_TOL {
            break;
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.learning_rate * g;
        }
        epochs_run += 1;
    }

    let intercept = params[m.d];
    params.truncate(m.d);
    Ok(LogisticModel {
        encoder,
        weights: params,
        intercept,
        converged: grad_norm < GRADIENT_TOL,
        final_grad_norm: grad_norm,
        epochs_run,
    })
}

impl From<LogisticModel> for TrainedModel {
    fn from(m: LogisticModel) -> TrainedModel {
        TrainedModel::Logistic(m)
    }
}
