//! Bilinear loss model: `f(x, a) = phi(a)^T W phi(x)` with online
//! stochastic gradient descent on the squared loss `(f - l)^2 / 2`.

use serde::{Deserialize, Serialize};

use crate::bandit::linalg::{dot, matvec};
use crate::{Error, Result};

/// The learnable bilinear model. `W` has one row per action-embedding
/// coordinate and one column per context-embedding coordinate, and starts
/// at zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BilinearModel {
    w: Vec<Vec<f64>>,
    lr: f64,
    action_dim: usize,
    context_dim: usize,
}

impl BilinearModel {
    pub fn new(action_dim: usize, context_dim: usize, lr: f64) -> Result<Self> {
        if action_dim == 0 || context_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be > 0, got {lr}")));
        }
        Ok(Self {
            w: vec![vec![0.0; context_dim]; action_dim],
            lr,
            action_dim,
            context_dim,
        })
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// Unclamped model output `phi(a)^T W phi(x)`.
    pub fn predict_raw(&self, context_emb: &[f64], action_emb: &[f64]) -> Result<f64> {
        self.check_dims(context_emb, action_emb)?;
        let wx = matvec(&self.w, context_emb);
        Ok(dot(action_emb, &wx))
    }

    /// Model output clamped into the valid loss range `[0, 1]`. The clamp
    /// affects action selection only; gradients use the raw output.
    pub fn predict(&self, context_emb: &[f64], action_emb: &[f64]) -> Result<f64> {
        Ok(self.predict_raw(context_emb, action_emb)?.clamp(0.0, 1.0))
    }

    /// One SGD step on `(f - l)^2 / 2`:
    /// `W <- W - lr * (f - l) * phi(a) phi(x)^T`.
    pub fn update(&mut self, context_emb: &[f64], action_emb: &[f64], loss: f64) -> Result<()> {
        let raw = self.predict_raw(context_emb, action_emb)?;
        let step = self.lr * (raw - loss);
        if !step.is_finite() {
            return Err(Error::Training(format!(
                "non-finite gradient step (prediction {raw}, loss {loss})"
            )));
        }
        for (row, &a_i) in self.w.iter_mut().zip(action_emb) {
            if a_i == 0.0 {
                continue;
            }
            let scale = step * a_i;
            for (w_ij, &x_j) in row.iter_mut().zip(context_emb) {
                *w_ij -= scale * x_j;
                if !w_ij.is_finite() {
                    return Err(Error::Training(
                        "model weights diverged to non-finite values".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_dims(&self, context_emb: &[f64], action_emb: &[f64]) -> Result<()> {
        if context_emb.len() != self.context_dim {
            return Err(Error::Dimension { expected: self.context_dim, got: context_emb.len() });
        }
        if action_emb.len() != self.action_dim {
            return Err(Error::Dimension { expected: self.action_dim, got: action_emb.len() });
        }
        Ok(())
    }
}
