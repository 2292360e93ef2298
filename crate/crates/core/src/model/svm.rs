//! Soft-margin linear SVM trained by dual coordinate descent.
//!
//! The bias is handled as an extra constant input of 1, so it is regularized
//! together with the weights. Each epoch visits every dual variable once in a
//! seeded random order and minimizes the dual objective exactly along that
//! coordinate (clipped to `[0, C]`), which makes the dual objective
//! non-increasing from epoch to epoch. Training stops when the spread of the
//! projected gradient drops below the tolerance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            tolerance: 1e-3,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        Ok(())
    }
}

/// Row-major dense design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        DenseMatrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    #[inline]
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    pub converged: bool,
    /// Dual objective `0.5 |w|^2 - sum(alpha)` at the start and after each epoch.
    pub dual_objective: Vec<f64>,
    /// `0.5 |w|^2 + C * sum(hinge)` of the returned model.
    pub primal_objective: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dual_objective(w: &[f64], bias: f64, alpha: &[f64]) -> f64 {
    0.5 * (dot(w, w) + bias * bias) - alpha.iter().sum::<f64>()
}

pub fn train(
    x: &DenseMatrix,
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<(LinearSvm, TrainReport)> {
    cfg.validate()?;
    if labels.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            found: labels.len(),
        });
    }
    if !labels.iter().any(|l| l.is_positive()) {
        return Err(Error::SingleClass("negative"));
    }
    if labels.iter().all(|l| l.is_positive()) {
        return Err(Error::SingleClass("positive"));
    }

    let n = x.rows();
    let c = cfg.c;
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let diag: Vec<f64> = (0..n).map(|i| dot(x.row(i), x.row(i)) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; x.cols()];
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = vec![0.0];
    let mut converged = false;
    let mut epochs = 0;

    while epochs < cfg.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let xi = x.row(i);
            let g = y[i] * (dot(&w, xi) + bias) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                if step != 0.0 {
                    for (wj, xj) in w.iter_mut().zip(xi) {
                        *wj += step * xj;
                    }
                    bias += step;
                }
            }
        }
        history.push(dual_objective(&w, bias, &alpha));
        if pg_max - pg_min < cfg.tolerance {
            converged = true;
            break;
        }
    }

    let model = LinearSvm { weights: w, bias };
    let hinge: f64 = (0..n)
        .map(|i| (1.0 - y[i] * model.decision_value(x.row(i))).max(0.0))
        .sum();
    let primal = 0.5 * (dot(&model.weights, &model.weights) + bias * bias) + c * hinge;
    Ok((
        model,
        TrainReport {
            epochs,
            converged,
            dual_objective: history,
            primal_objective: primal,
        },
    ))
}
