//! Single-unit logistic baseline on the pairwise sentiment delta.
//!
//! The target is binarised: a row is positive when its flow exceeds the
//! median flow of the training rows. This is an above-median classifier, not
//! a count regression.

use super::ModelError;
use crate::dataset::PairwiseRow;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 0.1,
            epochs: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCheckpoint {
    pub weight: f64,
    pub bias: f64,
    /// Median training flow; flows above it are the positive class.
    pub threshold: f64,
    pub config: LogisticConfig,
    /// Mean log-loss before each update.
    pub trace: Vec<f64>,
    pub dataset_fingerprint: String,
}

impl BaselineCheckpoint {
    pub fn probability(&self, sentiment_delta: f64) -> f64 {
        sigmoid(self.weight * sentiment_delta + self.bias)
    }

    pub fn classify(&self, sentiment_delta: f64) -> bool {
        self.weight * sentiment_delta + self.bias > 0.0
    }

    pub fn label(&self, flow: f64) -> bool {
        flow > self.threshold
    }

    /// Fraction of rows whose above-median label is predicted correctly.
    pub fn accuracy(&self, rows: &[PairwiseRow]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let hits = rows
            .iter()
            .filter(|r| self.classify(r.sentiment_delta) == self.label(r.flow as f64))
            .count();
        hits as f64 / rows.len() as f64
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Mean log-loss of `(w, b)` over the data.
pub fn log_loss(w: f64, b: f64, xs: &[f64], labels: &[bool]) -> f64 {
    let total: f64 = xs
        .iter()
        .zip(labels)
        .map(|(x, y)| {
            let z = w * x + b;
            softplus(z) - if *y { z } else { 0.0 }
        })
        .sum();
    total / xs.len() as f64
}

/// Full-batch gradient descent from `w = b = 0`. Returns `(w, b, trace)`.
///
/// Stops early once the gradient vanishes to rounding level; the trace then
/// holds fewer than `epochs` entries.
pub fn fit_logistic(
    xs: &[f64],
    labels: &[bool],
    config: &LogisticConfig,
) -> Result<(f64, f64, Vec<f64>), ModelError> {
    if xs.len() < 2 || xs.len() != labels.len() {
        return Err(ModelError::TooFewRows(xs.len()));
    }
    let positives = labels.iter().filter(|l| **l).count();
    if positives == 0 || positives == labels.len() {
        return Err(ModelError::SingleClass {
            rows: labels.len(),
            positives,
        });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::NonFiniteInput);
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) || config.epochs == 0 {
        return Err(ModelError::InvalidConfig(
            "logistic baseline needs a positive learning rate and epoch count".into(),
        ));
    }
    let n = xs.len() as f64;
    let (mut w, mut b) = (0.0f64, 0.0f64);
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let loss = log_loss(w, b, xs, labels);
        if !loss.is_finite() {
            return Err(ModelError::Diverged { epoch: epoch + 1 });
        }
        trace.push(loss);
        let (mut gw, mut gb) = (0.0, 0.0);
        for (x, y) in xs.iter().zip(labels) {
            let r = sigmoid(w * x + b) - if *y { 1.0 } else { 0.0 };
            gw += r * x;
            gb += r;
        }
        gw /= n;
        gb /= n;
        if gw.abs().max(gb.abs()) < 1e-12 {
            break;
        }
        w -= config.learning_rate * gw;
        b -= config.learning_rate * gb;
    }
    Ok((w, b, trace))
}

/// Fits the above-median classifier on training rows.
pub fn fit_logistic_baseline(
    rows: &[PairwiseRow],
    config: &LogisticConfig,
    dataset_fingerprint: &str,
) -> Result<BaselineCheckpoint, ModelError> {
    let flows: Vec<f64> = rows.iter().map(|r| r.flow as f64).collect();
    let threshold = median(&flows).ok_or(ModelError::TooFewRows(0))?;
    let labels: Vec<bool> = flows.iter().map(|f| *f > threshold).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.sentiment_delta).collect();
    let (weight, bias, trace) = fit_logistic(&xs, &labels, config)?;
    Ok(BaselineCheckpoint {
        weight,
        bias,
        threshold,
        config: config.clone(),
        trace,
        dataset_fingerprint: dataset_fingerprint.to_string(),
    })
}
