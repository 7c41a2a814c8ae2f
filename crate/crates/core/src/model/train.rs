use super::network::{forward, init_params, loss_and_grad, ModelParams};
use super::optim::Optimizer;
use super::scaler::{Scaler, Standardizer};
use super::{ModelError, NetworkConfig};
use crate::dataset::Sample;

/// Training loss before each parameter update, one entry per epoch, measured
/// in standardised target units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub losses: Vec<f64>,
}

impl TrainingTrace {
    pub fn initial(&self) -> Option<f64> {
        self.losses.first().copied()
    }

    pub fn last(&self) -> Option<f64> {
        self.losses.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub config: NetworkConfig,
    pub params: ModelParams,
    pub scaler: Scaler,
    pub trace: TrainingTrace,
    /// Hex content hash of the dataset file the model was trained from.
    pub dataset_fingerprint: String,
}

impl ModelCheckpoint {
    /// Checks that config, parameters, scaler and trace agree with each other.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.config.validate()?;
        let bad = |m: &str| Err(ModelError::InvalidCheckpoint(m.to_string()));
        if self.params.layer_sizes() != self.config.layer_sizes {
            return bad("parameter shapes disagree with layer sizes");
        }
        if self.params.activation != self.config.activation {
            return bad("parameter activation disagrees with config");
        }
        for l in &self.params.layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return bad("layer buffer has the wrong length");
            }
        }
        if !self.params.is_finite() {
            return bad("non-finite parameter");
        }
        if self.scaler.input.width() != self.config.input_width()
            || self.scaler.target.width() != self.config.output_width()
        {
            return bad("scaler width disagrees with layer sizes");
        }
        for s in [&self.scaler.input, &self.scaler.target] {
            if s.scale.len() != s.mean.len() || s.scale.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("scaler scale must be positive");
            }
        }
        if self.trace.losses.len() != self.config.epochs {
            return bad("loss trace length differs from epoch count");
        }
        Ok(())
    }
}

/// Full-batch training on `samples`. The scaler is fitted on these samples,
/// so pass only the training split.
pub fn train(
    samples: &[Sample],
    config: &NetworkConfig,
    dataset_fingerprint: &str,
) -> Result<ModelCheckpoint, ModelError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let (in_w, out_w) = (config.input_width(), config.output_width());
    for s in samples {
        if s.input.len() != in_w {
            return Err(ModelError::WidthMismatch {
                expected: in_w,
                got: s.input.len(),
            });
        }
        if s.target.len() != out_w {
            return Err(ModelError::WidthMismatch {
                expected: out_w,
                got: s.target.len(),
            });
        }
        if s.input.iter().chain(&s.target).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteInput);
        }
    }

    let scaler = Scaler {
        input: Standardizer::fit(samples.iter().map(|s| s.input.as_slice()), in_w),
        target: Standardizer::fit(samples.iter().map(|s| s.target.as_slice()), out_w),
    };
    for &i in &scaler.input.degenerate {
        log::warn!("input dimension {i} is constant over the training rows; scale pinned to 1");
    }
    for &i in &scaler.target.degenerate {
        log::warn!("target dimension {i} is constant over the training rows; scale pinned to 1");
    }
    let scaled: Vec<Sample> = samples
        .iter()
        .map(|s| Sample {
            input: scaler.input.transform(&s.input),
            target: scaler.target.transform(&s.target),
        })
        .collect();

    let mut params = init_params(config)?;
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, &params);
    let mut trace = TrainingTrace {
        losses: Vec::with_capacity(config.epochs),
    };
    for epoch in 0..config.epochs {
        let (loss, grads) = loss_and_grad(&params, config.loss, &scaled)?;
        if !loss.is_finite() {
            return Err(ModelError::Diverged { epoch: epoch + 1 });
        }
        trace.losses.push(loss);
        optimizer.step(&mut params, &grads);
        if epoch % 500 == 0 {
            log::debug!("epoch {} loss {loss:.6e}", epoch + 1);
        }
    }
    if !params.is_finite() {
        return Err(ModelError::Diverged { epoch: config.epochs });
    }

    Ok(ModelCheckpoint {
        config: config.clone(),
        params,
        scaler,
        trace,
        dataset_fingerprint: dataset_fingerprint.to_string(),
    })
}

/// Prediction in original target units. Negative outputs are kept unless
/// `clamp_nonnegative` is set.
pub fn predict(
    checkpoint: &ModelCheckpoint,
    x: &[f64],
    clamp_nonnegative: bool,
) -> Result<Vec<f64>, ModelError> {
    if x.len() != checkpoint.scaler.input.width() {
        return Err(ModelError::WidthMismatch {
            expected: checkpoint.scaler.input.width(),
            got: x.len(),
        });
    }
    let z = forward(&checkpoint.params, &checkpoint.scaler.input.transform(x))?;
    let mut y = checkpoint.scaler.target.inverse(&z);
    if clamp_nonnegative {
        y.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, OptimizerKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_samples(n: usize, in_w: usize, out_w: usize, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Sample {
                input: (0..in_w).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                target: (0..out_w).map(|_| rng.gen_range(0.0..5000.0)).collect(),
            })
            .collect()
    }

    #[test]
    fn trace_length_and_determinism() {
        let samples = random_samples(20, 3, 2, 1);
        let config = NetworkConfig {
            layer_sizes: vec![3, 8, 8, 2],
            epochs: 50,
            ..NetworkConfig::default()
        };
        let a = train(&samples, &config, "abc").unwrap();
        let b = train(&samples, &config, "abc").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace.losses.len(), 50);
        a.validate().unwrap();
    }

    #[test]
    fn linear_task_reaches_small_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let samples: Vec<Sample> = (0..400)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let t = a.iter().map(|row| row.iter().zip(&x).map(|(w, v)| w * v).sum()).collect();
                Sample { input: x, target: t }
            })
            .collect();
        // t is exactly linear in x, so the least-squares optimum has zero loss
        let config = NetworkConfig {
            layer_sizes: vec![4, 16, 16, 3],
            epochs: 2000,
            learning_rate: 1e-2,
            ..NetworkConfig::default()
        };
        let ck = train(&samples, &config, "").unwrap();
        let ratio = ck.trace.last().unwrap() / ck.trace.initial().unwrap();
        assert!(ratio < 1e-3, "loss ratio {ratio}");
    }

    #[test]
    fn overfits_ten_samples() {
        let samples = random_samples(10, 50, 50, 2);
        let ck = train(&samples, &NetworkConfig::default(), "").unwrap();
        let ratio = ck.trace.last().unwrap() / ck.trace.initial().unwrap();
        assert!(ratio < 0.01, "loss ratio {ratio}");
        let s = &samples[3];
        let y = predict(&ck, &s.input, false).unwrap();
        for (p, t) in y.iter().zip(&s.target) {
            assert!((p - t).abs() <= 0.01 * t.abs().max(1.0), "{p} vs {t}");
        }
    }

    #[test]
    fn diverging_run_reports_epoch() {
        let samples = random_samples(10, 2, 1, 3);
        let config = NetworkConfig {
            layer_sizes: vec![2, 4, 1],
            activation: Activation::Linear,
            optimizer: OptimizerKind::Sgd,
            learning_rate: 1e6,
            epochs: 200,
            ..NetworkConfig::default()
        };
        assert!(matches!(train(&samples, &config, ""), Err(ModelError::Diverged { .. })));
    }

    fn zero_checkpoint(target_mean: f64) -> ModelCheckpoint {
        let config = NetworkConfig {
            layer_sizes: vec![2, 3, 1],
            epochs: 1,
            ..NetworkConfig::default()
        };
        ModelCheckpoint {
            params: ModelParams::zeros(&config.layer_sizes, config.activation),
            scaler: Scaler {
                input: Standardizer {
                    mean: vec![1.0, -2.0],
                    scale: vec![2.0, 0.5],
                    degenerate: vec![],
                },
                target: Standardizer {
                    mean: vec![target_mean],
                    scale: vec![300.0],
                    degenerate: vec![],
                },
            },
            trace: TrainingTrace { losses: vec![1.0] },
            dataset_fingerprint: String::new(),
            config,
        }
    }

    #[test]
    fn zero_model_predicts_target_mean() {
        let ck = zero_checkpoint(1234.0);
        assert_eq!(predict(&ck, &[1.0, -2.0], false).unwrap(), vec![1234.0]);
    }

    #[test]
    fn clamp_and_negative_outputs() {
        let mut ck = zero_checkpoint(0.0);
        ck.scaler.target.scale = vec![1.0];
        ck.params.layers[1].bias = vec![-120.0];
        assert_eq!(predict(&ck, &[0.0, 0.0], false).unwrap(), vec![-120.0]);
        assert_eq!(predict(&ck, &[0.0, 0.0], true).unwrap(), vec![0.0]);
        assert!(matches!(
            predict(&ck, &[0.0], false),
            Err(ModelError::WidthMismatch { .. })
        ));
    }
}
