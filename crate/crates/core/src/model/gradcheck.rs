//! Analytic gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::network::{init_params, loss_and_grad, ModelParams, Trace};
use super::{Activation, LossKind, ModelError, NetworkConfig};
use crate::dataset::Sample;

pub const DEFAULT_STEP: f64 = 1e-5;
const BATCH: usize = 4;
const WEIGHT_PROBES: usize = 6;
const BIAS_PROBES: usize = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Probes whose perturbation crossed a ReLU or absolute-value kink,
    /// where the finite difference does not estimate the derivative.
    pub skipped: usize,
}

impl GradCheckReport {
    fn merge(&mut self, other: GradCheckReport) {
        self.max_relative_error = self.max_relative_error.max(other.max_relative_error);
        self.checked += other.checked;
        self.skipped += other.skipped;
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Which side of every kink each sample sits on.
fn kink_pattern(params: &ModelParams, loss: LossKind, batch: &[Sample]) -> Vec<bool> {
    let mut out = Vec::new();
    let mut trace = Trace::new(params);
    let hidden = params.layers.len() - 1;
    for s in batch {
        trace.run(params, &s.input);
        if params.activation == Activation::Relu {
            for pre in &trace.pre[..hidden] {
                out.extend(pre.iter().map(|z| *z > 0.0));
            }
        }
        if loss == LossKind::Mae {
            out.extend(trace.output().iter().zip(&s.target).map(|(y, t)| y > t));
        }
    }
    out
}

/// Compares analytic and numeric derivatives at the given
/// `(tensor, index)` probes, tensors numbered as in
/// [`ModelParams::tensors`].
pub fn compare_at(
    params: &ModelParams,
    loss: LossKind,
    batch: &[Sample],
    probes: &[(usize, usize)],
    h: f64,
) -> Result<GradCheckReport, ModelError> {
    let (_, grads) = loss_and_grad(params, loss, batch)?;
    let analytic = grads.tensors();
    let base_pattern = kink_pattern(params, loss, batch);
    let mut report = GradCheckReport::default();
    let mut shifted = params.clone();
    for &(t, i) in probes {
        let original = params.tensors()[t][i];
        let mut eval = |value: f64| -> Result<(f64, bool), ModelError> {
            shifted.tensors_mut()[t][i] = value;
            let l = loss_and_grad(&shifted, loss, batch)?.0;
            let same = kink_pattern(&shifted, loss, batch) == base_pattern;
            Ok((l, same))
        };
        let (plus, same_plus) = eval(original + h)?;
        let (minus, same_minus) = eval(original - h)?;
        shifted.tensors_mut()[t][i] = original;
        if !(same_plus && same_minus) {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        report.checked += 1;
        report.max_relative_error = report
            .max_relative_error
            .max(relative_error(analytic[t][i], numeric));
    }
    Ok(report)
}

/// Random probes: a few weights and biases from every layer.
fn draw_probes(params: &ModelParams, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut probes = Vec::new();
    for (t, tensor) in params.tensors().iter().enumerate() {
        let n = if t % 2 == 0 { WEIGHT_PROBES } else { BIAS_PROBES };
        probes.extend((0..n).map(|_| (t, rng.gen_range(0..tensor.len()))));
    }
    probes
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Repeats the comparison over `trials` random parameter sets and batches,
/// seeded from `config.seed`.
pub fn grad_check_with_step(
    config: &NetworkConfig,
    trials: usize,
    h: f64,
) -> Result<GradCheckReport, ModelError> {
    config.validate()?;
    if trials == 0 {
        return Err(ModelError::InvalidConfig("grad check needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = GradCheckReport::default();
    for _ in 0..trials {
        let mut params = init_params(&NetworkConfig {
            seed: rng.gen(),
            ..config.clone()
        })?;
        for layer in &mut params.layers {
            for b in &mut layer.bias {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        let batch: Vec<Sample> = (0..BATCH)
            .map(|_| Sample {
                input: normal_vec(&mut rng, config.input_width()),
                target: normal_vec(&mut rng, config.output_width()),
            })
            .collect();
        let probes = draw_probes(&params, &mut rng);
        report.merge(compare_at(&params, config.loss, &batch, &probes, h)?);
    }
    Ok(report)
}

pub fn grad_check(config: &NetworkConfig, trials: usize) -> Result<GradCheckReport, ModelError> {
    grad_check_with_step(config, trials, DEFAULT_STEP)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(activation: Activation, loss: LossKind) -> NetworkConfig {
        NetworkConfig {
            layer_sizes: vec![5, 7, 6, 4],
            activation,
            loss,
            seed: 17,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn small_configs_agree() {
        for a in [Activation::Relu, Activation::Tanh, Activation::Linear] {
            let r = grad_check(&small(a, LossKind::Mse), 20).unwrap();
            assert!(r.max_relative_error <= 1e-4, "{a}: {r:?}");
            assert!(r.checked > 0);
        }
        // sign cancellation leaves some MAE gradients near 1e-8, below the
        // rounding noise of a 1e-5 central difference
        let r = grad_check_with_step(&small(Activation::Tanh, LossKind::Mae), 20, 1e-3).unwrap();
        assert!(r.max_relative_error <= 1e-4, "mae: {r:?}");
    }

    #[test]
    fn zero_params_give_finite_error() {
        let params = ModelParams::zeros(&[3, 4, 2], Activation::Relu);
        let batch = vec![Sample {
            input: vec![1.0, 2.0, 3.0],
            target: vec![0.5, -0.5],
        }];
        let probes: Vec<(usize, usize)> = (0..4).map(|t| (t, 0)).collect();
        let r = compare_at(&params, LossKind::Mse, &batch, &probes, DEFAULT_STEP).unwrap();
        assert!(r.max_relative_error.is_finite());
    }

    #[test]
    fn larger_step_gives_larger_error() {
        // tanh is smooth, so the central difference has a genuine h^2 term
        let c = small(Activation::Tanh, LossKind::Mse);
        let fine = grad_check_with_step(&c, 10, 1e-5).unwrap();
        let coarse = grad_check_with_step(&c, 10, 1e-2).unwrap();
        assert!(coarse.max_relative_error > fine.max_relative_error, "{fine:?} {coarse:?}");
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(grad_check(&NetworkConfig::default(), 0).is_err());
    }
}
