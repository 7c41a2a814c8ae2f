use super::{ModelParams, OptimizerKind};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// Stateful update rule applied once per epoch.
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        step: i32,
        m: ModelParams,
        v: ModelParams,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ModelParams) -> Optimizer {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                step: 0,
                m: params.zeros_like(),
                v: params.zeros_like(),
            },
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                    for (p, g) in p.iter_mut().zip(g) {
                        *p -= *lr * g;
                    }
                }
            }
            Optimizer::Adam { lr, step, m, v } => {
                *step += 1;
                let c1 = 1.0 - BETA1.powi(*step);
                let c2 = 1.0 - BETA2.powi(*step);
                let tensors = params
                    .tensors_mut()
                    .into_iter()
                    .zip(grads.tensors())
                    .zip(m.tensors_mut().into_iter().zip(v.tensors_mut()));
                for ((p, g), (m, v)) in tensors {
                    for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = BETA1 * *m + (1.0 - BETA1) * g;
                        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        *p -= *lr * m_hat / (v_hat.sqrt() + EPSILON);
                    }
                }
            }
        }
    }
}
