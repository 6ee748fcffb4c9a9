use serde::{Deserialize, Serialize};

use super::model::Param;
use super::tensor::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Per-parameter optimizer state.
#[derive(Debug, Clone)]
pub enum Optimizer<T> {
    Sgd,
    Adam {
        step: i32,
        m: Vec<Vec<T>>,
        v: Vec<Vec<T>>,
    },
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, params: &[Param<T>]) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam {
                step: 0,
                m: params
                    .iter()
                    .map(|p| vec![T::zero(); p.values.len()])
                    .collect(),
                v: params
                    .iter()
                    .map(|p| vec![T::zero(); p.values.len()])
                    .collect(),
            },
        }
    }

    pub fn step(&mut self, params: &mut [Param<T>], grads: &[Vec<T>], lr: f64) {
        match self {
            Optimizer::Sgd => {
                let lr = T::of(lr);
                for (p, g) in params.iter_mut().zip(grads) {
                    for (w, &gv) in p.values.iter_mut().zip(g) {
                        *w = *w - lr * gv;
                    }
                }
            }
            Optimizer::Adam { step, m, v } => {
                *step += 1;
                let b1 = T::of(BETA1);
                let b2 = T::of(BETA2);
                let one = T::one();
                let c1 = T::of(1.0 - BETA1.powi(*step));
                let c2 = T::of(1.0 - BETA2.powi(*step));
                let lr = T::of(lr);
                let eps = T::of(ADAM_EPS);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(m.iter_mut().zip(v.iter_mut()))
                {
                    for i in 0..p.values.len() {
                        let gv = g[i];
                        m[i] = b1 * m[i] + (one - b1) * gv;
                        v[i] = b2 * v[i] + (one - b2) * gv * gv;
                        p.values[i] = p.values[i] - lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(values: Vec<f64>) -> Vec<Param<f64>> {
        vec![Param {
            name: "w".into(),
            shape: vec![values.len()],
            values,
        }]
    }

    #[test]
    fn sgd_step() {
        let mut p = param(vec![1.0, 2.0]);
        Optimizer::new(OptimizerKind::Sgd, &p).step(&mut p, &[vec![0.5, -1.0]], 0.1);
        assert_eq!(p[0].values, vec![0.95, 2.1]);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // With bias correction the first Adam step is lr * sign(g).
        let mut p = param(vec![1.0, 1.0]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, &p);
        opt.step(&mut p, &[vec![3.0, -0.2]], 0.01);
        assert!((p[0].values[0] - 0.99).abs() < 1e-9);
        assert!((p[0].values[1] - 1.01).abs() < 1e-7);
    }

    #[test]
    fn zero_lr_is_noop() {
        let mut p = param(vec![1.0, -4.0]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, &p);
        opt.step(&mut p, &[vec![3.0, 1.0]], 0.0);
        assert_eq!(p[0].values, vec![1.0, -4.0]);
    }
}
