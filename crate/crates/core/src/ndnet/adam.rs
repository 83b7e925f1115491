use serde::{Deserialize, Serialize};

use super::tensor::{ParamSet, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        AdamState {
            config,
            step: 0,
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }

    /// One bias-corrected update of every parameter.
    pub fn update(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam: {} parameters, {} gradients, {} moment tensors",
                params.len(),
                grads.len(),
                self.first.len()
            )));
        }
        for (id, g) in params.ids().zip(grads) {
            let p = params.get(id);
            if p.shape() != g.shape() || p.shape() != self.first[id.0].shape() {
                return Err(Error::Shape(format!(
                    "adam: `{}` has shape {:?}, gradient {:?}",
                    params.name(id),
                    p.shape(),
                    g.shape()
                )));
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let correct1 = 1.0 - beta1.powi(t);
        let correct2 = 1.0 - beta2.powi(t);

        for (id, g) in params.ids().zip(grads) {
            let m = self.first[id.0].data_mut();
            let v = self.second[id.0].data_mut();
            let w = params.get_mut(id).data_mut();
            for (((w, m), v), &g) in w.iter_mut().zip(m).zip(v).zip(g.data()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / correct1;
                let v_hat = *v / correct2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::update`].
pub fn adam_step(params: &mut ParamSet, grads: &[Tensor], state: &mut AdamState) -> Result<()> {
    state.update(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(w: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.add("w", Tensor::vector(vec![w]));
        ps
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02, 1e4] {
            let mut ps = scalar_params(1.0);
            let mut state = AdamState::new(AdamConfig::default(), &ps);
            adam_step(&mut ps, &[Tensor::vector(vec![g])], &mut state).unwrap();
            let delta = ps.tensors()[0].data()[0] - 1.0;
            assert!((delta + 0.001 * g.signum()).abs() < 1e-9, "g = {g}: {delta}");
            assert_eq!(state.step, 1);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut ps = scalar_params(0.75);
        let mut state = AdamState::new(AdamConfig::default(), &ps);
        for _ in 0..50 {
            adam_step(&mut ps, &[Tensor::vector(vec![0.0])], &mut state).unwrap();
        }
        assert_eq!(ps.tensors()[0].data()[0], 0.75);
    }

    /// Independent scalar transcription of the update equations.
    fn reference_adam(w0: f64, steps: usize) -> Vec<f64> {
        let (lr, b1, b2, eps) = (0.001, 0.9, 0.999, 1e-8);
        let (mut w, mut m, mut v) = (w0, 0.0, 0.0);
        let mut out = vec![w];
        for t in 1..=steps {
            let g = 2.0 * w;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - f64::powi(b1, t as i32));
            let vh = v / (1.0 - f64::powi(b2, t as i32));
            w -= lr * mh / (vh.sqrt() + eps);
            out.push(w);
        }
        out
    }

    #[test]
    fn quadratic_descends_monotonically() {
        let reference = reference_adam(1.0, 100);
        let mut ps = scalar_params(1.0);
        let mut state = AdamState::new(AdamConfig::default(), &ps);
        let mut trajectory = vec![1.0];
        for _ in 0..100 {
            let w = ps.tensors()[0].data()[0];
            adam_step(&mut ps, &[Tensor::vector(vec![2.0 * w])], &mut state).unwrap();
            trajectory.push(ps.tensors()[0].data()[0]);
        }
        for pair in trajectory.windows(2) {
            assert!(pair[1].abs() < pair[0].abs());
        }
        for (a, b) in trajectory.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_inputs_are_bitwise_deterministic() {
        let run = || {
            let mut ps = scalar_params(0.3);
            let mut state = AdamState::new(AdamConfig::default(), &ps);
            for k in 0..20 {
                let g = (k as f64 * 0.37).sin();
                adam_step(&mut ps, &[Tensor::vector(vec![g])], &mut state).unwrap();
            }
            (ps, state)
        };
        let (a, sa) = run();
        let (b, sb) = run();
        assert_eq!(a.tensors()[0].data()[0].to_bits(), b.tensors()[0].data()[0].to_bits());
        assert_eq!(sa, sb);
    }

    #[test]
    fn mismatched_gradients_are_rejected() {
        let mut ps = scalar_params(1.0);
        let mut state = AdamState::new(AdamConfig::default(), &ps);
        let err = adam_step(&mut ps, &[Tensor::vector(vec![1.0, 2.0])], &mut state);
        assert!(matches!(err, Err(Error::Shape(_))));
        assert!(adam_step(&mut ps, &[], &mut state).is_err());
        assert_eq!(state.step, 0);
    }
}
