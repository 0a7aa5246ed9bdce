use serde::{Deserialize, Serialize};

use super::array::NumArray;
use super::param::ParamGroup;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates, one pair per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<NumArray>,
    pub v: Vec<NumArray>,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[ParamGroup]) -> Self {
        Self {
            config,
            m: params.iter().map(|p| NumArray::zeros(p.value.shape())).collect(),
            v: params.iter().map(|p| NumArray::zeros(p.value.shape())).collect(),
            t: 0,
        }
    }
}

/// One Adam update using each group's accumulated `grad`. Groups whose
/// `trainable` flag is false keep their value and moments untouched.
pub fn adam_step(params: &mut [ParamGroup], state: &mut AdamState, trainable: &[bool]) -> Result<()> {
    if params.len() != state.m.len() || params.len() != trainable.len() {
        return Err(Error::Shape(format!(
            "adam: {} groups, {} moment slots, {} mask flags",
            params.len(),
            state.m.len(),
            trainable.len()
        )));
    }
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for (((p, m), v), &train) in params.iter_mut().zip(&mut state.m).zip(&mut state.v).zip(trainable) {
        if !train {
            continue;
        }
        let g = p.grad.data();
        let theta = p.value.data_mut();
        for (((th, mi), vi), &gi) in theta
            .iter_mut()
            .zip(m.data_mut())
            .zip(v.data_mut())
            .zip(g)
        {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *th -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn group(values: &[f64]) -> ParamGroup {
        ParamGroup::new("p", NumArray::from_vec(&[values.len()], values.to_vec()).unwrap())
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = vec![group(&[0.5, -1.0, 2.0])];
        params[0].grad.fill(1.0);
        let mut state = AdamState::new(AdamConfig::default(), &params);
        adam_step(&mut params, &mut state, &[true]).unwrap();
        for (after, before) in params[0].value.data().iter().zip([0.5, -1.0, 2.0]) {
            assert!((before - after - 1e-3).abs() < 1e-9);
        }
        assert_eq!(state.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut params = vec![group(&[0.5, -1.0])];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        adam_step(&mut params, &mut state, &[true]).unwrap();
        assert_eq!(params[0].value.data(), &[0.5, -1.0]);
    }

    #[test]
    fn frozen_groups_untouched() {
        let mut params = vec![group(&[1.0]), group(&[2.0])];
        params[0].grad.fill(0.3);
        params[1].grad.fill(0.3);
        let mut state = AdamState::new(AdamConfig::default(), &params);
        adam_step(&mut params, &mut state, &[true, false]).unwrap();
        assert_eq!(params[1].value.data(), &[2.0]);
        assert_eq!(state.m[1].data(), &[0.0]);
        assert_eq!(state.v[1].data(), &[0.0]);
        assert_ne!(params[0].value.data(), &[1.0]);
    }

    #[test]
    fn ten_steps_match_scalar_reference() {
        let mut rng = crate::rng::seeded(40);
        let init: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let grads: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let cfg = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let mut params = vec![group(&init)];
        let mut state = AdamState::new(cfg, &params);
        for g in &grads {
            params[0].grad.data_mut().copy_from_slice(g);
            adam_step(&mut params, &mut state, &[true]).unwrap();
        }
        for i in 0..4 {
            let (mut th, mut m, mut v) = (init[i], 0.0, 0.0);
            for (t, g) in grads.iter().enumerate() {
                let t = (t + 1) as f64;
                m = 0.9 * m + 0.1 * g[i];
                v = 0.999 * v + 0.001 * g[i] * g[i];
                let mh = m / (1.0 - 0.9f64.powf(t));
                let vh = v / (1.0 - 0.999f64.powf(t));
                th -= 0.01 * mh / (vh.sqrt() + 1e-8);
            }
            assert!((params[0].value.data()[i] - th).abs() < 1e-12);
        }
    }
}
