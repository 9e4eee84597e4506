//! Adam with decoupled weight decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            weight_decay: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One update: `θ ← θ(1 − lr·wd)`, then the bias-corrected moment step.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient".into(),
            layer: None,
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let decay = 1.0 - cfg.lr * weight_decay;
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *p *= decay;
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Adam over a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Adam {
            config,
            states: sizes.iter().map(|&n| AdamState::new(n)).collect(),
        }
    }

    /// `params[i].1` selects whether weight decay applies to tensor `i`.
    pub fn step(&mut self, params: Vec<(&mut [f64], bool)>, grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::Shape("optimizer tensor count mismatch".into()));
        }
        for (((p, decays), g), st) in params.into_iter().zip(grads).zip(self.states.iter_mut()) {
            let wd = if decays { self.config.weight_decay } else { 0.0 };
            adam_step(p, g, st, &self.config, wd)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_is_a_fixed_point() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.5, -1.5, 2.0];
        let mut st = AdamState::new(3);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0; 3], &mut st, &cfg, 0.0).unwrap();
        }
        assert_eq!(p, vec![0.5, -1.5, 2.0]);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let cfg = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let mut p = vec![1.0, 1.0, 1.0];
        let g = [3.0, -0.2, 1e-3];
        let mut st = AdamState::new(3);
        adam_step(&mut p, &g, &mut st, &cfg, 0.0).unwrap();
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + eps)
        for (pi, gi) in p.iter().zip(g) {
            let want = 1.0 - cfg.lr * gi / (gi.abs() + cfg.eps);
            assert!((pi - want).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_alone_shrinks_geometrically() {
        let cfg = AdamConfig {
            lr: 0.1,
            weight_decay: 0.5,
            ..AdamConfig::default()
        };
        let mut p = vec![2.0];
        let mut st = AdamState::new(1);
        for _ in 0..3 {
            adam_step(&mut p, &[0.0], &mut st, &cfg, cfg.weight_decay).unwrap();
        }
        assert!((p[0] - 2.0 * 0.95f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_mismatched() {
        let cfg = AdamConfig::default();
        let mut st = AdamState::new(2);
        assert!(adam_step(&mut [0.0, 0.0], &[f64::NAN, 0.0], &mut st, &cfg, 0.0).is_err());
        assert!(adam_step(&mut [0.0, 0.0], &[0.0], &mut st, &cfg, 0.0).is_err());
    }
}
