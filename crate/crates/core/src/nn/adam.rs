use serde::{Deserialize, Serialize};

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
            lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected adaptive-moment state, one moment pair per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

pub fn adam_step(state: &mut OptimizerState, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::dims(
            "adam_step blocks",
            (state.m.len(), 0),
            (params.len(), grads.len()),
        ));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != state.m[k].len() || g.len() != state.m[k].len() {
            return Err(Error::dims("adam_step block", (state.m[k].len(), 0), (p.len(), g.len())));
        }
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_leaves_params() {
        let mut st = OptimizerState::new(AdamConfig::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let before = p.clone();
        adam_step(&mut st, &mut [&mut p], &[&[0.0; 3]]).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_is_sign_scaled_lr() {
        let cfg = AdamConfig::default();
        let mut st = OptimizerState::new(cfg, &[3]);
        let g = [0.5, -3.0, 1e-3];
        let mut p = vec![0.0; 3];
        adam_step(&mut st, &mut [&mut p], &[&g]).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            let expected = -cfg.lr * gi / (gi.abs() + cfg.eps);
            assert!((pi - expected).abs() < 1e-15, "{pi} vs {expected}");
        }
    }

    #[test]
    fn two_identical_steps_match_closed_form() {
        let cfg = AdamConfig::default();
        let mut st = OptimizerState::new(cfg, &[1]);
        let g = 0.2;
        let mut p = vec![0.0];
        adam_step(&mut st, &mut [&mut p], &[&[g]]).unwrap();
        adam_step(&mut st, &mut [&mut p], &[&[g]]).unwrap();
        assert_eq!(st.step, 2);
        let m = (1.0 - cfg.beta1) * g * (1.0 + cfg.beta1);
        let v = (1.0 - cfg.beta2) * g * g * (1.0 + cfg.beta2);
        assert!((st.m[0][0] - m).abs() < 1e-17);
        assert!((st.v[0][0] - v).abs() < 1e-17);
        // m̂ = g and v̂ = g² again, so each step moves by lr·g/(|g|+ε).
        let step = cfg.lr * g / (g + cfg.eps);
        assert!((p[0] + 2.0 * step).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let mut st = OptimizerState::new(AdamConfig::default(), &[2]);
        let mut p = vec![0.0; 3];
        assert!(adam_step(&mut st, &mut [&mut p], &[&[0.0; 3]]).is_err());
    }
}
