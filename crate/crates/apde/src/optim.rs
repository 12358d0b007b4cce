//! Adam with decoupled weight decay and global gradient clipping.
//!
//! The update is the standard bias-corrected Adam step; weight decay is
//! applied directly to the parameters (decoupled, not folded into the
//! gradient), and gradients are rescaled whenever their global L2 norm
//! exceeds `clip_norm`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm ceiling; `inf` disables clipping.
    pub clip_norm: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr: 1e-4,
            weight_decay: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: 1.0,
        }
    }
}

/// First/second-moment state for one parameter vector.
#[derive(Debug, Clone)]
pub struct AdamW {
    cfg: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamW {
    pub fn new(cfg: OptimizerConfig, dim: usize) -> AdamW {
        assert!(cfg.lr > 0.0 && cfg.eps > 0.0, "lr and eps must be positive");
        assert!(
            (0.0..1.0).contains(&cfg.beta1) && (0.0..1.0).contains(&cfg.beta2),
            "betas must lie in [0, 1)"
        );
        AdamW {
            cfg,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
        }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    /// Clip `grad` in place to the configured global norm; returns the norm
    /// observed before clipping.
    pub fn clip(&self, grad: &mut [f64]) -> f64 {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > self.cfg.clip_norm && norm > 0.0 {
            let scale = self.cfg.clip_norm / norm;
            for g in grad.iter_mut() {
                *g *= scale;
            }
        }
        norm
    }

    /// One update step. `grad` should already be clipped via [`Self::clip`].
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * params[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_against_gradient_at_lr() {
        // with bias correction, step 1 moves by lr·sign(g) (eps aside)
        let mut opt = AdamW::new(
            OptimizerConfig {
                lr: 0.1,
                weight_decay: 0.0,
                ..OptimizerConfig::default()
            },
            2,
        );
        let mut p = vec![1.0, -2.0];
        let g = vec![0.5, -0.25];
        opt.update(&mut p, &g);
        assert!((p[0] - (1.0 - 0.1)).abs() < 1e-6, "{}", p[0]);
        assert!((p[1] - (-2.0 + 0.1)).abs() < 1e-6, "{}", p[1]);
    }

    #[test]
    fn decay_is_decoupled_from_gradient() {
        // zero gradient: parameters shrink by exactly lr·wd·p per step
        let mut opt = AdamW::new(
            OptimizerConfig {
                lr: 0.5,
                weight_decay: 0.1,
                ..OptimizerConfig::default()
            },
            1,
        );
        let mut p = vec![2.0];
        opt.update(&mut p, &[0.0]);
        assert!((p[0] - 2.0 * (1.0 - 0.05)).abs() < 1e-12);
    }

    #[test]
    fn clipping_caps_the_global_norm() {
        let opt = AdamW::new(
            OptimizerConfig {
                clip_norm: 1.0,
                ..OptimizerConfig::default()
            },
            3,
        );
        let mut g = vec![3.0, 0.0, 4.0]; // norm 5
        let pre = opt.clip(&mut g);
        assert_eq!(pre, 5.0);
        let post = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((post - 1.0).abs() < 1e-12);
        // direction preserved
        assert!((g[0] / g[2] - 3.0 / 4.0).abs() < 1e-12);

        let mut small = vec![0.1, 0.1];
        opt.clip(&mut small);
        assert_eq!(small, vec![0.1, 0.1], "norms under the cap pass through");
    }

    #[test]
    fn deterministic_sequence() {
        let run = || {
            let mut opt = AdamW::new(OptimizerConfig::default(), 4);
            let mut p = vec![0.3, -0.1, 0.05, 0.9];
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| 2.0 * x + (k as f64) * 1e-3).collect();
                opt.update(&mut p, &g);
            }
            p
        };
        assert_eq!(run(), run());
    }
}
