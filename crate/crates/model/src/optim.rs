use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::ModelError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    SgdMomentum,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Constant,
    /// Cosine decay to zero over the run, after warmup.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub batch_size: usize,
    /// Steps of linear warmup from zero.
    pub warmup_steps: usize,
    pub schedule: Schedule,
    /// Global gradient-norm ceiling.
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::SgdMomentum,
            lr: 0.01,
            weight_decay: 1e-5,
            momentum: 0.9,
            batch_size: 128,
            warmup_steps: 0,
            schedule: Schedule::Constant,
            clip_norm: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::ConfigInvalid(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight decay must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.clip_norm.is_some_and(|c| !(c > 0.0)) {
            return bad("clip norm must be positive");
        }
        Ok(())
    }

    /// Learning rate at `step` (0-based) of a `total`-step run.
    pub fn lr_at(&self, step: usize, total: usize) -> f64 {
        if step < self.warmup_steps {
            return self.lr * (step + 1) as f64 / self.warmup_steps as f64;
        }
        match self.schedule {
            Schedule::Constant => self.lr,
            Schedule::Cosine => {
                let span = total.saturating_sub(self.warmup_steps).max(1) as f64;
                let t = ((step - self.warmup_steps) as f64 / span).min(1.0);
                0.5 * self.lr * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

/// SGD with momentum and decoupled weight decay:
/// `v ← μ·v + g`, `θ ← θ − lr·v − lr·λ·θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd<T> {
    pub momentum: f64,
    pub weight_decay: f64,
    pub clip_norm: Option<f64>,
    velocity: Vec<T>,
}

impl<T: Real> Sgd<T> {
    pub fn new(cfg: &OptimizerConfig, params: usize) -> Self {
        Sgd {
            momentum: cfg.momentum,
            weight_decay: cfg.weight_decay,
            clip_norm: cfg.clip_norm,
            velocity: vec![T::zero(); params],
        }
    }

    /// Applies one update; returns the gradient norm before clipping.
    pub fn step(&mut self, params: &mut [T], grads: &[T], lr: f64) -> f64 {
        assert_eq!(params.len(), grads.len());
        let norm = grads.iter().map(|g| g.f64() * g.f64()).sum::<f64>().sqrt();
        let clip = match self.clip_norm {
            Some(c) if norm > c => T::of(c / norm),
            _ => T::one(),
        };
        let (mu, lr_t, decay) = (T::of(self.momentum), T::of(lr), T::of(lr * self.weight_decay));
        for ((p, &g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            *v = mu * *v + g * clip;
            *p = *p - lr_t * *v - decay * *p;
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lr_is_identity() {
        let cfg = OptimizerConfig::default();
        let mut sgd = Sgd::<f64>::new(&cfg, 3);
        let mut p = vec![1.0, -2.0, 0.5];
        sgd.step(&mut p, &[0.3, 0.1, -4.0], 0.0);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn momentum_arithmetic() {
        let cfg = OptimizerConfig {
            momentum: 0.5,
            weight_decay: 0.1,
            ..Default::default()
        };
        let mut sgd = Sgd::<f64>::new(&cfg, 1);
        let mut p = vec![1.0];
        sgd.step(&mut p, &[2.0], 0.1);
        assert!((p[0] - (1.0 - 0.2 - 0.01)).abs() < 1e-15);
        sgd.step(&mut p, &[2.0], 0.1);
        let expected = 0.79 - 0.1 * 3.0 - 0.01 * 0.79;
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn validation_and_schedule() {
        let mut cfg = OptimizerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.momentum = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = OptimizerConfig {
            warmup_steps: 4,
            schedule: Schedule::Cosine,
            ..Default::default()
        };
        assert!((cfg.lr_at(0, 14) - 0.0025).abs() < 1e-15);
        assert!((cfg.lr_at(4, 14) - 0.01).abs() < 1e-15);
        assert!((cfg.lr_at(9, 14) - 0.005).abs() < 1e-12);
        assert!(cfg.lr_at(14, 14).abs() < 1e-15);
    }

    #[test]
    fn clipping() {
        let cfg = OptimizerConfig {
            momentum: 0.0,
            weight_decay: 0.0,
            clip_norm: Some(1.0),
            ..Default::default()
        };
        let mut sgd = Sgd::<f64>::new(&cfg, 2);
        let mut p = vec![0.0, 0.0];
        let norm = sgd.step(&mut p, &[3.0, 4.0], 1.0);
        assert_eq!(norm, 5.0);
        assert!((p[0] + 0.6).abs() < 1e-15 && (p[1] + 0.8).abs() < 1e-15);
    }
}
