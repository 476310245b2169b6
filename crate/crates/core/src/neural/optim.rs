use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// AdamW moments for one parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimState {
    pub config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl OptimState {
    pub fn new(n_params: usize, config: AdamWConfig) -> Self {
        Self {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One AdamW update with decoupled weight decay:
    /// `p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)`.
    pub fn adamw_step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                got: params.len(),
            });
        }
        if grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                got: grads.len(),
            });
        }
        let AdamWConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        self.step += 1;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * *p);
        }
        Ok(())
    }
}

/// Exponential moving average of a parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmaState {
    pub decay: f64,
    shadow: Vec<f64>,
}

impl EmaState {
    pub fn new(initial: &[f64], decay: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&decay) {
            return Err(Error::InvalidArgument(format!(
                "EMA decay must lie in [0, 1], got {decay}"
            )));
        }
        Ok(Self {
            decay,
            shadow: initial.to_vec(),
        })
    }

    pub fn shadow(&self) -> &[f64] {
        &self.shadow
    }

    pub fn ema_update(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.shadow.len() {
            return Err(Error::DimensionMismatch {
                expected: self.shadow.len(),
                got: params.len(),
            });
        }
        let d = self.decay;
        for (s, &p) in self.shadow.iter_mut().zip(params) {
            *s = d * *s + (1.0 - d) * p;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_weight_decay() {
        let cfg = AdamWConfig {
            lr: 0.1,
            weight_decay: 0.01,
            ..Default::default()
        };
        let mut opt = OptimState::new(3, cfg);
        let mut p = vec![1.0, -2.0, 4.0];
        opt.adamw_step(&mut p, &[0.0; 3]).unwrap();
        for (a, b) in p.iter().zip([1.0, -2.0, 4.0]) {
            assert!((a - b * (1.0 - 0.001)).abs() < 1e-15);
        }
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamWConfig {
            lr: 0.05,
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut opt = OptimState::new(1, cfg);
        let mut p = vec![0.0];
        opt.adamw_step(&mut p, &[1.0]).unwrap();
        assert!((p[0] + 0.05).abs() < 1e-9);
    }

    /// Plain scalar Adam written out independently.
    fn scalar_oracle(w0: f64, lr: f64, steps: usize) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut w, mut m, mut v) = (w0, 0.0, 0.0);
        for k in 1..=steps {
            let g = 2.0 * (w - 3.0);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(k as i32));
            let vh = v / (1.0 - b2.powi(k as i32));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        w
    }

    #[test]
    fn quadratic_convergence() {
        let cfg = AdamWConfig {
            lr: 0.1,
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut opt = OptimState::new(1, cfg);
        let mut w = vec![0.0];
        for _ in 0..100 {
            let g = 2.0 * (w[0] - 3.0);
            opt.adamw_step(&mut w, &[g]).unwrap();
        }
        let oracle = scalar_oracle(0.0, 0.1, 100);
        assert!((w[0] - oracle).abs() < 1e-12);
        assert!((w[0] - 3.0).abs() < 0.2, "{}", w[0]);
    }

    #[test]
    fn descends_on_a_convex_quadratic() {
        // f(w) = sum_i a_i (w_i - c_i)^2
        let a = [1.0, 4.0, 0.5, 2.0];
        let c = [1.0, -2.0, 3.0, 0.5];
        let f = |w: &[f64]| {
            w.iter()
                .zip(a)
                .zip(c)
                .map(|((w, a), c)| a * (w - c) * (w - c))
                .sum::<f64>()
        };
        let mut w = vec![0.0; 4];
        let start = f(&w);
        let mut opt = OptimState::new(4, AdamWConfig::default());
        for _ in 0..200 {
            let g: Vec<f64> = w
                .iter()
                .zip(a)
                .zip(c)
                .map(|((w, a), c)| 2.0 * a * (w - c))
                .collect();
            opt.adamw_step(&mut w, &g).unwrap();
        }
        assert!(f(&w) < start);
    }

    #[test]
    fn shape_mismatch() {
        let mut opt = OptimState::new(2, AdamWConfig::default());
        assert!(opt.adamw_step(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(opt.adamw_step(&mut [0.0; 2], &[0.0; 1]).is_err());
    }

    #[test]
    fn ema_updates() {
        let mut ema = EmaState::new(&[0.0], 0.9).unwrap();
        ema.ema_update(&[1.0]).unwrap();
        ema.ema_update(&[1.0]).unwrap();
        assert!((ema.shadow()[0] - 0.19).abs() < 1e-15);

        let mut copy = EmaState::new(&[5.0, 6.0], 0.0).unwrap();
        copy.ema_update(&[1.5, -2.0]).unwrap();
        assert_eq!(copy.shadow(), &[1.5, -2.0]);

        let mut frozen = EmaState::new(&[5.0, 6.0], 1.0).unwrap();
        frozen.ema_update(&[1.5, -2.0]).unwrap();
        assert_eq!(frozen.shadow(), &[5.0, 6.0]);

        assert!(EmaState::new(&[0.0], 1.5).is_err());
        assert!(frozen.ema_update(&[1.0]).is_err());
    }
}
