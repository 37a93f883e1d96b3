use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for a list of flat parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: impl IntoIterator<Item = usize>) -> Self {
        let (first, second) = shapes
            .into_iter()
            .map(|n| (vec![0.0; n], vec![0.0; n]))
            .unzip();
        Self {
            config,
            step: 0,
            first,
            second,
        }
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }

    /// One bias-corrected Adam update, in place.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::dim("adam tensor count", self.first.len(), params.len()));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::dim("adam tensor", m.len(), p.len().max(g.len())));
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
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut adam = AdamState::new(AdamConfig::default(), [2]);
        let mut w = vec![1.0, -2.0];
        adam.step(&mut [&mut w], &[&[0.5, 0.5]]).unwrap();
        let before = w.clone();
        let m_before = adam.first_moments()[0][0];
        adam.step(&mut [&mut w], &[&[0.0, 0.0]]).unwrap();
        // The bias-corrected first moment still pushes a little after one
        // real step; what must hold is moment decay.
        assert!(adam.first_moments()[0][0].abs() < m_before.abs());

        let mut fresh = AdamState::new(AdamConfig::default(), [2]);
        let mut w2 = before.clone();
        fresh.step(&mut [&mut w2], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(w2, before);
        assert_eq!(fresh.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient() {
        let lr = 1e-4;
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(lr), [3]);
        let mut w = vec![0.0; 3];
        adam.step(&mut [&mut w], &[&[3.0, -0.02, 150.0]]).unwrap();
        for (wi, gi) in w.iter().zip([3.0, -0.02, 150.0f64]) {
            assert!((wi + lr * gi.signum()).abs() < 1e-9, "{wi}");
        }
    }

    #[test]
    fn scalar_quadratic_converges() {
        // f(w) = (w − 3)², ∇ = 2(w − 3)
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(0.1), [1]);
        let mut w = vec![0.0];
        let mut gaps = Vec::new();
        for _ in 0..100 {
            let g = 2.0 * (w[0] - 3.0);
            adam.step(&mut [&mut w], &[&[g]]).unwrap();
            gaps.push((w[0] - 3.0f64).abs());
        }
        // Straight approach while far away, then a damped oscillation.
        assert!(gaps[..38].windows(2).all(|p| p[1] < p[0]));
        let envelope = |r: std::ops::Range<usize>| gaps[r].iter().cloned().fold(0.0, f64::max);
        assert!(envelope(80..100) < envelope(40..60));
        assert!(envelope(40..60) < 0.2);
        assert!(gaps[99] < 0.05, "{}", gaps[99]);
    }

    #[test]
    fn shape_mismatch() {
        let mut adam = AdamState::new(AdamConfig::default(), [2]);
        let mut w = vec![0.0; 3];
        assert!(adam.step(&mut [&mut w], &[&[0.0; 3]]).is_err());
    }
}
