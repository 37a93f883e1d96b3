use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{Error, Result};

/// ½·ln(2π).
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian. The scale is kept as log-σ so σ = exp(log σ) is
/// always strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    mu: Array1<f64>,
    log_sigma: Array1<f64>,
}

impl DiagGaussian {
    pub fn new(mu: Array1<f64>, log_sigma: Array1<f64>) -> Result<Self> {
        if mu.len() != log_sigma.len() {
            return Err(Error::dim("gaussian log-sigma", mu.len(), log_sigma.len()));
        }
        if !mu.iter().chain(log_sigma.iter()).all(|v| v.is_finite()) {
            return Err(Error::Contract("non-finite gaussian parameter".into()));
        }
        Ok(Self { mu, log_sigma })
    }

    /// Builds from an explicit σ, which must be strictly positive.
    pub fn from_sigma(mu: Array1<f64>, sigma: Array1<f64>) -> Result<Self> {
        if sigma.iter().any(|&s| s.is_nan() || s <= 0.0) {
            return Err(Error::Contract("sigma must be strictly positive".into()));
        }
        Self::new(mu, sigma.mapv(f64::ln))
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mu: Array1::zeros(dim),
            log_sigma: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mu
    }

    pub fn log_sigma(&self) -> &Array1<f64> {
        &self.log_sigma
    }

    pub fn sigma(&self) -> Array1<f64> {
        self.log_sigma.mapv(f64::exp)
    }

    /// Σ_i [ −½ln(2π) − ln σ_i − (x_i−μ_i)²/(2σ_i²) ]
    pub fn log_prob(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::dim("gaussian sample", self.dim(), x.len()));
        }
        let mut total = 0.0;
        Zip::from(&x)
            .and(&self.mu)
            .and(&self.log_sigma)
            .for_each(|&x, &mu, &ls| {
                let z = (x - mu) * (-ls).exp();
                total += -LN_SQRT_2PI - ls - 0.5 * z * z;
            });
        Ok(total)
    }

    /// KL(self ‖ N(0, I)) = ½ Σ_i (μ_i² + σ_i² − 1 − 2 ln σ_i).
    pub fn kl_to_standard_normal(&self) -> f64 {
        let mut total = 0.0;
        Zip::from(&self.mu)
            .and(&self.log_sigma)
            .for_each(|&mu, &ls| total += mu * mu + (2.0 * ls).exp() - 1.0 - 2.0 * ls);
        // Rounding can leave a tiny negative residue near the optimum.
        (0.5 * total).max(0.0)
    }

    /// μ + σ ⊙ noise, with `noise` a caller-supplied standard-normal draw.
    pub fn reparameterize(&self, noise: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if noise.len() != self.dim() {
            return Err(Error::dim("reparameterization noise", self.dim(), noise.len()));
        }
        let mut out = self.mu.clone();
        Zip::from(&mut out)
            .and(&noise)
            .and(&self.log_sigma)
            .for_each(|o, &e, &ls| *o += ls.exp() * e);
        Ok(out)
    }
}
