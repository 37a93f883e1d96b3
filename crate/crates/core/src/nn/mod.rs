//! Dense network substrate: tanh MLPs with hand-written reverse-mode
//! gradients, diagonal Gaussian heads and the Adam update rule.

mod adam;
mod dense;
mod gaussian;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Dense, DenseGrads, DenseNet, Tape};
pub use gaussian::{DiagGaussian, LN_SQRT_2PI};
