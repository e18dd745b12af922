//! Standard normal distribution functions.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// `Φ(z)`.
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `1 − Φ(z)`, evaluated without cancellation in the upper tail.
pub fn upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// The upper `alpha` quantile `z_α`, i.e. `1 − Φ(z_α) = α`.
pub fn upper_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "level must lie in (0, 1), got {alpha}"
        )));
    }
    let standard = Normal::standard();
    Ok(-standard.inverse_cdf(alpha))
}
