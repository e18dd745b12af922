//! Closed-form power of John's test and the quasi-LRT under a covariance
//! alternative, through the functionals
//!
//! ```text
//! γ = tr Σ / p,   θ = tr Σ² / p,   ω = Σᵢ Σᵢᵢ² / p.
//! ```
//!
//! All functionals are evaluated at the finite `p` of the experiment.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::normal;

/// Predictions are flagged once `n³/p` exceeds this.
pub const REGIME_LIMIT: f64 = 1000.0;

/// Population covariance `Σ`; the dimension `p` is supplied alongside.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    /// `σ² I`.
    ScaledIdentity { sigma2: f64 },
    /// Diagonal with `round(δp)` entries equal to `b` and the rest equal to `a`.
    TwoPointDiagonal { a: f64, b: f64, delta: f64 },
    ExplicitDiagonal(Vec<f64>),
    /// Symmetric positive definite `p x p` matrix.
    ExplicitSpd(DMatrix<f64>),
}

impl SigmaSpec {
    /// The identity covariance.
    pub fn identity() -> Self {
        Self::ScaledIdentity { sigma2: 1.0 }
    }

    /// Number of entries equal to `b` in a two-point diagonal.
    pub fn two_point_count(delta: f64, p: usize) -> usize {
        (delta * p as f64).round() as usize
    }

    /// Checks positivity and shape against `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(Error::InvalidParameter("p must be positive".into()));
        }
        let positive = |index: usize, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::NonPositiveDiagonal { index, value })
            }
        };
        match self {
            Self::ScaledIdentity { sigma2 } => positive(0, *sigma2),
            Self::TwoPointDiagonal { a, b, delta } => {
                if !(0.0..=1.0).contains(delta) {
                    return Err(Error::InvalidParameter(format!(
                        "two-point proportion must lie in [0, 1], got {delta}"
                    )));
                }
                positive(0, *a)?;
                positive(1, *b)
            }
            Self::ExplicitDiagonal(d) => {
                if d.len() != p {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal has {} entries, expected p = {p}",
                        d.len()
                    )));
                }
                d.iter().enumerate().try_for_each(|(i, &v)| positive(i, v))
            }
            Self::ExplicitSpd(m) => {
                if m.nrows() != p || m.ncols() != p {
                    return Err(Error::InvalidParameter(format!(
                        "covariance is {}x{}, expected {p}x{p}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                (0..p).try_for_each(|i| positive(i, m[(i, i)]))
            }
        }
    }

    /// The diagonal of `Σ` at dimension `p`, or `None` for a full matrix.
    pub fn diagonal(&self, p: usize) -> Result<Option<Vec<f64>>> {
        self.validate(p)?;
        Ok(match self {
            Self::ScaledIdentity { sigma2 } => Some(vec![*sigma2; p]),
            Self::TwoPointDiagonal { a, b, delta } => {
                let k = Self::two_point_count(*delta, p);
                Some((0..p).map(|i| if i < k { *b } else { *a }).collect())
            }
            Self::ExplicitDiagonal(d) => Some(d.clone()),
            Self::ExplicitSpd(_) => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaFunctionals {
    pub gamma: f64,
    pub theta: f64,
    pub omega: f64,
}

impl SigmaFunctionals {
    /// `σ² I`: `γ = σ²`, `θ = ω = σ⁴`.
    pub fn scaled_identity(sigma2: f64) -> Self {
        let s4 = sigma2 * sigma2;
        Self {
            gamma: sigma2,
            theta: s4,
            omega: s4,
        }
    }

    /// Scales `Σ` by `c`.
    pub fn scaled(self, c: f64) -> Self {
        Self {
            gamma: c * self.gamma,
            theta: c * c * self.theta,
            omega: c * c * self.omega,
        }
    }
}

/// Exact finite-`p` functionals of `spec`.
pub fn functionals(spec: &SigmaSpec, p: usize) -> Result<SigmaFunctionals> {
    if let SigmaSpec::ScaledIdentity { sigma2 } = spec {
        spec.validate(p)?;
        return Ok(SigmaFunctionals::scaled_identity(*sigma2));
    }
    let pf = p as f64;
    match spec.diagonal(p)? {
        Some(d) => {
            let gamma = d.iter().sum::<f64>() / pf;
            let theta = d.iter().map(|v| v * v).sum::<f64>() / pf;
            Ok(SigmaFunctionals {
                gamma,
                theta,
                omega: theta,
            })
        }
        None => {
            let SigmaSpec::ExplicitSpd(m) = spec else {
                unreachable!("only full matrices lack a diagonal form")
            };
            let gamma = m.trace() / pf;
            let theta = m.norm_squared() / pf;
            let omega = m.diagonal().iter().map(|v| v * v).sum::<f64>() / pf;
            Ok(SigmaFunctionals {
                gamma,
                theta,
                omega,
            })
        }
    }
}

/// Location and spread of a statistic's alternative limit: the statistic
/// minus `center` is asymptotically `N(mean, sd²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltParams {
    pub center: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPrediction {
    pub power: f64,
    /// Set when `n³/p > 1000`, outside the regime the limits describe.
    pub outside_regime: bool,
}

fn check(f: &SigmaFunctionals, nu4: f64) -> Result<()> {
    if !(f.gamma > 0.0 && f.gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {}",
            f.gamma
        )));
    }
    if !(f.theta > 0.0 && f.theta.is_finite() && f.omega.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive, got {}",
            f.theta
        )));
    }
    if !(nu4.is_finite() && nu4 >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nu4 must be a finite number >= 1, got {nu4}"
        )));
    }
    Ok(())
}

fn outside_regime(n: usize, p: usize) -> bool {
    let n = n as f64;
    n * n * n / p as f64 > REGIME_LIMIT
}

/// Alternative limit of `n·U − p` (John).
///
/// Center `(θ/γ² − 1) n`, mean `(θ + ω(ν₄ − 3))/γ²`, sd `2θ/γ²`.
pub fn john_alt_params(f: &SigmaFunctionals, nu4: f64, n: usize) -> Result<AltParams> {
    check(f, nu4)?;
    let g2 = f.gamma * f.gamma;
    Ok(AltParams {
        center: (f.theta / g2 - 1.0) * n as f64,
        mean: (f.theta + f.omega * (nu4 - 3.0)) / g2,
        sd: 2.0 * f.theta / g2,
    })
}

/// Predicted power of John's test at level `alpha`.
pub fn john_power(
    f: &SigmaFunctionals,
    nu4: f64,
    n: usize,
    p: usize,
    alpha: f64,
) -> Result<PowerPrediction> {
    check(f, nu4)?;
    let z_alpha = normal::upper_quantile(alpha)?;
    let (g2, t, w) = (f.gamma * f.gamma, f.theta, f.omega);
    let arg = g2 / t * z_alpha
        + (g2 * (nu4 - 2.0) - t - w * (nu4 - 3.0)) / (2.0 * t)
        + (g2 - t) * n as f64 / (2.0 * t);
    Ok(PowerPrediction {
        power: normal::upper_tail(arg),
        outside_regime: outside_regime(n, p),
    })
}

/// Alternative limit of the quasi-LRT statistic `𝓛ₙ`.
///
/// Center `(θ/2γ²) n + (θ²/2γ⁴ − θ√θ/3γ³) n²/p`,
/// mean `θ/2γ² + ω(ν₄ − 3)/2γ²`, sd `θ/γ²`.
pub fn qlrt_alt_params(f: &SigmaFunctionals, nu4: f64, n: usize, p: usize) -> Result<AltParams> {
    check(f, nu4)?;
    let (g, t, w) = (f.gamma, f.theta, f.omega);
    let g2 = g * g;
    let n = n as f64;
    let n2p = n * n / p as f64;
    Ok(AltParams {
        center: t / (2.0 * g2) * n + (t * t / (2.0 * g2 * g2) - t * t.sqrt() / (3.0 * g2 * g)) * n2p,
        mean: t / (2.0 * g2) + w * (nu4 - 3.0) / (2.0 * g2),
        sd: t / g2,
    })
}

/// Predicted power of the quasi-LRT at level `alpha`.
pub fn qlrt_power(
    f: &SigmaFunctionals,
    nu4: f64,
    n: usize,
    p: usize,
    alpha: f64,
) -> Result<PowerPrediction> {
    check(f, nu4)?;
    let z_alpha = normal::upper_quantile(alpha)?;
    let (g, t, w) = (f.gamma, f.theta, f.omega);
    let g2 = g * g;
    let nf = n as f64;
    let n2p = nf * nf / p as f64;
    let arg = g2 / t * z_alpha
        + (g2 - t) / (2.0 * t) * nf
        + (g2 / (6.0 * t) - t / (2.0 * g2) + t.sqrt() / (3.0 * g)) * n2p
        + (g2 * (nu4 - 2.0) - t - w * (nu4 - 3.0)) / (2.0 * t);
    Ok(PowerPrediction {
        power: normal::upper_tail(arg),
        outside_regime: outside_regime(n, p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_point(delta: f64) -> SigmaSpec {
        SigmaSpec::TwoPointDiagonal {
            a: 0.5,
            b: 1.0,
            delta,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn functionals_of_scenarios() {
        let f = functionals(&SigmaSpec::identity(), 10).unwrap();
        assert_eq!((f.gamma, f.theta, f.omega), (1.0, 1.0, 1.0));

        let f = functionals(&two_point(0.5), 2400).unwrap();
        assert!(close(f.gamma, 0.75, 1e-15));
        assert!(close(f.theta, 0.625, 1e-15));
        assert_eq!(f.omega, f.theta);

        let f = functionals(&two_point(0.75), 2400).unwrap();
        assert!(close(f.gamma, 0.875, 1e-15));
        assert!(close(f.theta, 0.8125, 1e-15));

        let f = functionals(&two_point(0.1), 2400).unwrap();
        assert!(close(f.gamma, 0.55, 1e-15));
        assert!(close(f.theta, 0.325, 1e-15));
    }

    #[test]
    fn explicit_spd_uses_frobenius_norm() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let f = functionals(&SigmaSpec::ExplicitSpd(m), 2).unwrap();
        assert_eq!(f.gamma, 2.0);
        assert_eq!(f.theta, 5.0);
        assert_eq!(f.omega, 4.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            functionals(&SigmaSpec::ExplicitDiagonal(vec![1.0, 0.0]), 2),
            Err(Error::NonPositiveDiagonal { index: 1, .. })
        ));
        assert!(functionals(&SigmaSpec::ExplicitDiagonal(vec![1.0]), 2).is_err());
        assert!(functionals(&two_point(1.5), 2).is_err());
        assert!(functionals(&SigmaSpec::ScaledIdentity { sigma2: -1.0 }, 2).is_err());
    }

    #[test]
    fn john_params_by_hand() {
        let id = SigmaFunctionals::scaled_identity(3.0);
        let a = john_alt_params(&id, 4.5, 64).unwrap();
        assert!(close(a.center, 0.0, 1e-12));
        assert!(close(a.mean, 2.5, 1e-12));
        assert!(close(a.sd, 2.0, 1e-12));

        let f = functionals(&two_point(0.5), 2400).unwrap();
        let a = john_alt_params(&f, 3.0, 64).unwrap();
        assert!(close(a.center, (0.625 / 0.5625 - 1.0) * 64.0, 1e-12));
        assert!(close(a.mean, 0.625 / 0.5625, 1e-12));
        assert!(close(a.sd, 2.0 * 0.625 / 0.5625, 1e-12));
        let a = john_alt_params(&f, 4.5, 64).unwrap();
        assert!(close(a.mean, (0.625 + 0.625 * 1.5) / 0.5625, 1e-12));
    }

    #[test]
    fn qlrt_params_by_hand() {
        let (n, p) = (64usize, 2400usize);
        let n2p = 4096.0 / 2400.0;
        let id = SigmaFunctionals::scaled_identity(1.0);
        let a = qlrt_alt_params(&id, 4.5, n, p).unwrap();
        assert!(close(a.center, 32.0 + n2p / 6.0, 1e-12));
        assert!(close(a.mean, 1.25, 1e-12));
        assert!(close(a.sd, 1.0, 1e-12));

        let f = functionals(&two_point(0.5), p).unwrap();
        let a = qlrt_alt_params(&f, 3.0, n, p).unwrap();
        let expected = 0.625 / 0.5625 * 32.0
            + (0.625f64.powi(2) / (2.0 * 0.31640625) - 0.625f64.powf(1.5) / (3.0 * 0.421875)) * n2p;
        assert!(close(a.center, expected, 1e-12));
    }

    #[test]
    fn power_is_self_consistent_with_alt_params() {
        // 1 − Φ((critical − center − mean)/sd) with the null critical value
        let (n, p, nu4, alpha) = (64usize, 2400usize, 4.5, 0.05);
        let f = functionals(&two_point(0.3), p).unwrap();
        let z = normal::upper_quantile(alpha).unwrap();
        let nf = n as f64;

        let a = john_alt_params(&f, nu4, n).unwrap();
        let crit = 2.0 * z + nu4 - 2.0;
        let direct = normal::upper_tail((crit - a.center - a.mean) / a.sd);
        assert!(close(john_power(&f, nu4, n, p, alpha).unwrap().power, direct, 1e-12));

        let a = qlrt_alt_params(&f, nu4, n, p).unwrap();
        let crit = z + nf / 2.0 + nf * nf / (6.0 * p as f64) + (nu4 - 2.0) / 2.0;
        let direct = normal::upper_tail((crit - a.center - a.mean) / a.sd);
        assert!(close(qlrt_power(&f, nu4, n, p, alpha).unwrap().power, direct, 1e-12));
    }

    #[test]
    fn regime_flag() {
        let f = SigmaFunctionals::scaled_identity(1.0);
        assert!(!john_power(&f, 3.0, 64, 2400, 0.05).unwrap().outside_regime);
        assert!(qlrt_power(&f, 3.0, 64, 200, 0.05).unwrap().outside_regime);
    }

    #[test]
    fn monotone_in_n_for_power_one() {
        let p = 2400;
        let f = functionals(&two_point(0.5), p).unwrap();
        for power in [john_power, qlrt_power] {
            let b: Vec<f64> = [16, 64, 256]
                .iter()
                .map(|&n| power(&f, 3.0, n, p, 0.05).unwrap().power)
                .collect();
            assert!(b[0] < b[1] && b[1] < b[2], "{b:?}");
        }
    }

    proptest! {
        #[test]
        fn null_reduction(sigma2 in 1e-3f64..1e3, n in 2usize..512, p in 2usize..100_000,
                          nu4 in 1.0f64..10.0, alpha in 0.001f64..0.5) {
            let f = SigmaFunctionals::scaled_identity(sigma2);
            prop_assert!(close(john_power(&f, nu4, n, p, alpha).unwrap().power, alpha, 1e-12));
            prop_assert!(close(qlrt_power(&f, nu4, n, p, alpha).unwrap().power, alpha, 1e-12));
        }

        #[test]
        fn scale_invariance(delta in 0.0f64..1.0, nu4 in 1.0f64..10.0, n in 4usize..256,
                            c in prop::sample::select(vec![0.1, 10.0])) {
            let p = 2400;
            let f = functionals(&two_point(delta), p).unwrap();
            let g = f.scaled(c);
            for power in [john_power, qlrt_power] {
                let a = power(&f, nu4, n, p, 0.05).unwrap().power;
                let b = power(&g, nu4, n, p, 0.05).unwrap().power;
                prop_assert!(close(a, b, 1e-12));
            }
        }

        #[test]
        fn jensen_guard(d in prop::collection::vec(1e-3f64..1e3, 1..64)) {
            let p = d.len();
            let f = functionals(&SigmaSpec::ExplicitDiagonal(d), p).unwrap();
            prop_assert!(f.gamma * f.gamma <= f.theta * (1.0 + 1e-12));
            prop_assert!(f.omega <= f.theta * (1.0 + 1e-12));
        }
    }
}
