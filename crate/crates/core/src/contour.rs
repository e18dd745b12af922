//! Numerical oracle for the calibrated mean-correction contour integral
//!
//! ```text
//! (n / 2πi) ∮_{|m|=ρ} f(−m − 1/m) χ(m) (1 − m²) / m² dm
//! ```
//!
//! for `f₁(x) = x²`, `f₂(x) = x` and `f₃(x) = (p/n) log(1 + √(n/p) x)`, with
//! closed forms `ν₄ − 2`, `0` and `−(ν₄ − 2)/2 + n²/(3p)`.
//!
//! `χ` is the root of `𝓐χ² + 𝓑χ + 𝓒 = 0` that vanishes with `𝓒`, where
//!
//! ```text
//! 𝓐 = m − √(n/p)(1 + m²)
//! 𝓑 = m² − 1 − (n/p) m (1 + 2m²)
//! 𝓒 = (m³/n)[ν₄ − 2 + m²/(1 − m²) − 2(ν₄ − 1) m √(n/p)] − √(n/p) m⁴
//! ```
//!
//! It is evaluated as `χ = −2𝓒 / (𝓑 + s)` with `s = ±√(𝓑² − 4𝓐𝓒)` taken on
//! the same side as `𝓑` (`Re(s·conj 𝓑) ≥ 0`). This is algebraically
//! `(−𝓑 + s)/(2𝓐)` but never cancels and never divides by `𝓐`.
//!
//! Quadrature is the uniform trapezoid on `m = ρ e^{iθ}`, which converges
//! geometrically for these periodic analytic integrands.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 4096;
pub const MIN_NODES: usize = 256;
/// Relative bound on the imaginary part of the integral.
pub const IMAG_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// `x²`
    F1,
    /// `x`
    F2,
    /// `(p/n) log(1 + √(n/p) x)`
    F3,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [Self::F1, Self::F2, Self::F3];

    pub fn name(self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::F3 => "f3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Some(Self::F1),
            "f2" => Some(Self::F2),
            "f3" => Some(Self::F3),
            _ => None,
        }
    }

    /// The closed-form value of the correction.
    pub fn closed_form(self, n: usize, p: usize, nu4: f64) -> f64 {
        match self {
            Self::F1 => nu4 - 2.0,
            Self::F2 => 0.0,
            Self::F3 => {
                let n = n as f64;
                -(nu4 - 2.0) / 2.0 + n * n / (3.0 * p as f64)
            }
        }
    }

    /// Admissible radii `(lo, hi)`, exclusive.
    ///
    /// `f₁` and `f₂` need the circle inside the pole at `m = √(n/p)`. For `f₃`
    /// the circle must lie in the annulus `√(n/p) < ρ < 1`, where
    /// `1 + √(n/p)(−m − 1/m) = 𝓐/m` has no winding around the origin and the
    /// principal logarithm is continuous.
    pub fn radius_range(self, n: usize, p: usize) -> (f64, f64) {
        let r = (n as f64 / p as f64).sqrt();
        match self {
            Self::F1 | Self::F2 => (0.0, r.min(1.0)),
            Self::F3 => (r, 1.0),
        }
    }

    /// The default radius: `min(√(n/p)/2, 0.05)` for `f₁`, `f₂` and the
    /// midpoint of `(√(n/p), 1)` for `f₃`.
    pub fn default_rho(self, n: usize, p: usize) -> f64 {
        let r = (n as f64 / p as f64).sqrt();
        match self {
            Self::F1 | Self::F2 => (0.5 * r).min(0.05),
            Self::F3 => 0.5 * (1.0 + r),
        }
    }

    fn eval(self, x: Complex64, n: f64, p: f64) -> Complex64 {
        match self {
            Self::F1 => x * x,
            Self::F2 => x,
            Self::F3 => {
                let r = (n / p).sqrt();
                (x * r + 1.0).ln() * (p / n)
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The coefficients `(𝓐, 𝓑, 𝓒)` at `m`.
pub fn coefficients(m: Complex64, n: usize, p: usize, nu4: f64) -> (Complex64, Complex64, Complex64) {
    let nf = n as f64;
    let ratio = nf / p as f64;
    let r = ratio.sqrt();
    let m2 = m * m;
    let m3 = m2 * m;
    let a = m - (m2 + 1.0) * r;
    let b = m2 - 1.0 - m * (m2 * 2.0 + 1.0) * ratio;
    let bracket = m2 / (-m2 + 1.0) + (nu4 - 2.0) - m * (2.0 * (nu4 - 1.0) * r);
    let c = m3 / nf * bracket - m2 * m2 * r;
    (a, b, c)
}

/// `χ(m)`, the calibrated root at `m` (requires `|m| < 1`).
pub fn chi_calib(m: Complex64, n: usize, p: usize, nu4: f64) -> Result<Complex64> {
    if !(m.norm() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "chi is defined for |m| < 1, got |m| = {}",
            m.norm()
        )));
    }
    let (a, b, c) = coefficients(m, n, p, nu4);
    if a.norm() <= 1e-14 * (1.0 + m.norm()) {
        return Err(Error::PoleOnContour { re: m.re, im: m.im });
    }
    let mut s = (b * b - a * c * 4.0).sqrt();
    if (s * b.conj()).re < 0.0 {
        s = -s;
    }
    let denom = b + s;
    if denom.norm() == 0.0 {
        return Err(Error::PoleOnContour { re: m.re, im: m.im });
    }
    Ok(-c * 2.0 / denom)
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < MIN_NODES || !nodes.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "nodes must be a power of two >= {MIN_NODES}, got {nodes}"
        )));
    }
    Ok(())
}

/// Largest step `|χ(m_{k+1}) − χ(m_k)|` around the circle `|m| = ρ`.
pub fn continuity_scan(n: usize, p: usize, nu4: f64, rho: f64, nodes: usize) -> Result<f64> {
    check_nodes(nodes)?;
    let chi: Vec<Complex64> = (0..nodes)
        .map(|k| chi_calib(Complex64::from_polar(rho, 2.0 * PI * k as f64 / nodes as f64), n, p, nu4))
        .collect::<Result<_>>()?;
    Ok((0..nodes)
        .map(|k| (chi[(k + 1) % nodes] - chi[k]).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionReport {
    pub function: TestFunction,
    pub n: usize,
    pub p: usize,
    pub nu4: f64,
    pub rho: f64,
    pub nodes: usize,
    pub numeric: f64,
    /// Imaginary part of the quadrature, zero up to rounding.
    pub imag: f64,
    pub closed_form: f64,
}

impl CorrectionReport {
    pub fn diff(&self) -> f64 {
        (self.numeric - self.closed_form).abs()
    }
}

/// Evaluates the correction integral for `f` on `|m| = rho`.
pub fn correction_integral(
    f: TestFunction,
    n: usize,
    p: usize,
    nu4: f64,
    rho: f64,
    nodes: usize,
) -> Result<CorrectionReport> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("n and p must be positive".into()));
    }
    if !(nu4.is_finite() && nu4 >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nu4 must be a finite number >= 1, got {nu4}"
        )));
    }
    check_nodes(nodes)?;
    let (lo, hi) = f.radius_range(n, p);
    if !(rho > lo && rho < hi) {
        let constraint = match f {
            TestFunction::F1 | TestFunction::F2 => "0 < rho < min(sqrt(n/p), 1)",
            TestFunction::F3 => "sqrt(n/p) < rho < 1",
        };
        return Err(Error::InvalidParameter(format!(
            "{f} requires {constraint} = ({lo}, {hi}), got rho = {rho}"
        )));
    }

    let (nf, pf) = (n as f64, p as f64);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..nodes {
        let m = Complex64::from_polar(rho, 2.0 * PI * k as f64 / nodes as f64);
        let chi = chi_calib(m, n, p, nu4)?;
        let x = -m - m.inv();
        // dm = i m dθ turns (1/2πi)∮ g dm into the mean of g·m
        sum += f.eval(x, nf, pf) * chi * (-m * m + 1.0) / m;
    }
    let value = sum * (nf / nodes as f64);
    if value.im.abs() > IMAG_TOL * (1.0 + value.re.abs()) {
        return Err(Error::NonVanishingImaginaryPart {
            real: value.re,
            imag: value.im,
        });
    }
    Ok(CorrectionReport {
        function: f,
        n,
        p,
        nu4,
        rho,
        nodes,
        numeric: value.re,
        imag: value.im,
        closed_form: f.closed_form(n, p, nu4),
    })
}

/// [`correction_integral`] at the default radius and node count.
pub fn correction_integral_default(f: TestFunction, n: usize, p: usize, nu4: f64) -> Result<CorrectionReport> {
    correction_integral(f, n, p, nu4, f.default_rho(n, p), DEFAULT_NODES)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn chi_solves_the_quadratic() {
        for &(n, p, nu4) in &[(8, 1_000_000, 3.0), (4, 10_000, 4.5), (16, 1_000_000, 4.5)] {
            for k in 0..16 {
                let m = Complex64::from_polar(0.01, 2.0 * PI * k as f64 / 16.0);
                let (a, b, cc) = coefficients(m, n, p, nu4);
                let x = chi_calib(m, n, p, nu4).unwrap();
                let resid = a * x * x + b * x + cc;
                assert!(resid.norm() < 1e-15 * (1.0 + cc.norm()), "{resid}");
            }
        }
    }

    #[test]
    fn limit_form_for_large_p() {
        // p → ∞: 𝓐 → m, 𝓑 → m² − 1, 𝓒 → (m³/n)[ν₄ − 2 + m²/(1 − m²)]
        let (n, nu4) = (8usize, 3.0);
        for m in [c(0.1, 0.05), c(-0.2, 0.1), c(0.03, -0.3)] {
            let a = m;
            let b = m * m - 1.0;
            let cc = m * m * m / n as f64 * (m * m / (-m * m + 1.0) + (nu4 - 2.0));
            let disc = (b * b - a * cc * 4.0).sqrt();
            let roots = [(-b + disc) / (a * 2.0), (-b - disc) / (a * 2.0)];
            let small = if roots[0].norm() < roots[1].norm() { roots[0] } else { roots[1] };
            let chi = chi_calib(m, n, 1_000_000_000_000, nu4).unwrap();
            assert!((chi - small).norm() < 1e-6, "{chi} vs {small}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        for m in [c(0.02, 0.01), c(-0.3, 0.2), c(0.0, 0.5)] {
            let a = chi_calib(m, 8, 100_000, 4.5).unwrap();
            let b = chi_calib(m.conj(), 8, 100_000, 4.5).unwrap();
            assert!((a - b.conj()).norm() < 1e-15 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn continuity_on_small_circle() {
        let jump = continuity_scan(8, 1_000_000, 3.0, 0.05, 4096).unwrap();
        assert!(jump < 1e-3, "{jump}");
    }

    #[test]
    fn spot_values() {
        let r = correction_integral(TestFunction::F2, 8, 1_000_000, 3.0, 1e-3, 4096).unwrap();
        assert!(r.numeric.abs() < 1e-8, "{r:?}");
        for nu4 in [3.0, 4.5] {
            let r = correction_integral_default(TestFunction::F1, 8, 1_000_000, nu4).unwrap();
            assert!(r.diff() < 1e-6, "{r:?}");
        }
        let r = correction_integral_default(TestFunction::F3, 8, 1_000_000, 3.0).unwrap();
        assert!((r.closed_form - (-0.5 + 64.0 / 3e6)).abs() < 1e-15);
        assert!(r.diff() < 5e-6, "{r:?}");
    }

    #[test]
    fn radius_independence() {
        for f in [TestFunction::F1, TestFunction::F2] {
            let rho = f.default_rho(8, 10_000);
            let a = correction_integral(f, 8, 10_000, 4.5, rho, 4096).unwrap();
            let b = correction_integral(f, 8, 10_000, 4.5, rho / 2.0, 4096).unwrap();
            assert!((a.numeric - b.numeric).abs() < 1e-8);
        }
    }

    #[test]
    fn quadrature_converged() {
        for f in TestFunction::ALL {
            let rho = f.default_rho(16, 10_000);
            let a = correction_integral(f, 16, 10_000, 4.5, rho, 2048).unwrap();
            let b = correction_integral(f, 16, 10_000, 4.5, rho, 4096).unwrap();
            assert!((a.numeric - b.numeric).abs() < 1e-10, "{f}");
        }
    }

    #[test]
    fn preconditions() {
        // ρ ≥ √(n/p) for f₁
        let err = correction_integral(TestFunction::F1, 64, 128, 3.0, 0.9, 4096).unwrap_err();
        assert!(err.to_string().contains("sqrt(n/p)"), "{err}");
        // ρ below the annulus for f₃
        assert!(correction_integral(TestFunction::F3, 8, 1_000_000, 3.0, 1e-3, 4096).is_err());
        assert!(correction_integral(TestFunction::F2, 8, 1_000_000, 3.0, 1e-3, 1000).is_err());
        assert!(correction_integral(TestFunction::F2, 8, 1_000_000, 3.0, 1e-3, 128).is_err());
        assert!(chi_calib(c(1.0, 0.0), 8, 100, 3.0).is_err());
    }
}
