//! Monte Carlo moment checks of the bivariate spectral limits behind the null
//! and alternative distributions.
//!
//! With `λᵢ` the eigenvalues of `A = √(p/n)((1/p) X'X − I)` and `λ̃ᵢ` those of
//! `Ã = n^{-1/2}(X'X − tr Σ · I)/√(tr Σ²)`, every vector below is expressed
//! through `trace1`, `trace2` and `log det` of `(1/p) X'X`, so no
//! eigendecomposition is needed:
//!
//! | lemma | coordinates                                                    |
//! |-------|----------------------------------------------------------------|
//! | L1    | `Σλᵢ² − n − (ν₄−2)`, `Σλᵢ`                                      |
//! | L2    | `Σλᵢ`, `√(p/n)·log det + ½√(n³/p) + (n²/6p)√(n/p) + ((ν₄−2)/2)√(n/p)` |
//! | L3    | `Σλ̃ᵢ² − n − (ω/θ·(ν₄−3) + 1)`, `Σλ̃ᵢ`                            |
//! | L4    | `Σλ̃ᵢ`, the log-determinant coordinate with `γ, θ, ω` centering  |
//!
//! All limits have mean zero. Every coordinate mean is checked against three
//! standard errors, every variance against a 15% relative band, and the
//! covariance against three standard errors when its limit is zero and 15%
//! otherwise.
//!
//! For L1 the cross covariance is also known exactly at finite `(n, p)`; see
//! [`l1_exact_covariance`]. It decays only like `√(n/p)`, so at moderate `p`
//! it can sit several standard errors away from its limit of zero.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::CompanionGram;
use crate::populations::{EntryLaw, PopulationSpec, Sampler, SeedSpec};
use crate::power::{functionals, SigmaFunctionals};

use super::{cell_seed, with_workers};

/// Relative band for variances and nonzero covariances.
pub const VARIANCE_BAND: f64 = 0.15;
/// Standard errors allowed for means and null covariances.
pub const MEAN_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lemma {
    L1,
    L2,
    L3,
    L4,
}

impl Lemma {
    pub const ALL: [Lemma; 4] = [Self::L1, Self::L2, Self::L3, Self::L4];

    pub fn name(self) -> &'static str {
        match self {
            Self::L1 => "L1",
            Self::L2 => "L2",
            Self::L3 => "L3",
            Self::L4 => "L4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
    }

    fn needs_logdet(self) -> bool {
        matches!(self, Self::L2 | Self::L4)
    }

    fn null_only(self) -> bool {
        matches!(self, Self::L1 | Self::L2)
    }

    /// Names of the two coordinates.
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Self::L1 => ["sum l^2 - n - (nu4-2)", "sum l"],
            Self::L2 => ["sum l", "log-det coordinate"],
            Self::L3 => ["sum l~^2 - n - (w/t(nu4-3)+1)", "sum l~"],
            Self::L4 => ["sum l~", "log-det coordinate"],
        }
    }

    /// Limiting covariance of the vector.
    pub fn target_covariance(self, f: &SigmaFunctionals, nu4: f64, n: usize, p: usize) -> [[f64; 2]; 2] {
        let r = n as f64 / p as f64;
        let (g, t, w) = (f.gamma, f.theta, f.omega);
        let kappa = w / t * (nu4 - 3.0) + 2.0;
        match self {
            Self::L1 => [[4.0, 0.0], [0.0, nu4 - 1.0]],
            Self::L2 => {
                let c = (nu4 - 1.0) * (1.0 + r);
                [[nu4 - 1.0, c], [c, nu4 - 1.0 + r * (2.0 * nu4 - 1.0)]]
            }
            Self::L3 => [[4.0, 0.0], [0.0, kappa]],
            Self::L4 => {
                let st = t.sqrt();
                let c = kappa * (st / g + t * st / (g * g * g) * r);
                let v = kappa * t / (g * g) + (2.0 * w / t * (nu4 - 3.0) + 5.0) * t * t / g.powi(4) * r;
                [[kappa, c], [c, v]]
            }
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact covariance of the two L1 coordinates for i.i.d. entries:
/// `(2(n−1)(ν₄−1) + E(x²−1)³) / √(np)`.
///
/// Only pairs of Gram entries sharing a column correlate with `tr X'X`. The
/// off-diagonal entries contribute `2(n−1)(ν₄−1)` and the diagonal ones the
/// third central moment of `x²`.
pub fn l1_exact_covariance(law: EntryLaw, n: usize, p: usize) -> f64 {
    let (nf, pf) = (n as f64, p as f64);
    let nu4 = law.nu4();
    let mu3 = law.sixth_moment() - 3.0 * nu4 + 2.0;
    (2.0 * (nf - 1.0) * (nu4 - 1.0) + mu3) / (nf * pf).sqrt()
}

/// The centered vector for one data set, from its companion matrix.
pub(crate) fn lemma_vector(
    which: Lemma,
    gram: &CompanionGram,
    f: &SigmaFunctionals,
    nu4: f64,
) -> Result<[f64; 2]> {
    let (nf, pf) = (gram.n() as f64, gram.p() as f64);
    let (t1, t2) = (gram.trace1(), gram.trace2());
    let sqrt_pn = (pf / nf).sqrt();
    let sqrt_np = (nf / pf).sqrt();
    let logdet = if which.needs_logdet() {
        gram.logdet()?
    } else {
        0.0
    };
    Ok(match which {
        Lemma::L1 | Lemma::L2 => {
            let sum = sqrt_pn * (t1 - nf);
            if which == Lemma::L1 {
                let sum_sq = pf / nf * (t2 - 2.0 * t1 + nf);
                [sum_sq - nf - (nu4 - 2.0), sum]
            } else {
                let second = sqrt_pn * logdet
                    + 0.5 * (nf * nf * nf / pf).sqrt()
                    + nf * nf / (6.0 * pf) * sqrt_np
                    + 0.5 * (nu4 - 2.0) * sqrt_np;
                [sum, second]
            }
        }
        Lemma::L3 | Lemma::L4 => {
            let (g, t, w) = (f.gamma, f.theta, f.omega);
            // tr(X'X) = p·trace1, ‖X'X‖² = p²·trace2, tr Σ = pγ, tr Σ² = pθ
            let sum = pf * (t1 - nf * g) / (nf * pf * t).sqrt();
            if which == Lemma::L3 {
                let sum_sq = pf * (t2 - 2.0 * g * t1 + nf * g * g) / (nf * t);
                [sum_sq - nf - (w / t * (nu4 - 3.0) + 1.0), sum]
            } else {
                let g2 = g * g;
                let second = sqrt_pn * logdet - (pf * nf).sqrt() * g.ln()
                    + t / (2.0 * g2) * (nf * nf * nf / pf).sqrt()
                    + ((t * t / (2.0 * g2 * g2) - t * t.sqrt() / (3.0 * g2 * g)) * nf * nf / pf
                        + t / (2.0 * g2)
                        + w / (2.0 * g2) * (nu4 - 3.0))
                        * sqrt_np;
                [sum, second]
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub label: String,
    pub observed: f64,
    pub target: f64,
    /// Allowed absolute deviation.
    pub tolerance: f64,
}

impl LemmaCheck {
    pub fn pass(&self) -> bool {
        (self.observed - self.target).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub which: Lemma,
    pub p: usize,
    pub n: usize,
    pub nu4: f64,
    pub replications: usize,
    pub mean: [f64; 2],
    pub mean_stderr: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub covariance_stderr: [[f64; 2]; 2],
    pub target_covariance: [[f64; 2]; 2],
    /// Exact finite-sample cross covariance, where known (L1). Diagnostic
    /// only; the checks compare with the limit.
    pub exact_covariance: Option<f64>,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(LemmaCheck::pass)
    }
}

/// Simulates the lemma's vector and compares its moments with the limit.
pub fn verify_lemma_moments(
    which: Lemma,
    population: &PopulationSpec,
    p: usize,
    n: usize,
    replications: usize,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<LemmaReport> {
    if replications < 2 {
        return Err(Error::InvalidParameter("at least 2 replications required".into()));
    }
    let f = functionals(&population.sigma, p)?;
    if which.null_only() && !(f.gamma == 1.0 && f.theta == 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{which} describes the null Sigma = I; use L3 or L4 for other covariances"
        )));
    }
    let nu4 = population.nu4();
    let sampler = Sampler::new(population, p)?;
    let seed = cell_seed(master_seed, p, n, &format!("{which}-{}", population.entry));
    let samples: Vec<[f64; 2]> = with_workers(workers, || {
        (0..replications as u64)
            .into_par_iter()
            .map(|r| {
                let x = sampler.sample(n, SeedSpec::new(seed, r))?;
                lemma_vector(which, &CompanionGram::new(&x), &f, nu4)
            })
            .collect::<Result<_>>()
    })??;

    let count = replications as f64;
    let mut mean = [0.0; 2];
    for y in &samples {
        mean[0] += y[0] / count;
        mean[1] += y[1] / count;
    }
    let mut covariance = [[0.0; 2]; 2];
    let mut product_sq = [[0.0; 2]; 2];
    for y in &samples {
        let d = [y[0] - mean[0], y[1] - mean[1]];
        for i in 0..2 {
            for j in 0..2 {
                let prod = d[i] * d[j];
                covariance[i][j] += prod;
                product_sq[i][j] += prod * prod;
            }
        }
    }
    let mut covariance_stderr = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let m = covariance[i][j] / count;
            let var_prod = (product_sq[i][j] / count - m * m).max(0.0);
            covariance_stderr[i][j] = (var_prod / count).sqrt();
            covariance[i][j] /= count - 1.0;
        }
    }
    let mean_stderr = [
        (covariance[0][0] / count).sqrt(),
        (covariance[1][1] / count).sqrt(),
    ];
    let target = which.target_covariance(&f, nu4, n, p);
    let labels = which.labels();

    let mut checks = Vec::new();
    for k in 0..2 {
        checks.push(LemmaCheck {
            label: format!("mean[{}]", labels[k]),
            observed: mean[k],
            target: 0.0,
            tolerance: MEAN_BAND * mean_stderr[k],
        });
    }
    for k in 0..2 {
        checks.push(LemmaCheck {
            label: format!("var[{}]", labels[k]),
            observed: covariance[k][k],
            target: target[k][k],
            tolerance: VARIANCE_BAND * target[k][k],
        });
    }
    let cov_tol = if target[0][1] == 0.0 {
        MEAN_BAND * covariance_stderr[0][1]
    } else {
        VARIANCE_BAND * target[0][1].abs()
    };
    checks.push(LemmaCheck {
        label: "cov".into(),
        observed: covariance[0][1],
        target: target[0][1],
        tolerance: cov_tol,
    });

    Ok(LemmaReport {
        which,
        p,
        n,
        nu4,
        replications,
        mean,
        mean_stderr,
        covariance,
        covariance_stderr,
        target_covariance: target,
        exact_covariance: (which == Lemma::L1).then(|| l1_exact_covariance(population.entry, n, p)),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{summarize, SummaryRequest};
    use crate::populations::EntryLaw;
    use crate::power::SigmaSpec;

    #[test]
    fn trace_forms_match_eigenvalues() {
        let (p, n) = (60, 6);
        let pop = PopulationSpec::new(
            EntryLaw::CenteredGamma,
            SigmaSpec::TwoPointDiagonal {
                a: 0.5,
                b: 2.0,
                delta: 0.3,
            },
        );
        let x = crate::populations::sample(&pop, p, n, SeedSpec::new(5, 0)).unwrap();
        let f = functionals(&pop.sigma, p).unwrap();
        let s = summarize(&x, SummaryRequest::FULL).unwrap();
        let ev = s.eigenvalues.unwrap();
        let (nf, pf) = (n as f64, p as f64);

        // Ã eigenvalues: (λ̃ − γ) √(p / (nθ))
        let scale = (pf / (nf * f.theta)).sqrt();
        let tl: Vec<f64> = ev.iter().map(|v| (v - f.gamma) * scale).collect();
        let y = lemma_vector(Lemma::L3, &CompanionGram::new(&x), &f, 4.5).unwrap();
        let sum: f64 = tl.iter().sum();
        let sum_sq: f64 = tl.iter().map(|v| v * v).sum();
        assert!((y[1] - sum).abs() < 1e-9);
        assert!((y[0] - (sum_sq - nf - (1.5 + 1.0))).abs() < 1e-9);

        let y = lemma_vector(Lemma::L4, &CompanionGram::new(&x), &f, 4.5).unwrap();
        let logs: f64 = tl
            .iter()
            .map(|v| (f.gamma + v * (nf * f.theta / pf).sqrt()).ln())
            .sum();
        let g2 = f.gamma * f.gamma;
        let t = f.theta;
        let expected = (pf / nf).sqrt() * logs - (pf * nf).sqrt() * f.gamma.ln()
            + t / (2.0 * g2) * (nf.powi(3) / pf).sqrt()
            + ((t * t / (2.0 * g2 * g2) - t.powf(1.5) / (3.0 * g2 * f.gamma)) * nf * nf / pf
                + t / (2.0 * g2)
                + f.omega / (2.0 * g2) * 1.5)
                * (nf / pf).sqrt();
        assert!((y[1] - expected).abs() < 1e-9, "{} vs {expected}", y[1]);
    }

    #[test]
    fn alternative_forms_reduce_to_null_forms() {
        let pop = PopulationSpec::null(EntryLaw::CenteredGamma);
        let f = functionals(&pop.sigma, 200).unwrap();
        for r in 0..5 {
            let x = crate::populations::sample(&pop, 200, 8, SeedSpec::new(17, r)).unwrap();
            let g = CompanionGram::new(&x);
            let l1 = lemma_vector(Lemma::L1, &g, &f, 4.5).unwrap();
            let l3 = lemma_vector(Lemma::L3, &g, &f, 4.5).unwrap();
            let l2 = lemma_vector(Lemma::L2, &g, &f, 4.5).unwrap();
            let l4 = lemma_vector(Lemma::L4, &g, &f, 4.5).unwrap();
            for k in 0..2 {
                assert!((l1[k] - l3[k]).abs() < 1e-9);
                assert!((l2[k] - l4[k]).abs() < 1e-9);
            }
        }
        let id = SigmaFunctionals::scaled_identity(1.0);
        for (a, b) in [(Lemma::L1, Lemma::L3), (Lemma::L2, Lemma::L4)] {
            let ca = a.target_covariance(&id, 4.5, 64, 6400);
            let cb = b.target_covariance(&id, 4.5, 64, 6400);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((ca[i][j] - cb[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn null_lemmas_reject_alternatives() {
        let pop = PopulationSpec::new(EntryLaw::StdNormal, SigmaSpec::ScaledIdentity { sigma2: 2.0 });
        assert!(verify_lemma_moments(Lemma::L1, &pop, 100, 8, 10, 1, None).is_err());
        assert!(verify_lemma_moments(Lemma::L3, &pop, 100, 8, 10, 1, None).is_ok());
    }

    #[test]
    fn small_l1_run_is_deterministic() {
        let pop = PopulationSpec::null(EntryLaw::StdNormal);
        let a = verify_lemma_moments(Lemma::L1, &pop, 400, 16, 200, 3, Some(1)).unwrap();
        let b = verify_lemma_moments(Lemma::L1, &pop, 400, 16, 200, 3, Some(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checks.len(), 5);
    }

    #[test]
    fn exact_covariance_values() {
        // 2·63·2 + 8 = 260 and 2·63·3.5 + 43.5 = 484.5, over √(64·6400) = 640
        assert!((l1_exact_covariance(EntryLaw::StdNormal, 64, 6400) - 260.0 / 640.0).abs() < 1e-15);
        assert!((l1_exact_covariance(EntryLaw::CenteredGamma, 64, 6400) - 484.5 / 640.0).abs() < 1e-15);
    }

    #[test]
    fn names() {
        for l in Lemma::ALL {
            assert_eq!(Lemma::parse(&l.name().to_lowercase()), Some(l));
        }
    }
}
