//! The four sphericity statistics.
//!
//! John, Srivastava and the quasi-LRT are functions of the companion trace
//! moments and log-determinant. Chen's statistic is a ratio of U-statistics
//! over distinct observation indices; it is evaluated either literally
//! (`O(n⁴)` index sums, kept as an oracle) or through closed forms in the
//! Gram matrix.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{CompanionGram, DataMatrix, SpectralSummary};

/// Largest sample size accepted by [`ChenMethod::BruteForce`].
pub const CHEN_BRUTE_FORCE_MAX_N: usize = 12;

/// Relative threshold under which `T₁ₙ` counts as zero.
pub const CHEN_T1_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatisticKind {
    John,
    Qlrt,
    Chen,
    Srivastava,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 4] = [Self::John, Self::Qlrt, Self::Chen, Self::Srivastava];

    pub fn name(self) -> &'static str {
        match self {
            Self::John => "john",
            Self::Qlrt => "qlrt",
            Self::Chen => "chen",
            Self::Srivastava => "srivastava",
        }
    }

    /// Parses the lowercase names used on the command line and in plan files.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "john" => Some(Self::John),
            "qlrt" => Some(Self::Qlrt),
            "chen" => Some(Self::Chen),
            "srivastava" | "sri" => Some(Self::Srivastava),
            _ => None,
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A computed statistic together with the dimensions it was computed at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticValue {
    pub kind: StatisticKind,
    pub value: f64,
    pub n: usize,
    pub p: usize,
    /// Set for a quasi-LRT whose companion matrix is singular; `value` is `+∞`.
    pub degenerate: bool,
}

impl StatisticValue {
    fn new(kind: StatisticKind, value: f64, n: usize, p: usize) -> Self {
        Self {
            kind,
            value,
            n,
            p,
            degenerate: false,
        }
    }

    /// The quasi-LRT value reported when the companion matrix is singular.
    pub fn degenerate_qlrt(n: usize, p: usize) -> Self {
        Self {
            kind: StatisticKind::Qlrt,
            value: f64::INFINITY,
            n,
            p,
            degenerate: true,
        }
    }
}

fn check_trace(s: &SpectralSummary) -> Result<()> {
    if s.trace1 > 0.0 && s.trace1.is_finite() {
        Ok(())
    } else {
        Err(Error::ZeroTrace)
    }
}

/// John's statistic `U = p · tr(S²)/tr(S)² − 1` with `S = (1/n) X X'`.
///
/// In companion traces this is `p · trace2 / trace1² − 1`; the `(p/n)`
/// factors cancel, so the value is exactly scale invariant.
pub fn john_u(s: &SpectralSummary) -> Result<StatisticValue> {
    check_trace(s)?;
    let u = s.p as f64 * s.trace2 / (s.trace1 * s.trace1) - 1.0;
    Ok(StatisticValue::new(StatisticKind::John, u, s.n, s.p))
}

/// The quasi-LRT `𝓛ₙ = (p/n) [n log(trace1/n) − log det((1/p) X'X)]`.
///
/// A log-determinant of `−∞` yields the degenerate value `+∞`.
pub fn qlrt_l(s: &SpectralSummary) -> Result<StatisticValue> {
    check_trace(s)?;
    let logdet = s.logdet.ok_or(Error::MissingLogdet)?;
    if logdet == f64::NEG_INFINITY {
        return Ok(StatisticValue::degenerate_qlrt(s.n, s.p));
    }
    let n = s.n as f64;
    let ratio = s.p as f64 / n;
    // AM-GM guarantees a nonnegative bracket; clamp roundoff below zero
    let bracket = (n * (s.trace1 / n).ln() - logdet).max(0.0);
    Ok(StatisticValue::new(StatisticKind::Qlrt, ratio * bracket, s.n, s.p))
}

/// Srivastava's `Wₙ = (n/2) [cₙ (1/p)(tr S² − (tr S)²/n) / ((1/p) tr S)² − 1]`.
pub fn srivastava_wn(s: &SpectralSummary) -> Result<StatisticValue> {
    if s.n < 2 {
        return Err(Error::SampleTooSmall { n: s.n, min: 2 });
    }
    check_trace(s)?;
    let n = s.n as f64;
    let p = s.p as f64;
    let c_n = n * n / ((n - 1.0) * (n + 2.0));
    // (1/p)(tr S² − (tr S)²/n) / ((1/p) tr S)² = p (trace2 − trace1²/n) / trace1²
    let ratio = p * (s.trace2 - s.trace1 * s.trace1 / n) / (s.trace1 * s.trace1);
    let w = 0.5 * n * (c_n * ratio - 1.0);
    Ok(StatisticValue::new(StatisticKind::Srivastava, w, s.n, s.p))
}

/// How Chen's U-statistics are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChenMethod {
    /// Literal sums over distinct indices; `n ≤ 12` only.
    BruteForce,
    /// Closed forms in the Gram matrix, `O(n²)` after forming it.
    Reduced,
}

/// Chen's `Uₙ = p · T₂ₙ / T₁ₙ² − 1`.
pub fn chen_un(x: &DataMatrix, method: ChenMethod) -> Result<StatisticValue> {
    match method {
        ChenMethod::Reduced => chen_un_from_gram(&CompanionGram::new(x)),
        ChenMethod::BruteForce => chen_brute_force(x),
    }
}

/// Chen's statistic from an already formed companion matrix.
///
/// `Uₙ` is a ratio of degree-four forms, so the `1/p` scaling of the
/// companion cancels.
pub fn chen_un_from_gram(gram: &CompanionGram) -> Result<StatisticValue> {
    let n = gram.n();
    if n < 4 {
        return Err(Error::SampleTooSmall { n, min: 4 });
    }
    let (t1, t2) = chen_reduced_parts(gram.matrix());
    let scale = gram.trace1() / n as f64;
    finish_chen(t1, t2, scale, n, gram.p())
}

/// `(T₁ₙ, T₂ₙ)` via closed forms in a symmetric Gram matrix `G`.
///
/// With `oᵢ = Σ_{j≠i} Gᵢⱼ`, `W = Σ oᵢ` and `F = Σ_{i≠j} Gᵢⱼ²`, the sums
/// over distinct indices are
///
/// * `Σ*_{i,j,k} Gᵢⱼ Gⱼₖ = Σ oⱼ² − F`
/// * `Σ*_{i,j,k,l} Gᵢⱼ Gₖₗ = W² − 4 Σ*_{i,j,k} Gᵢⱼ Gⱼₖ − 2F`
fn chen_reduced_parts(g: &DMatrix<f64>) -> (f64, f64) {
    let n = g.nrows();
    let nf = n as f64;
    let p2 = nf * (nf - 1.0);
    let p3 = p2 * (nf - 2.0);
    let p4 = p3 * (nf - 3.0);

    let mut trace = 0.0;
    let mut off_total = 0.0;
    let mut off_sq = 0.0;
    let mut row_sq = 0.0;
    for j in 0..n {
        let col = g.column(j);
        let mut o = 0.0;
        for (i, v) in col.iter().enumerate() {
            if i == j {
                trace += v;
            } else {
                o += v;
                off_sq += v * v;
            }
        }
        off_total += o;
        row_sq += o * o;
    }
    let triple = row_sq - off_sq;
    let quad = off_total * off_total - 4.0 * triple - 2.0 * off_sq;

    let t1 = trace / nf - off_total / p2;
    let t2 = off_sq / p2 - 2.0 * triple / p3 + quad / p4;
    (t1, t2)
}

fn chen_brute_force(x: &DataMatrix) -> Result<StatisticValue> {
    let n = x.n();
    if n < 4 {
        return Err(Error::SampleTooSmall { n, min: 4 });
    }
    if n > CHEN_BRUTE_FORCE_MAX_N {
        return Err(Error::InvalidParameter(format!(
            "brute-force Chen statistic supports n <= {CHEN_BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let dot = |i: usize, j: usize| -> f64 {
        x.column(i)
            .iter()
            .zip(x.column(j))
            .map(|(a, b)| a * b)
            .sum()
    };
    let nf = n as f64;
    let p2 = nf * (nf - 1.0);
    let p3 = p2 * (nf - 2.0);
    let p4 = p3 * (nf - 3.0);

    let mut diag = 0.0;
    let mut pair = 0.0;
    let mut pair_sq = 0.0;
    for i in 0..n {
        diag += dot(i, i);
        for j in (0..n).filter(|&j| j != i) {
            let v = dot(i, j);
            pair += v;
            pair_sq += v * v;
        }
    }
    let mut triple = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            for k in (0..n).filter(|&k| k != i && k != j) {
                triple += dot(i, j) * dot(j, k);
                for l in (0..n).filter(|&l| l != i && l != j && l != k) {
                    quad += dot(i, j) * dot(k, l);
                }
            }
        }
    }
    let t1 = diag / nf - pair / p2;
    let t2 = pair_sq / p2 - 2.0 * triple / p3 + quad / p4;
    finish_chen(t1, t2, diag / nf, n, x.p())
}

fn finish_chen(t1: f64, t2: f64, scale: f64, n: usize, p: usize) -> Result<StatisticValue> {
    if !(t1.abs() > CHEN_T1_TOL * scale.abs()) {
        return Err(Error::DegenerateT1 { t1 });
    }
    let u = p as f64 * t2 / (t1 * t1) - 1.0;
    Ok(StatisticValue::new(StatisticKind::Chen, u, n, p))
}
