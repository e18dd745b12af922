//! Null calibration: statistic → standardized z, one-sided p-value, decision.
//!
//! | model              | statistic | z                                          |
//! |--------------------|-----------|--------------------------------------------|
//! | `JohnUltra`        | John      | `(n·U − p − (ν₄ − 2)) / 2`                 |
//! | `QlrtUltra`        | QLRT      | `𝓛ₙ − n/2 − n²/(6p) − (ν₄ − 2)/2`           |
//! | `ChenNull`         | Chen      | `n·Uₙ / 2`                                 |
//! | `SrivastavaNull`   | Srivastava| `Wₙ`                                       |
//! | `LrtClassicalSwap` | QLRT of `X'` | as `QlrtUltra` with n and p exchanged   |
//!
//! Every rejection region is the upper tail of a standard normal.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, SpectralSummary};
use crate::normal;
use crate::stats::{qlrt_l, StatisticKind, StatisticValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NullKind {
    JohnUltra,
    QlrtUltra,
    ChenNull,
    SrivastavaNull,
    /// Classical LRT for `n >> p`, obtained by running the quasi-LRT on `X'`.
    LrtClassicalSwap,
}

impl NullKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::JohnUltra => "john-ultra",
            Self::QlrtUltra => "qlrt-ultra",
            Self::ChenNull => "chen-null",
            Self::SrivastavaNull => "srivastava-null",
            Self::LrtClassicalSwap => "lrt-classical-swap",
        }
    }

    /// The statistic this null limit applies to.
    pub fn statistic(self) -> StatisticKind {
        match self {
            Self::JohnUltra => StatisticKind::John,
            Self::QlrtUltra | Self::LrtClassicalSwap => StatisticKind::Qlrt,
            Self::ChenNull => StatisticKind::Chen,
            Self::SrivastavaNull => StatisticKind::Srivastava,
        }
    }

    /// The default null limit for a statistic.
    pub fn default_for(kind: StatisticKind) -> Self {
        match kind {
            StatisticKind::John => Self::JohnUltra,
            StatisticKind::Qlrt => Self::QlrtUltra,
            StatisticKind::Chen => Self::ChenNull,
            StatisticKind::Srivastava => Self::SrivastavaNull,
        }
    }
}

impl fmt::Display for NullKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A null limiting distribution, parameterized by the fourth moment `ν₄` of
/// the standardized entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullModel {
    pub kind: NullKind,
    pub nu4: f64,
    pub n: usize,
    pub p: usize,
}

impl NullModel {
    pub fn new(kind: NullKind, nu4: f64, n: usize, p: usize) -> Result<Self> {
        if !(nu4.is_finite() && nu4 >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nu4 must be a finite number >= 1, got {nu4}"
            )));
        }
        Ok(Self { kind, nu4, n, p })
    }

    /// The default model for `stat`, at the statistic's own dimensions.
    pub fn for_statistic(stat: &StatisticValue, nu4: f64) -> Result<Self> {
        Self::new(NullKind::default_for(stat.kind), nu4, stat.n, stat.p)
    }
}

/// A calibrated test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: StatisticValue,
    pub z: f64,
    /// `1 − Φ(z)`.
    pub p_value: f64,
    pub null_model: NullModel,
}

impl TestResult {
    /// Whether the test rejects at level `alpha`, i.e. `z > z_α`.
    ///
    /// Degenerate statistics always reject.
    pub fn reject_at(&self, alpha: f64) -> Result<bool> {
        let critical = normal::upper_quantile(alpha)?;
        Ok(self.statistic.degenerate || self.z > critical)
    }

    /// Decisions at several levels at once.
    pub fn decisions(&self, levels: &[f64]) -> Result<Vec<(f64, bool)>> {
        levels
            .iter()
            .map(|&alpha| Ok((alpha, self.reject_at(alpha)?)))
            .collect()
    }
}

/// Standardizes `stat` under `model`.
pub fn standardize(stat: &StatisticValue, model: &NullModel) -> Result<TestResult> {
    if stat.kind != model.kind.statistic() {
        return Err(Error::KindMismatch {
            statistic: stat.kind.name(),
            model: model.kind.name(),
        });
    }
    if stat.n != model.n || stat.p != model.p {
        return Err(Error::DimensionMismatch {
            stat_n: stat.n,
            stat_p: stat.p,
            model_n: model.n,
            model_p: model.p,
        });
    }
    if !model.nu4.is_finite() || model.nu4 < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "nu4 must be a finite number >= 1, got {}",
            model.nu4
        )));
    }
    if stat.degenerate {
        return Ok(TestResult {
            statistic: *stat,
            z: f64::INFINITY,
            p_value: 0.0,
            null_model: *model,
        });
    }
    if !stat.value.is_finite() {
        return Err(Error::NonFiniteStatistic(stat.value));
    }

    let n = stat.n as f64;
    let p = stat.p as f64;
    let excess = model.nu4 - 2.0;
    let z = match model.kind {
        NullKind::JohnUltra => (n * stat.value - p - excess) / 2.0,
        NullKind::QlrtUltra | NullKind::LrtClassicalSwap => {
            stat.value - n / 2.0 - n * n / (6.0 * p) - excess / 2.0
        }
        NullKind::ChenNull => n * stat.value / 2.0,
        NullKind::SrivastavaNull => stat.value,
    };
    Ok(TestResult {
        statistic: *stat,
        z,
        p_value: normal::upper_tail(z),
        null_model: *model,
    })
}

/// Classical-regime LRT (`n >> p`) through the quasi-LRT with n and p swapped.
///
/// `s` must summarize the transposed data `X'`, so that its companion is the
/// p x p sample covariance `(1/n) X X'`. The result's statistic is
/// `−(2/p) log Lₙ` and
/// `z = −(2/p) log Lₙ − p/2 − p²/(6n) − (ν₄ − 2)/2`.
pub fn classical_swap_z(s: &SpectralSummary, nu4: f64) -> Result<TestResult> {
    let stat = qlrt_l(s)?;
    let model = NullModel::new(NullKind::LrtClassicalSwap, nu4, stat.n, stat.p)?;
    standardize(&stat, &model)
}

/// Plug-in estimate of `ν₄`: `Σx⁴ / (np · m₂²)` with `m₂ = Σx² / (np)`,
/// clamped below at 1.
pub fn estimate_nu4(x: &DataMatrix) -> Result<f64> {
    let count = (x.n() * x.p()) as f64;
    let (sum2, sum4) = x.values().iter().fold((0.0, 0.0), |(s2, s4), v| {
        let sq = v * v;
        (s2 + sq, s4 + sq * sq)
    });
    if !(sum2 > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let m2 = sum2 / count;
    Ok((sum4 / (count * m2 * m2)).max(1.0))
}
