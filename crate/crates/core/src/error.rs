use thiserror::Error;

/// Errors produced by the sphericity library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("data matrix must have at least one row and one column (got {p}x{n})")]
    EmptyMatrix { p: usize, n: usize },

    #[error("data matrix has {got} values, expected {expected} for a {p}x{n} matrix")]
    ShapeMismatch {
        p: usize,
        n: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("companion Gram matrix is numerically singular (pivot {pivot:e} below threshold {threshold:e})")]
    SingularGram { pivot: f64, threshold: f64 },

    #[error("spectral summary carries no eigenvalues")]
    MissingEigenvalues,

    #[error("spectral summary carries no log-determinant")]
    MissingLogdet,

    #[error("data matrix has zero trace (all-zero data)")]
    ZeroTrace,

    #[error("sample size n = {n} is too small; at least {min} observations required")]
    SampleTooSmall { n: usize, min: usize },

    #[error("T1 is numerically zero ({t1:e}); Chen's statistic is undefined")]
    DegenerateT1 { t1: f64 },

    #[error("statistic kind {statistic} does not match null model {model}")]
    KindMismatch {
        statistic: &'static str,
        model: &'static str,
    },

    #[error("statistic dimensions (n={stat_n}, p={stat_p}) do not match null model (n={model_n}, p={model_p})")]
    DimensionMismatch {
        stat_n: usize,
        stat_p: usize,
        model_n: usize,
        model_p: usize,
    },

    #[error("statistic value {0} is not finite")]
    NonFiniteStatistic(f64),

    #[error("covariance diagonal entry {index} is not positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("contour passes through a singularity at m = {re} + {im}i")]
    PoleOnContour { re: f64, im: f64 },

    #[error("contour integral has imaginary part {imag:e} (real part {real}); branch selection is inconsistent")]
    NonVanishingImaginaryPart { real: f64, imag: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("plan line {line}: {message}")]
    PlanParse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
