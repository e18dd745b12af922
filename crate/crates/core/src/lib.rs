//! Sphericity tests for covariance matrices when the dimension `p` may far
//! exceed the sample size `n`.
//!
//! The data are a `p x n` matrix `X` whose columns are observations. All four
//! statistics (John, quasi-LRT, Chen, Srivastava) are computed from the small
//! `n x n` companion matrix `(1/p) X'X`.
//!
//! ```
//! use sphericity::{calibration, matrix, stats};
//!
//! let x = matrix::DataMatrix::from_rows(&[
//!     vec![1.0, 1.0],
//!     vec![1.0, -1.0],
//!     vec![1.0, 1.0],
//!     vec![1.0, -1.0],
//! ])?;
//! let s = matrix::summarize(&x, matrix::SummaryRequest::TRACES)?;
//! let u = stats::john_u(&s)?;
//! let model = calibration::NullModel::for_statistic(&u, 3.0)?;
//! let r = calibration::standardize(&u, &model)?;
//! assert_eq!(r.z, -1.5);
//! # Ok::<(), sphericity::Error>(())
//! ```

// `!(x > t)` is deliberate throughout: it also catches NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod contour;
pub mod error;
pub mod matrix;
pub mod montecarlo;
pub mod normal;
pub mod populations;
pub mod power;
pub mod stats;

pub use error::{Error, Result};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/power.md")]
    mod power {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/contour.md")]
    mod contour {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
