//! Reproducible populations `X = Σ^{1/2} Z`, with `Z` i.i.d. standard normal
//! or centered Gamma entries.
//!
//! Every replicate owns a ChaCha8 stream keyed by `(master_seed,
//! replicate_index)`: the master seed selects the key and the replicate index
//! the stream number, so replicates never depend on each other.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::power::SigmaSpec;

/// Recorded in run manifests.
pub const GENERATOR: &str = "chacha8 (rand_chacha 0.9); key from master seed, stream = replicate index";
pub const GAUSSIAN_METHOD: &str = "ziggurat (rand_distr 0.5 StandardNormal)";
pub const GAMMA_METHOD: &str = "sum of 4 exponentials, -0.5*ln(u1*u2*u3*u4) - 2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryLaw {
    StdNormal,
    /// `Gamma(shape 4, rate 2) − 2`: mean 0, variance 1, `ν₄ = 4.5`.
    CenteredGamma,
}

impl EntryLaw {
    pub fn nu4(self) -> f64 {
        match self {
            Self::StdNormal => 3.0,
            Self::CenteredGamma => 4.5,
        }
    }

    /// `E x⁶`; for the gamma law `θ⁶(15k³ + 130k² + 120k)` with `k = 4`, `θ = 1/2`.
    pub fn sixth_moment(self) -> f64 {
        match self {
            Self::StdNormal => 15.0,
            Self::CenteredGamma => 55.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::StdNormal => "normal",
            Self::CenteredGamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Some(Self::StdNormal),
            "gamma" => Some(Self::CenteredGamma),
            _ => None,
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::StdNormal => rng.sample(StandardNormal),
            Self::CenteredGamma => gamma_draw(rng),
        }
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub entry: EntryLaw,
    pub sigma: SigmaSpec,
}

impl PopulationSpec {
    pub fn new(entry: EntryLaw, sigma: SigmaSpec) -> Self {
        Self { entry, sigma }
    }

    /// `Σ = I` with the given entry law.
    pub fn null(entry: EntryLaw) -> Self {
        Self::new(entry, SigmaSpec::identity())
    }

    pub fn nu4(&self) -> f64 {
        self.entry.nu4()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replicate_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        Self {
            master_seed,
            replicate_index,
        }
    }

    pub fn stream(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replicate_index);
        rng
    }
}

/// One draw of `Gamma(4, rate 2) − 2`.
///
/// `Open01` keeps every uniform strictly inside `(0, 1)`, so the logarithm is
/// finite; the product of four of them cannot underflow.
#[inline]
pub fn gamma_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01)
        * rng.sample::<f64, _>(Open01)
        * rng.sample::<f64, _>(Open01)
        * rng.sample::<f64, _>(Open01);
    -0.5 * u.ln() - 2.0
}

#[derive(Debug, Clone)]
enum Root {
    Diagonal(Vec<f64>),
    Full(DMatrix<f64>),
}

/// A population prepared for a fixed dimension `p`, with `Σ^{1/2}` computed
/// once.
#[derive(Debug, Clone)]
pub struct Sampler {
    entry: EntryLaw,
    p: usize,
    root: Root,
}

impl Sampler {
    pub fn new(spec: &PopulationSpec, p: usize) -> Result<Self> {
        let root = match spec.sigma.diagonal(p)? {
            Some(d) => Root::Diagonal(d.iter().map(|v| v.sqrt()).collect()),
            None => {
                let SigmaSpec::ExplicitSpd(m) = &spec.sigma else {
                    unreachable!("only full matrices lack a diagonal form")
                };
                Root::Full(symmetric_sqrt(m)?)
            }
        };
        Ok(Self {
            entry: spec.entry,
            p,
            root,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Draws a `p x n` data matrix. Entries are generated column by column.
    pub fn sample(&self, n: usize, seed: SeedSpec) -> Result<DataMatrix> {
        if n == 0 {
            return Err(Error::EmptyMatrix { p: self.p, n });
        }
        let mut rng = seed.stream();
        let mut z = DMatrix::<f64>::zeros(self.p, n);
        for v in z.iter_mut() {
            *v = self.entry.draw(&mut rng);
        }
        let x = match &self.root {
            Root::Diagonal(s) => {
                if s.iter().any(|&v| v != 1.0) {
                    for mut col in z.column_iter_mut() {
                        for (v, si) in col.iter_mut().zip(s) {
                            *v *= si;
                        }
                    }
                }
                z
            }
            Root::Full(s) => s * z,
        };
        DataMatrix::new(x)
    }
}

/// Draws one `p x n` sample of `spec`.
pub fn sample(spec: &PopulationSpec, p: usize, n: usize, seed: SeedSpec) -> Result<DataMatrix> {
    Sampler::new(spec, p)?.sample(n, seed)
}

fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if let Some((index, &value)) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "covariance is not positive definite (eigenvalue {index} is {value})"
        )));
    }
    let roots = eig.eigenvalues.map(f64::sqrt);
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Moments {
        mean: f64,
        var: f64,
        skew: f64,
        nu4: f64,
    }

    fn moments(xs: &[f64]) -> Moments {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (m2, m3, m4) = xs.iter().fold((0.0, 0.0, 0.0), |(a, b, c), x| {
            let d = x - mean;
            (a + d * d, b + d * d * d, c + d * d * d * d)
        });
        let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
        Moments {
            mean,
            var: m2,
            skew: m3 / m2.powf(1.5),
            nu4: m4 / (m2 * m2),
        }
    }

    fn draws(law: EntryLaw, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeedSpec::new(seed, 0).stream();
        (0..count).map(|_| law.draw(&mut rng)).collect()
    }

    #[test]
    fn gamma_moments() {
        let m = moments(&draws(EntryLaw::CenteredGamma, 1_000_000, 11));
        assert!(m.mean.abs() < 0.004, "mean {}", m.mean);
        assert!((m.var - 1.0).abs() < 0.01, "var {}", m.var);
        assert!((m.nu4 - 4.5).abs() < 0.05, "nu4 {}", m.nu4);
        assert!((m.skew - 1.0).abs() < 0.02, "skew {}", m.skew);
    }

    #[test]
    fn sixth_moments() {
        // 3σ of the mean of x⁶ over 10⁶ draws, with E x¹² = 10395 and 1999830.25
        for (law, tol) in [(EntryLaw::StdNormal, 0.31), (EntryLaw::CenteredGamma, 4.3)] {
            let xs = draws(law, 1_000_000, 13);
            let m6 = xs.iter().map(|x| x.powi(6)).sum::<f64>() / xs.len() as f64;
            assert!((m6 - law.sixth_moment()).abs() < tol, "{law}: {m6}");
        }
    }

    #[test]
    fn normal_moments() {
        let m = moments(&draws(EntryLaw::StdNormal, 1_000_000, 12));
        assert!(m.mean.abs() < 0.004);
        assert!((m.var - 1.0).abs() < 0.005);
        assert!((m.nu4 - 3.0).abs() < 0.02, "nu4 {}", m.nu4);
    }

    #[test]
    fn reproducible_and_stream_distinct() {
        let spec = PopulationSpec::null(EntryLaw::CenteredGamma);
        let a = sample(&spec, 5, 3, SeedSpec::new(7, 4)).unwrap();
        let b = sample(&spec, 5, 3, SeedSpec::new(7, 4)).unwrap();
        let c = sample(&spec, 5, 3, SeedSpec::new(7, 5)).unwrap();
        let d = sample(&spec, 5, 3, SeedSpec::new(8, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn scaled_identity_variance() {
        let spec = PopulationSpec::new(EntryLaw::StdNormal, SigmaSpec::ScaledIdentity { sigma2: 4.0 });
        let x = sample(&spec, 1000, 200, SeedSpec::new(3, 0)).unwrap();
        let m = moments(x.values().as_slice());
        // var of the sample variance ≈ 2σ⁴/N
        let se = (2.0 * 16.0 / 200_000.0f64).sqrt();
        assert!((m.var - 4.0).abs() < 3.0 * se, "var {}", m.var);
    }

    #[test]
    fn two_point_rows() {
        let spec = PopulationSpec::new(
            EntryLaw::StdNormal,
            SigmaSpec::TwoPointDiagonal {
                a: 0.5,
                b: 1.0,
                delta: 0.25,
            },
        );
        let x = sample(&spec, 4, 200_000, SeedSpec::new(9, 1)).unwrap();
        for (i, target) in [1.0, 0.5, 0.5, 0.5].into_iter().enumerate() {
            let row: Vec<f64> = x.values().row(i).iter().copied().collect();
            let var = moments(&row).var;
            assert!((var - target).abs() < 0.01, "row {i}: {var}");
        }
    }

    #[test]
    fn full_covariance_root() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0]);
        let s = symmetric_sqrt(&m).unwrap();
        assert!((&s * &s - &m).abs().max() < 1e-12);
        assert!((&s - s.transpose()).abs().max() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(symmetric_sqrt(&bad).is_err());
    }

    #[test]
    fn stream_independence() {
        let spec = PopulationSpec::null(EntryLaw::CenteredGamma);
        let sampler = Sampler::new(&spec, 8).unwrap();
        let pairs = 1000;
        let stat = |rep: u64| {
            let x = sampler.sample(4, SeedSpec::new(2024, rep)).unwrap();
            x.values().iter().sum::<f64>()
        };
        let (a, b): (Vec<f64>, Vec<f64>) = (0..pairs as u64).map(|r| (stat(2 * r), stat(2 * r + 1))).unzip();
        let (ma, mb) = (a.iter().sum::<f64>() / pairs as f64, b.iter().sum::<f64>() / pairs as f64);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 4.0 / (pairs as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn entry_law_names() {
        for law in [EntryLaw::StdNormal, EntryLaw::CenteredGamma] {
            assert_eq!(EntryLaw::parse(law.name()), Some(law));
        }
        assert_eq!(EntryLaw::parse("cauchy"), None);
    }
}
