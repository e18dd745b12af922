//! Replication engine for empirical size and power, and moment checks for the
//! spectral limit theorems behind the tests.
//!
//! Each `(p, n, scenario)` cell gets its own seed derived from the master
//! seed, the cell dimensions and the scenario name. Replicate `r` of a cell
//! draws from stream `r` of that seed, so results do not depend on the number
//! of workers or the order in which they finish.

mod lemmas;
mod plan;
mod report;

use std::time::Instant;

use rayon::prelude::*;

use crate::calibration::{standardize, NullModel};
use crate::error::{Error, Result};
use crate::matrix::{CompanionGram, SpectralSummary};
use crate::normal;
use crate::populations::{Sampler, SeedSpec};
use crate::power::{functionals, john_power, qlrt_power, PowerPrediction};
use crate::stats::{chen_un_from_gram, john_u, qlrt_l, srivastava_wn, StatisticKind, StatisticValue};

pub use lemmas::{l1_exact_covariance, verify_lemma_moments, Lemma, LemmaCheck, LemmaReport};
pub use plan::{parse_plan, parse_sigma, sigma_label, ExperimentPlan, Layout, Scenario, MIN_REPLICATIONS};
pub use report::{format_sig, CellResult, Manifest, SimulationReport, CSV_HEADER};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's global pool.
    pub workers: Option<usize>,
}

/// Runs `f` on a pool with the requested number of workers.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("workers must be positive".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a; stable across platforms and toolchains, unlike std's hasher
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// The seed of one `(p, n, scenario)` cell.
pub fn cell_seed(master_seed: u64, p: usize, n: usize, scenario: &str) -> u64 {
    let mut s = splitmix64(master_seed);
    for v in [p as u64, n as u64, name_hash(scenario)] {
        s = splitmix64(s ^ v);
    }
    s
}

/// All requested statistics for one data set, drawn from a single companion
/// matrix. A singular companion makes the quasi-LRT degenerate.
pub fn statistics_for(gram: &CompanionGram, tests: &[StatisticKind]) -> Result<Vec<StatisticValue>> {
    let summary = SpectralSummary {
        n: gram.n(),
        p: gram.p(),
        trace1: gram.trace1(),
        trace2: gram.trace2(),
        logdet: None,
        eigenvalues: None,
    };
    tests
        .iter()
        .map(|kind| match kind {
            StatisticKind::John => john_u(&summary),
            StatisticKind::Srivastava => srivastava_wn(&summary),
            StatisticKind::Chen => chen_un_from_gram(gram),
            StatisticKind::Qlrt => match gram.logdet() {
                Ok(logdet) => qlrt_l(&SpectralSummary {
                    logdet: Some(logdet),
                    ..summary.clone()
                }),
                Err(Error::SingularGram { .. }) => Ok(StatisticValue::degenerate_qlrt(gram.n(), gram.p())),
                Err(e) => Err(e),
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    rejections: usize,
    degenerate: usize,
}

fn run_cell(
    plan: &ExperimentPlan,
    p: usize,
    n: usize,
    scenario: &Scenario,
    critical: f64,
) -> Result<Vec<Tally>> {
    let sampler = Sampler::new(&scenario.population, p)?;
    let seed = cell_seed(plan.master_seed, p, n, &scenario.name);
    let nu4 = scenario.population.nu4();
    let outcomes: Vec<Vec<(bool, bool)>> = (0..plan.replications as u64)
        .into_par_iter()
        .map(|r| {
            let x = sampler.sample(n, SeedSpec::new(seed, r))?;
            let gram = CompanionGram::new(&x);
            statistics_for(&gram, &plan.tests)?
                .iter()
                .map(|stat| {
                    let result = standardize(stat, &NullModel::for_statistic(stat, nu4)?)?;
                    Ok((stat.degenerate || result.z > critical, stat.degenerate))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut tallies = vec![Tally::default(); plan.tests.len()];
    for replicate in &outcomes {
        for (t, &(reject, degenerate)) in tallies.iter_mut().zip(replicate) {
            t.rejections += reject as usize;
            t.degenerate += degenerate as usize;
        }
    }
    Ok(tallies)
}

/// The closed-form power of John's test or the quasi-LRT for a scenario.
pub fn theory_for(
    kind: StatisticKind,
    scenario: &Scenario,
    p: usize,
    n: usize,
    level: f64,
) -> Result<Option<PowerPrediction>> {
    let f = functionals(&scenario.population.sigma, p)?;
    let nu4 = scenario.population.nu4();
    match kind {
        StatisticKind::John => john_power(&f, nu4, n, p, level).map(Some),
        StatisticKind::Qlrt => qlrt_power(&f, nu4, n, p, level).map(Some),
        StatisticKind::Chen | StatisticKind::Srivastava => Ok(None),
    }
}

/// Runs every `(cell, scenario)` of the plan and tallies rejections at the
/// plan's level, standardizing with each population's true `ν₄`.
pub fn run_size_power(plan: &ExperimentPlan, options: &RunOptions) -> Result<SimulationReport> {
    plan.validate()?;
    let started = Instant::now();
    let critical = normal::upper_quantile(plan.level)?;
    let mut cells = Vec::new();
    with_workers(options.workers, || -> Result<()> {
        for &(p, n) in &plan.grid {
            for scenario in &plan.scenarios {
                let tallies = run_cell(plan, p, n, scenario, critical)?;
                for (&test, tally) in plan.tests.iter().zip(tallies) {
                    cells.push(CellResult {
                        p,
                        n,
                        test,
                        scenario: scenario.name.clone(),
                        entry: scenario.population.entry,
                        sigma: sigma_label(&scenario.population.sigma),
                        rejections: tally.rejections,
                        degenerate: tally.degenerate,
                        replications: plan.replications,
                        seed: cell_seed(plan.master_seed, p, n, &scenario.name),
                        theory: theory_for(test, scenario, p, n, plan.level)?,
                    });
                }
            }
        }
        Ok(())
    })??;
    Ok(SimulationReport {
        manifest: Manifest::for_plan(plan),
        plan: plan.clone(),
        cells,
        runtime: started.elapsed(),
    })
}
