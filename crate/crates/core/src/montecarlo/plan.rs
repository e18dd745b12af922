//! Experiment plans in a line-oriented `key = value` format.
//!
//! ```text
//! # comments start with '#'
//! name = table1-desk
//! grid = 320x64, 1280x64, 3200x64     # p x n
//! tests = sri, chen, john, qlrt
//! level = 0.05
//! replications = 2000
//! seed = 20240601
//! layout = grid                        # or: power
//! scenario = size: normal, identity
//! scenario = power1: normal, twopoint(0.5, 1, 0.5)
//! ```
//!
//! A scenario is `name: law, sigma` with `law` one of `normal`, `gamma` and
//! `sigma` one of `identity`, `scaled(s)`, `twopoint(a, b, delta)`. In
//! `twopoint`, `delta` is the proportion of diagonal entries equal to `b`.
//! `scenario` may repeat; every other key appears once.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::populations::{EntryLaw, PopulationSpec};
use crate::power::SigmaSpec;
use crate::stats::StatisticKind;

/// Fewest replications a plan may request.
pub const MIN_REPLICATIONS: usize = 100;

/// Row and column arrangement of the human-readable report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Layout {
    /// Rows are `(p, n)` cells, column groups are scenarios, columns tests.
    #[default]
    Grid,
    /// Rows are `(p, n, Σ)`, column groups are entry laws, columns are
    /// tests with empirical and theoretical power side by side.
    Power,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Power => "power",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub population: PopulationSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub name: String,
    /// `(p, n)` cells.
    pub grid: Vec<(usize, usize)>,
    pub tests: Vec<StatisticKind>,
    pub scenarios: Vec<Scenario>,
    pub level: f64,
    pub replications: usize,
    pub master_seed: u64,
    pub layout: Layout,
}

impl ExperimentPlan {
    /// Checks the plan invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Err(Error::InvalidParameter(message));
        if self.grid.is_empty() {
            return bad("plan has an empty grid".into());
        }
        if let Some((p, n)) = self.grid.iter().find(|(p, n)| *p == 0 || *n < 4) {
            return bad(format!("grid cell {p}x{n}: p must be positive and n at least 4"));
        }
        if self.tests.is_empty() {
            return bad("plan lists no tests".into());
        }
        if self.scenarios.is_empty() {
            return bad("plan has no scenarios".into());
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if !valid_name(&s.name) {
                return bad(format!("scenario name {:?} must be alphanumeric, '-', '_' or '.'", s.name));
            }
            if self.scenarios[..i].iter().any(|t| t.name == s.name) {
                return bad(format!("duplicate scenario {:?}", s.name));
            }
            for &(p, _) in &self.grid {
                s.population.sigma.validate(p)?;
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        if self.replications < MIN_REPLICATIONS {
            return bad(format!(
                "replications must be at least {MIN_REPLICATIONS}, got {}",
                self.replications
            ));
        }
        Ok(())
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl FromStr for ExperimentPlan {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_plan(text)
    }
}

/// Parses and validates a plan.
pub fn parse_plan(text: &str) -> Result<ExperimentPlan> {
    let mut name = None;
    let mut grid = None;
    let mut tests = None;
    let mut level = None;
    let mut replications = None;
    let mut seed = None;
    let mut layout = None;
    let mut scenarios = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let err = |message: String| Error::PlanParse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());

        fn once<T>(slot: &mut Option<T>, v: T, key: &str, err: impl Fn(String) -> Error) -> Result<()> {
            if slot.is_some() {
                return Err(err(format!("duplicate key {key:?}")));
            }
            *slot = Some(v);
            Ok(())
        }

        match key {
            "name" => once(&mut name, value.to_string(), key, err)?,
            "grid" => once(&mut grid, parse_grid(value).map_err(err)?, key, err)?,
            "tests" => once(&mut tests, parse_tests(value).map_err(err)?, key, err)?,
            "level" => once(&mut level, parse_number::<f64>(value, key).map_err(err)?, key, err)?,
            "replications" => {
                let r = parse_number::<usize>(value, key).map_err(err)?;
                if r < MIN_REPLICATIONS {
                    return Err(err(format!(
                        "replications must be at least {MIN_REPLICATIONS}, got {r}"
                    )));
                }
                once(&mut replications, r, key, err)?
            }
            "seed" => once(&mut seed, parse_number::<u64>(value, key).map_err(err)?, key, err)?,
            "layout" => {
                let l = match value {
                    "grid" => Layout::Grid,
                    "power" => Layout::Power,
                    other => return Err(err(format!("unknown layout {other:?}"))),
                };
                once(&mut layout, l, key, err)?
            }
            "scenario" => scenarios.push(parse_scenario(value).map_err(err)?),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }

    let missing = |key: &str| Error::PlanParse {
        line: 0,
        message: format!("missing required key {key:?}"),
    };
    let plan = ExperimentPlan {
        name: name.unwrap_or_else(|| "plan".into()),
        grid: grid.ok_or_else(|| missing("grid"))?,
        tests: tests.ok_or_else(|| missing("tests"))?,
        scenarios,
        level: level.unwrap_or(0.05),
        replications: replications.ok_or_else(|| missing("replications"))?,
        master_seed: seed.ok_or_else(|| missing("seed"))?,
        layout: layout.unwrap_or_default(),
    };
    plan.validate().map_err(|e| Error::PlanParse {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(plan)
}

fn parse_number<T: FromStr>(value: &str, key: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("{key}: cannot parse {value:?}: {e}"))
}

fn parse_grid(value: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    value
        .split(',')
        .map(|cell| {
            let cell = cell.trim();
            let (p, n) = cell
                .split_once('x')
                .ok_or_else(|| format!("grid cell {cell:?} is not of the form PxN"))?;
            Ok((parse_number(p.trim(), "p")?, parse_number(n.trim(), "n")?))
        })
        .collect()
}

fn parse_tests(value: &str) -> std::result::Result<Vec<StatisticKind>, String> {
    let mut out: Vec<StatisticKind> = Vec::new();
    for t in value.split(',') {
        let kind = StatisticKind::parse(t).ok_or_else(|| format!("unknown test {:?}", t.trim()))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

fn parse_scenario(value: &str) -> std::result::Result<Scenario, String> {
    let (name, rest) = value
        .split_once(':')
        .ok_or_else(|| format!("scenario {value:?} is not of the form name: law, sigma"))?;
    let (law, sigma) = rest
        .split_once(',')
        .ok_or_else(|| format!("scenario {value:?} is missing a covariance"))?;
    let entry = EntryLaw::parse(law).ok_or_else(|| format!("unknown entry law {:?}", law.trim()))?;
    let sigma = parse_sigma(sigma)?;
    Ok(Scenario {
        name: name.trim().to_string(),
        population: PopulationSpec::new(entry, sigma),
    })
}

/// Parses `identity`, `scaled(s)` or `twopoint(a, b, delta)`.
pub fn parse_sigma(value: &str) -> std::result::Result<SigmaSpec, String> {
    let value = value.trim();
    if value == "identity" {
        return Ok(SigmaSpec::identity());
    }
    let (head, args) = value
        .strip_suffix(')')
        .and_then(|v| v.split_once('('))
        .ok_or_else(|| format!("unknown covariance {value:?}"))?;
    let args: Vec<f64> = args
        .split(',')
        .map(|a| parse_number(a.trim(), head.trim()))
        .collect::<std::result::Result<_, _>>()?;
    match (head.trim(), args.as_slice()) {
        ("scaled", &[sigma2]) => Ok(SigmaSpec::ScaledIdentity { sigma2 }),
        ("twopoint", &[a, b, delta]) => Ok(SigmaSpec::TwoPointDiagonal { a, b, delta }),
        _ => Err(format!("unknown covariance {value:?}")),
    }
}

/// The plan-file spelling of a covariance.
pub fn sigma_label(s: &SigmaSpec) -> String {
    match s {
        SigmaSpec::ScaledIdentity { sigma2 } if *sigma2 == 1.0 => "identity".into(),
        SigmaSpec::ScaledIdentity { sigma2 } => format!("scaled({sigma2})"),
        SigmaSpec::TwoPointDiagonal { a, b, delta } => format!("twopoint({a},{b},{delta})"),
        SigmaSpec::ExplicitDiagonal(d) => format!("diagonal[{}]", d.len()),
        SigmaSpec::ExplicitSpd(m) => format!("spd[{}x{}]", m.nrows(), m.ncols()),
    }
}
