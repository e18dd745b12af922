use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::populations::{EntryLaw, GAMMA_METHOD, GAUSSIAN_METHOD, GENERATOR};
use crate::power::PowerPrediction;
use crate::stats::StatisticKind;

use super::plan::{sigma_label, ExperimentPlan, Layout};

pub const CSV_HEADER: &str = "p,n,test,scenario,rate,stderr,replications,seed";

/// Rejection tally for one `(p, n, test, scenario)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub p: usize,
    pub n: usize,
    pub test: StatisticKind,
    pub scenario: String,
    pub entry: EntryLaw,
    /// Covariance in plan-file spelling.
    pub sigma: String,
    pub rejections: usize,
    /// Replicates whose statistic was degenerate; counted as rejections too.
    pub degenerate: usize,
    pub replications: usize,
    /// The derived cell seed.
    pub seed: u64,
    /// Closed-form power, for John's test and the quasi-LRT.
    pub theory: Option<PowerPrediction>,
}

impl CellResult {
    pub fn rate(&self) -> f64 {
        self.rejections as f64 / self.replications as f64
    }

    /// `sqrt(r (1 − r) / replications)`.
    pub fn stderr(&self) -> f64 {
        let r = self.rate();
        (r * (1.0 - r) / self.replications as f64).sqrt()
    }
}

/// Ordered `key = value` pairs describing how a report was produced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn for_plan(plan: &ExperimentPlan) -> Self {
        let join = |items: Vec<String>| items.join(",");
        let mut entries = vec![
            ("plan".to_string(), plan.name.clone()),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ("master_seed".into(), plan.master_seed.to_string()),
            (
                "cell_seed".into(),
                "splitmix64 chain over master seed, p, n, fnv1a(scenario)".into(),
            ),
            ("generator".into(), GENERATOR.into()),
            ("gaussian".into(), GAUSSIAN_METHOD.into()),
            ("gamma".into(), GAMMA_METHOD.into()),
            ("level".into(), plan.level.to_string()),
            ("replications".into(), plan.replications.to_string()),
            ("tests".into(), join(plan.tests.iter().map(|t| t.name().to_string()).collect())),
            ("grid".into(), join(plan.grid.iter().map(|(p, n)| format!("{p}x{n}")).collect())),
            ("layout".into(), plan.layout.name().into()),
        ];
        for s in &plan.scenarios {
            entries.push((
                format!("scenario.{}", s.name),
                format!(
                    "{}, {}, nu4={}",
                    s.population.entry,
                    sigma_label(&s.population.sigma),
                    s.population.nu4()
                ),
            ));
        }
        Self { entries }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub plan: ExperimentPlan,
    pub cells: Vec<CellResult>,
    pub manifest: Manifest,
    /// Wall time; never serialized, so reports stay reproducible.
    pub runtime: Duration,
}

/// `x` with `digits` significant digits, trailing zeros removed (like `%g`).
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim(mantissa.to_string()))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    }
}

fn short(test: StatisticKind) -> &'static str {
    match test {
        StatisticKind::John => "John",
        StatisticKind::Qlrt => "QLRT",
        StatisticKind::Chen => "Chen",
        StatisticKind::Srivastava => "Sri",
    }
}

fn unique<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn render(header: &[Vec<String>], rows: &[Vec<String>]) -> String {
    let cols = header.iter().chain(rows).map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0; cols];
    for r in header.iter().chain(rows) {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |r: &Vec<String>| {
        let mut s = String::new();
        for (i, w) in widths.iter().enumerate() {
            let c = r.get(i).map(String::as_str).unwrap_or("");
            let _ = write!(s, "{c:<w$}  ");
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    header.iter().for_each(&mut line);
    rows.iter().for_each(&mut line);
    out
}

impl SimulationReport {
    pub fn find(&self, p: usize, n: usize, test: StatisticKind, scenario: &str) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.p == p && c.n == n && c.test == test && c.scenario == scenario)
    }

    /// The report as CSV with every float at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.16e},{:.16e},{},{}",
                c.p,
                c.n,
                c.test.name(),
                c.scenario,
                c.rate(),
                c.stderr(),
                c.replications,
                c.seed
            );
        }
        out
    }

    /// A human-readable table with 6 significant digits.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{} ({} replications, level {})\n",
            self.plan.name,
            self.plan.replications,
            format_sig(self.plan.level, 6)
        );
        out.push_str(&match self.plan.layout {
            Layout::Grid => self.grid_table(),
            Layout::Power => self.power_table(),
        });
        let degenerate: usize = self.cells.iter().map(|c| c.degenerate).sum();
        if degenerate > 0 {
            let _ = writeln!(out, "degenerate replicates (counted as rejections): {degenerate}");
        }
        if self
            .cells
            .iter()
            .any(|c| c.theory.is_some_and(|t| t.outside_regime))
        {
            out.push_str("note: theory flagged where n^3/p > 1000\n");
        }
        out
    }

    fn cell(&self, pred: impl Fn(&CellResult) -> bool) -> Option<&CellResult> {
        self.cells.iter().find(|c| pred(c))
    }

    fn grid_table(&self) -> String {
        let tests = &self.plan.tests;
        let scenarios = unique(self.cells.iter().map(|c| c.scenario.clone()));
        let mut groups = vec![String::new()];
        let mut names = vec!["(p,n)".to_string()];
        for s in &scenarios {
            for (i, t) in tests.iter().enumerate() {
                groups.push(if i == 0 { s.clone() } else { String::new() });
                names.push(short(*t).into());
            }
        }
        let rows: Vec<Vec<String>> = self
            .plan
            .grid
            .iter()
            .map(|&(p, n)| {
                let mut row = vec![format!("({p},{n})")];
                for s in &scenarios {
                    for &t in tests {
                        row.push(
                            self.find(p, n, t, s)
                                .map_or("-".into(), |c| format_sig(c.rate(), 6)),
                        );
                    }
                }
                row
            })
            .collect();
        render(&[groups, names], &rows)
    }

    fn power_table(&self) -> String {
        let tests = &self.plan.tests;
        let laws = unique(self.cells.iter().map(|c| c.entry));
        let keys = unique(self.cells.iter().map(|c| (c.p, c.n, c.sigma.clone())));
        let mut groups = vec![String::new(), String::new()];
        let mut names = vec!["(p,n)".to_string(), "sigma".to_string()];
        for law in &laws {
            for (i, t) in tests.iter().enumerate() {
                groups.push(if i == 0 { law.name().into() } else { String::new() });
                groups.push(String::new());
                names.push(format!("{} emp", short(*t)));
                names.push(format!("{} theory", short(*t)));
            }
        }
        let rows: Vec<Vec<String>> = keys
            .iter()
            .map(|(p, n, sigma)| {
                let mut row = vec![format!("({p},{n})"), sigma.clone()];
                for &law in &laws {
                    for &t in tests {
                        let c = self.cell(|c| {
                            c.p == *p && c.n == *n && &c.sigma == sigma && c.entry == law && c.test == t
                        });
                        row.push(c.map_or("-".into(), |c| format_sig(c.rate(), 6)));
                        row.push(
                            c.and_then(|c| c.theory)
                                .map_or("-".into(), |th| format_sig(th.power, 6)),
                        );
                    }
                }
                row
            })
            .collect();
        render(&[groups, names], &rows)
    }

    /// Writes `<stem>.csv` and `<stem>.manifest` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        let manifest = dir.join(format!("{stem}.manifest"));
        std::fs::write(&csv, self.to_csv())?;
        std::fs::write(&manifest, self.manifest.to_text())?;
        Ok((csv, manifest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0481, 6), "0.0481");
        assert_eq!(format_sig(0.95815, 6), "0.95815");
        assert_eq!(format_sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(format_sig(-1.5, 6), "-1.5");
        assert_eq!(format_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(format_sig(3.167124183311986e-05, 6), "3.16712e-5");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(f64::INFINITY, 6), "inf");
        assert_eq!(format_sig(9.9999999, 6), "10");
    }

    #[test]
    fn stderr_formula() {
        let c = CellResult {
            p: 320,
            n: 64,
            test: StatisticKind::John,
            scenario: "size".into(),
            entry: EntryLaw::StdNormal,
            sigma: "identity".into(),
            rejections: 100,
            degenerate: 0,
            replications: 2000,
            seed: 1,
            theory: None,
        };
        assert_eq!(c.rate(), 0.05);
        assert!((c.stderr() - (0.05f64 * 0.95 / 2000.0).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn manifest_round_trip() {
        let m = Manifest {
            entries: vec![("a".into(), "1".into()), ("scenario.x".into(), "normal, identity".into())],
        };
        assert_eq!(Manifest::parse(&m.to_text()), m);
        assert_eq!(m.get("scenario.x"), Some("normal, identity"));
    }
}
