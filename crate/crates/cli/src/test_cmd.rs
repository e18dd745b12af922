use std::io::Read;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sphericity::calibration::{estimate_nu4, standardize, NullModel, TestResult};
use sphericity::matrix::{CompanionGram, DataMatrix, SpectralSummary};
use sphericity::stats::{chen_un_from_gram, john_u, qlrt_l, srivastava_wn, StatisticKind};

use crate::output::{csv_line, full, render, sig};
use crate::{input, read_file, Format, Outcome};

#[derive(Args, Debug)]
pub struct TestArgs {
    /// CSV file with one row per variable and one column per observation; `-` reads stdin.
    #[arg(value_name = "INPUT")]
    pub input: PathBuf,
    /// Skip the first CSV row.
    #[arg(long)]
    pub header: bool,
    /// Comma-separated tests: john, qlrt, chen, sri.
    #[arg(long, value_delimiter = ',', default_value = "john,qlrt", value_parser = parse_test)]
    pub tests: Vec<StatisticKind>,
    #[arg(long, default_value_t = 0.05, value_parser = parse_level)]
    pub level: f64,
    /// Fourth moment of the standardized entries; estimated from the data when omitted.
    #[arg(long, value_parser = parse_nu4)]
    pub nu4: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub output: Format,
}

pub fn parse_test(s: &str) -> Result<StatisticKind, String> {
    StatisticKind::parse(s).ok_or_else(|| format!("unknown test '{s}' (expected john, qlrt, chen or sri)"))
}

pub fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("level must lie in (0, 1), got {v}"))
    }
}

pub fn parse_nu4(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("nu4 must be a finite number >= 1, got {v}"))
    }
}

#[derive(Serialize)]
struct JsonResult {
    test: &'static str,
    null_model: &'static str,
    statistic: f64,
    /// `None` for a degenerate statistic, whose z is +inf.
    z: Option<f64>,
    p_value: f64,
    degenerate: bool,
    reject: bool,
}

#[derive(Serialize)]
struct JsonReport {
    p: usize,
    n: usize,
    level: f64,
    nu4: f64,
    nu4_estimated: bool,
    results: Vec<JsonResult>,
}

fn load(args: &TestArgs) -> Result<DataMatrix, String> {
    if args.input.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| format!("cannot read stdin: {e}"))?;
        input::read_matrix(text.as_bytes(), args.header)
    } else {
        let text = read_file(&args.input)?;
        input::read_matrix(text.as_bytes(), args.header).map_err(|e| format!("{}: {e}", args.input.display()))
    }
}

/// Computes and standardizes every requested test.
pub fn evaluate(x: &DataMatrix, tests: &[StatisticKind], nu4: f64) -> Result<Vec<TestResult>, String> {
    let gram = CompanionGram::new(x);
    let summary = SpectralSummary {
        n: gram.n(),
        p: gram.p(),
        trace1: gram.trace1(),
        trace2: gram.trace2(),
        logdet: None,
        eigenvalues: None,
    };
    let mut results = Vec::new();
    for &kind in tests {
        let stat = match kind {
            StatisticKind::John => john_u(&summary),
            StatisticKind::Srivastava => srivastava_wn(&summary),
            StatisticKind::Chen => chen_un_from_gram(&gram),
            StatisticKind::Qlrt => gram.logdet().and_then(|logdet| {
                qlrt_l(&SpectralSummary {
                    logdet: Some(logdet),
                    ..summary.clone()
                })
            }),
        }
        .map_err(|e| format!("{}: {e}", kind.name()))?;
        let model = NullModel::for_statistic(&stat, nu4).map_err(|e| e.to_string())?;
        results.push(standardize(&stat, &model).map_err(|e| e.to_string())?);
    }
    Ok(results)
}

pub fn run(args: &TestArgs) -> Result<Outcome, String> {
    let x = load(args)?;
    let (p, n) = (x.p(), x.n());
    if p <= n {
        eprintln!(
            "warning: p = {p} <= n = {n}. These calibrations target p much larger than n; \
             John's test keeps its size across regimes, the quasi-LRT needs p > n."
        );
    }
    let (nu4, estimated) = match args.nu4 {
        Some(v) => (v, false),
        None => {
            let v = estimate_nu4(&x).map_err(|e| e.to_string())?;
            eprintln!("note: nu4 estimated from the data as {}; pass --nu4 to set it", sig(v));
            (v, true)
        }
    };
    let results = evaluate(&x, &args.tests, nu4)?;
    let mut rejected = false;
    let mut decisions = Vec::new();
    for r in &results {
        let reject = r.reject_at(args.level).map_err(|e| e.to_string())?;
        rejected |= reject;
        decisions.push(reject);
    }

    match args.output {
        Format::Table => {
            println!(
                "p = {p}, n = {n}, nu4 = {} ({})",
                sig(nu4),
                if estimated { "estimated" } else { "given" }
            );
            let mut rows = vec![vec![
                "test".to_string(),
                "statistic".into(),
                "z".into(),
                "p-value".into(),
                format!("decision at {}", sig(args.level)),
            ]];
            for (r, &reject) in results.iter().zip(&decisions) {
                rows.push(vec![
                    r.statistic.kind.name().into(),
                    if r.statistic.degenerate { "degenerate".into() } else { sig(r.statistic.value) },
                    sig(r.z),
                    sig(r.p_value),
                    if reject { "reject".into() } else { "accept".into() },
                ]);
            }
            print!("{}", render(&rows));
        }
        Format::Csv => {
            println!("test,statistic,z,p_value,reject,level,nu4,nu4_estimated,p,n");
            for (r, &reject) in results.iter().zip(&decisions) {
                print!(
                    "{}",
                    csv_line(&[
                        r.statistic.kind.name().into(),
                        full(r.statistic.value),
                        full(r.z),
                        full(r.p_value),
                        reject.to_string(),
                        full(args.level),
                        full(nu4),
                        estimated.to_string(),
                        p.to_string(),
                        n.to_string(),
                    ])
                );
            }
        }
        Format::Json => {
            let report = JsonReport {
                p,
                n,
                level: args.level,
                nu4,
                nu4_estimated: estimated,
                results: results
                    .iter()
                    .zip(&decisions)
                    .map(|(r, &reject)| JsonResult {
                        test: r.statistic.kind.name(),
                        null_model: r.null_model.kind.name(),
                        statistic: r.statistic.value,
                        z: r.z.is_finite().then_some(r.z),
                        p_value: r.p_value,
                        degenerate: r.statistic.degenerate,
                        reject,
                    })
                    .collect(),
            };
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
        }
    }
    Ok(if rejected { Outcome::Rejected } else { Outcome::Clean })
}
