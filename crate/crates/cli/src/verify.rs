use clap::Args;
use serde::Serialize;
use sphericity::contour::{correction_integral, TestFunction, DEFAULT_NODES};
use sphericity::montecarlo::{parse_sigma, sigma_label, verify_lemma_moments, Lemma};
use sphericity::populations::{EntryLaw, PopulationSpec};
use sphericity::power::SigmaSpec;

use crate::output::{csv_line, full, render, sig};
use crate::{Format, Outcome};

#[derive(Args, Debug)]
pub struct ContourArgs {
    /// Functions to integrate: f1 (x^2), f2 (x), f3 (log).
    #[arg(long = "function", value_delimiter = ',', value_parser = parse_function)]
    pub functions: Vec<TestFunction>,
    /// Sample sizes; replaces the default grid's values.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Dimensions; replaces the default grid's values.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = crate::test_cmd::parse_nu4)]
    pub nu4: Vec<f64>,
    /// Contour radius; each function's default when omitted.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t)]
    pub output: Format,
}

fn parse_function(s: &str) -> Result<TestFunction, String> {
    TestFunction::parse(s).ok_or_else(|| format!("unknown function '{s}' (expected f1, f2 or f3)"))
}

/// Allowed `|numeric − closed form|`. `f₃`'s closed form drops an
/// `o(n²/p)` remainder, so its band only makes sense for large `p`.
pub fn tolerance(f: TestFunction) -> f64 {
    match f {
        TestFunction::F1 => 1e-6,
        TestFunction::F2 => 1e-8,
        TestFunction::F3 => 5e-6,
    }
}

fn default_axes(f: TestFunction) -> (Vec<usize>, Vec<usize>) {
    match f {
        TestFunction::F1 | TestFunction::F2 => (vec![4, 8, 16], vec![10_000, 1_000_000]),
        TestFunction::F3 => (vec![4, 8], vec![1_000_000]),
    }
}

#[derive(Serialize)]
struct ContourRow {
    function: &'static str,
    n: usize,
    p: usize,
    nu4: f64,
    rho: f64,
    nodes: usize,
    numeric: f64,
    imag: f64,
    closed_form: f64,
    diff: f64,
    tolerance: f64,
    pass: bool,
}

pub fn contour(args: &ContourArgs) -> Result<Outcome, String> {
    let functions = if args.functions.is_empty() {
        TestFunction::ALL.to_vec()
    } else {
        args.functions.clone()
    };
    let nu4s = if args.nu4.is_empty() { vec![3.0, 4.5] } else { args.nu4.clone() };
    let mut rows = Vec::new();
    for f in functions {
        let (dn, dp) = default_axes(f);
        let ns = if args.n.is_empty() { dn } else { args.n.clone() };
        let ps = if args.p.is_empty() { dp } else { args.p.clone() };
        for &n in &ns {
            for &p in &ps {
                for &nu4 in &nu4s {
                    let rho = args.rho.unwrap_or_else(|| f.default_rho(n, p));
                    let r = correction_integral(f, n, p, nu4, rho, args.nodes)
                        .map_err(|e| format!("{f} at n = {n}, p = {p}: {e}"))?;
                    rows.push(ContourRow {
                        function: f.name(),
                        n,
                        p,
                        nu4,
                        rho,
                        nodes: args.nodes,
                        numeric: r.numeric,
                        imag: r.imag,
                        closed_form: r.closed_form,
                        diff: r.diff(),
                        tolerance: tolerance(f),
                        pass: r.diff() <= tolerance(f),
                    });
                }
            }
        }
    }

    match args.output {
        Format::Table => {
            let mut table = vec![[
                "function", "n", "p", "nu4", "rho", "nodes", "numeric", "closed_form", "|diff|", "tol", "",
            ]
            .map(String::from)
            .to_vec()];
            for r in &rows {
                table.push(vec![
                    r.function.into(),
                    r.n.to_string(),
                    r.p.to_string(),
                    sig(r.nu4),
                    sig(r.rho),
                    r.nodes.to_string(),
                    sig(r.numeric),
                    sig(r.closed_form),
                    sig(r.diff),
                    sig(r.tolerance),
                    if r.pass { "ok".into() } else { "FAIL".into() },
                ]);
            }
            print!("{}", render(&table));
        }
        Format::Csv => {
            println!("function,n,p,nu4,rho,nodes,numeric,imag,closed_form,diff,tolerance,pass");
            for r in &rows {
                print!(
                    "{}",
                    csv_line(&[
                        r.function.into(),
                        r.n.to_string(),
                        r.p.to_string(),
                        full(r.nu4),
                        full(r.rho),
                        r.nodes.to_string(),
                        full(r.numeric),
                        full(r.imag),
                        full(r.closed_form),
                        full(r.diff),
                        full(r.tolerance),
                        r.pass.to_string(),
                    ])
                );
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?),
    }
    Ok(if rows.iter().all(|r| r.pass) { Outcome::Clean } else { Outcome::ChecksFailed })
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    /// L1 or L2 (null), L3 or L4 (any covariance).
    #[arg(long, default_value = "L1", value_parser = parse_lemma)]
    pub which: Lemma,
    /// Entry law: normal or gamma.
    #[arg(long, default_value = "normal", value_parser = parse_law)]
    pub population: EntryLaw,
    /// Covariance: identity, scaled(s) or twopoint(a, b, delta).
    #[arg(long, default_value = "identity", value_parser = parse_sigma)]
    pub sigma: SigmaSpec,
    #[arg(long, default_value_t = 6400)]
    pub p: usize,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub output: Format,
}

fn parse_lemma(s: &str) -> Result<Lemma, String> {
    Lemma::parse(s).ok_or_else(|| format!("unknown lemma '{s}' (expected L1, L2, L3 or L4)"))
}

fn parse_law(s: &str) -> Result<EntryLaw, String> {
    EntryLaw::parse(s).ok_or_else(|| format!("unknown population '{s}' (expected normal or gamma)"))
}

#[derive(Serialize)]
struct JsonCheck<'a> {
    label: &'a str,
    observed: f64,
    target: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct JsonLemma<'a> {
    which: &'static str,
    population: &'static str,
    sigma: String,
    p: usize,
    n: usize,
    nu4: f64,
    replications: usize,
    seed: u64,
    mean: [f64; 2],
    covariance: [[f64; 2]; 2],
    target_covariance: [[f64; 2]; 2],
    exact_covariance: Option<f64>,
    checks: Vec<JsonCheck<'a>>,
}

pub fn lemma(args: &LemmaArgs) -> Result<Outcome, String> {
    let population = PopulationSpec::new(args.population, args.sigma.clone());
    let r = verify_lemma_moments(args.which, &population, args.p, args.n, args.reps, args.seed, args.workers)
        .map_err(|e| e.to_string())?;

    match args.output {
        Format::Table => {
            println!(
                "{} at (p, n) = ({}, {}), {} replications, {} entries, sigma {}",
                r.which,
                r.p,
                r.n,
                r.replications,
                args.population,
                sigma_label(&args.sigma)
            );
            let mut table = vec![["check", "observed", "target", "tolerance", ""].map(String::from).to_vec()];
            for c in &r.checks {
                table.push(vec![
                    c.label.clone(),
                    sig(c.observed),
                    sig(c.target),
                    sig(c.tolerance),
                    if c.pass() { "ok".into() } else { "FAIL".into() },
                ]);
            }
            print!("{}", render(&table));
            if let Some(exact) = r.exact_covariance {
                let se = r.covariance_stderr[0][1];
                println!(
                    "exact finite-sample cov {} (observed {} is {} se from it); the limit 0 is approached like sqrt(n/p)",
                    sig(exact),
                    sig(r.covariance[0][1]),
                    sig((r.covariance[0][1] - exact) / se)
                );
            }
        }
        Format::Csv => {
            println!("check,observed,target,tolerance,pass");
            for c in &r.checks {
                print!(
                    "{}",
                    csv_line(&[
                        format!("\"{}\"", c.label),
                        full(c.observed),
                        full(c.target),
                        full(c.tolerance),
                        c.pass().to_string(),
                    ])
                );
            }
        }
        Format::Json => {
            let json = JsonLemma {
                which: r.which.name(),
                population: args.population.name(),
                sigma: sigma_label(&args.sigma),
                p: r.p,
                n: r.n,
                nu4: r.nu4,
                replications: r.replications,
                seed: args.seed,
                mean: r.mean,
                covariance: r.covariance,
                target_covariance: r.target_covariance,
                exact_covariance: r.exact_covariance,
                checks: r
                    .checks
                    .iter()
                    .map(|c| JsonCheck {
                        label: &c.label,
                        observed: c.observed,
                        target: c.target,
                        tolerance: c.tolerance,
                        pass: c.pass(),
                    })
                    .collect(),
            };
            println!("{}", serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?);
        }
    }
    Ok(if r.pass() { Outcome::Clean } else { Outcome::ChecksFailed })
}
