use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sphericity::montecarlo::{parse_plan, run_size_power, ExperimentPlan, RunOptions, SimulationReport};

use crate::{bundled_plan, read_file, Format, Outcome};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Plan file, or the name of a bundled plan (see `sphericity plans`).
    #[arg(long)]
    pub plan: String,
    /// Directory for `<plan name>.csv` and `<plan name>.manifest`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Overrides the plan's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the plan's replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// What to print on stdout; the files are always written.
    #[arg(long, value_enum, default_value_t)]
    pub output: Format,
}

#[derive(Serialize)]
struct JsonCell<'a> {
    p: usize,
    n: usize,
    test: &'static str,
    scenario: &'a str,
    rate: f64,
    stderr: f64,
    replications: usize,
    degenerate: usize,
    seed: u64,
    theory: Option<f64>,
    theory_outside_regime: Option<bool>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    plan: &'a str,
    manifest: Vec<(&'a str, &'a str)>,
    cells: Vec<JsonCell<'a>>,
}

pub fn load_plan(spec: &str) -> Result<ExperimentPlan, String> {
    let path = PathBuf::from(spec);
    let text = if path.is_file() {
        read_file(&path)?
    } else if let Some(text) = bundled_plan(spec) {
        text.to_string()
    } else {
        return Err(format!("'{spec}' is neither a plan file nor a bundled plan"));
    };
    parse_plan(&text).map_err(|e| format!("{spec}: {e}"))
}

fn to_json(report: &SimulationReport) -> Result<String, String> {
    let json = JsonReport {
        plan: &report.plan.name,
        manifest: report
            .manifest
            .entries
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect(),
        cells: report
            .cells
            .iter()
            .map(|c| JsonCell {
                p: c.p,
                n: c.n,
                test: c.test.name(),
                scenario: &c.scenario,
                rate: c.rate(),
                stderr: c.stderr(),
                replications: c.replications,
                degenerate: c.degenerate,
                seed: c.seed,
                theory: c.theory.map(|t| t.power),
                theory_outside_regime: c.theory.map(|t| t.outside_regime),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&json).map_err(|e| e.to_string())
}

pub fn run(args: &SimulateArgs) -> Result<Outcome, String> {
    let mut plan = load_plan(&args.plan)?;
    if let Some(seed) = args.seed {
        plan.master_seed = seed;
    }
    if let Some(reps) = args.reps {
        plan.replications = reps;
    }
    let report = run_size_power(&plan, &RunOptions { workers: args.workers }).map_err(|e| e.to_string())?;
    let stem = plan.name.replace(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '_'), "_");
    let (csv, manifest) = report
        .write_files(&args.out_dir, &stem)
        .map_err(|e| format!("cannot write to {}: {e}", args.out_dir.display()))?;
    match args.output {
        Format::Table => print!("{}", report.to_table()),
        Format::Csv => print!("{}", report.to_csv()),
        Format::Json => println!("{}", to_json(&report)?),
    }
    eprintln!(
        "wrote {} and {} ({:.1}s)",
        csv.display(),
        manifest.display(),
        report.runtime.as_secs_f64()
    );
    Ok(Outcome::Clean)
}
