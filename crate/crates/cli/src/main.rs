//! `shadowmean`: estimate, tune, simulate and generate from the command line.
//!
//! Exit codes: 0 on success, 2 for input errors (bad flags, unreadable or
//! inconsistent data, malformed JSON), 3 for numerical failures.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use shadowmean::montecarlo::{write_reps_csv, write_summary_csv};
use shadowmean::{
    estimate, estimate_tuned, load_csv, run_experiment, save_csv, with_threads, Case, CsvSchema, Error,
    EstimatorConfig, EstimatorKind, ExperimentPlan, Missingness, ScenarioSpec, Setting, TauSpec, TuningGrid,
};

#[derive(Parser)]
#[command(name = "shadowmean", version, about = "Mean of a nonignorably missing outcome using a shadow variable")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "SHADOWMEAN_THREADS")]
    threads: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate E{τ(X, Y)} from a CSV file and write the report as JSON.
    Estimate(EstimateArgs),
    /// Choose sieve sizes, C0 and K by 5-fold cross-validation.
    Tune(TuneArgs),
    /// Run a Monte Carlo experiment and write per-replication and summary CSVs.
    Simulate(SimulateArgs),
    /// Draw one dataset from a simulation scenario and write it as CSV.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with columns r, y, x1..xd, z.
    #[arg(long)]
    data: PathBuf,

    /// Functional to average: `y`, `xj_y:<j>` or `col:<name>`.
    #[arg(long, default_value = "y")]
    tau: TauSpec,

    /// Ignore outcome cells on nonresponse rows instead of requiring them empty.
    #[arg(long)]
    lenient: bool,

    /// Estimator settings as JSON (sizes `q_n`, `k_n`, `solver`, `alpha`).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Cross-validate before estimating.
    #[arg(long)]
    tune: bool,

    /// Tuning grid as JSON (used with --tune); defaults to affine and quadratic sieves.
    #[arg(long, requires = "tune")]
    grid: Option<PathBuf>,

    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Tuning grid as JSON; defaults to affine and quadratic sieves.
    #[arg(long)]
    grid: Option<PathBuf>,

    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Simulation case; implied by the setting when omitted.
    #[arg(long)]
    case: Option<Case>,

    /// LL, NL, LN, NN (case I) or Model1, Model2 (case II).
    #[arg(long)]
    setting: Setting,

    /// Sample size.
    #[arg(long)]
    n: usize,

    /// Base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ScenarioArgs {
    fn spec(&self) -> Result<ScenarioSpec, Error> {
        let mut spec = ScenarioSpec::new(self.setting, self.n, self.seed);
        if let Some(case) = self.case {
            spec.case = case;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Number of replications.
    #[arg(long)]
    reps: usize,

    /// Comma-separated subset of REP, REP-DB, IPW-true, IPW-uniform, marREG, marIPW.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<EstimatorKind>>,

    /// Nominal level of the intervals is 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Estimator settings as JSON.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Pilot tuning grid as JSON; defaults to affine and quadratic sieves.
    #[arg(long, conflicts_with = "no_tune")]
    grid: Option<PathBuf>,

    /// Use the configuration as given instead of tuning on a pilot dataset.
    #[arg(long)]
    no_tune: bool,

    /// Directory for reps.csv, summary.csv and summary.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(args: &DataArgs) -> Result<(shadowmean::ObservationTable, EstimatorConfig), Error> {
    let mode = if args.lenient {
        Missingness::Lenient
    } else {
        Missingness::Strict
    };
    let mut schema = CsvSchema::default();
    if let TauSpec::Column(name) = &args.tau {
        schema.extra.push(name.clone());
    }
    let table = load_csv(&args.data, &schema, mode)?;
    let config = match &args.config {
        Some(path) => read_json(path)?,
        None => EstimatorConfig::default(),
    };
    config.validate()?;
    log::info!("{} rows, {} covariates, {} complete", table.n(), table.d(), table.complete_count());
    Ok((table, config))
}

fn grid_for(path: Option<&PathBuf>, d: usize) -> Result<TuningGrid, Error> {
    let grid = match path {
        Some(p) => read_json(p)?,
        None => TuningGrid::default_for(d + 1),
    };
    grid.validate()?;
    Ok(grid)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Error> {
    let (table, config) = load(&args.data)?;
    let report = if args.tune {
        let grid = grid_for(args.grid.as_ref(), table.d())?;
        let (report, outcome) = estimate_tuned(&table, &args.data.tau, &grid, &config)?;
        log::info!("tuning chose {:?}", outcome.chosen);
        report
    } else {
        estimate(&table, &args.data.tau, &config)?
    };
    write_json(&report, args.out.as_deref())
}

fn cmd_tune(args: &TuneArgs) -> Result<(), Error> {
    let (table, config) = load(&args.data)?;
    let grid = grid_for(args.grid.as_ref(), table.d())?;
    let outcome = shadowmean::cross_validate(&table, &args.data.tau, &grid, &config)?;
    log::info!("tuning chose {:?}", outcome.chosen);
    write_json(&outcome, args.out.as_deref())
}

#[derive(Serialize)]
struct SimulationRecord<'a> {
    plan: &'a ExperimentPlan,
    config: &'a EstimatorConfig,
    summary: &'a shadowmean::MonteCarloSummary,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let spec = args.scenario.spec()?;
    let mut plan = ExperimentPlan::new(spec, args.reps, args.scenario.seed);
    plan.alpha = args.alpha;
    if let Some(list) = &args.estimators {
        plan.estimators = list.clone();
    }
    if let Some(path) = &args.config {
        plan.config = read_json(path)?;
    }
    plan.tuning = if args.no_tune {
        None
    } else {
        Some(grid_for(args.grid.as_ref(), spec.covariate_dim())?)
    };
    plan.validate()?;
    let out = run_experiment(&plan)?;
    fs::create_dir_all(&args.out_dir)?;
    write_reps_csv(&out.records, fs::File::create(args.out_dir.join("reps.csv"))?)?;
    write_summary_csv(&out.summary, fs::File::create(args.out_dir.join("summary.csv"))?)?;
    let record = SimulationRecord {
        plan: &plan,
        config: &out.config,
        summary: &out.summary,
    };
    write_json(&record, Some(&args.out_dir.join("summary.json")))?;
    write_summary_csv(&out.summary, io::stdout())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), Error> {
    let truth = args.scenario.spec()?.generate()?;
    log::info!("mean of the full outcome {}", truth.mu_true);
    match &args.out {
        Some(path) => save_csv(&truth.table, path),
        None => shadowmean::write_csv(&truth.table, io::stdout()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = with_threads(cli.threads, || match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Generate(a) => cmd_generate(a),
    })
    .and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}
