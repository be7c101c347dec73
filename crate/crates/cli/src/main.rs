use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trunkload_core::model::{default_model, load_model_with, Model, ParseOptions, Side};
use trunkload_core::pipeline::{model_for_case, run_snapshot, CaseRun};
use trunkload_core::redundancy::{run_oracle_check, OracleCheckConfig, SolverParams};
use trunkload_core::report::{
    compare_cases, comparison_json, plot_columns, render_comparison, render_report, report_csv,
    report_json, solution_json, svg_bar_chart, RiskThresholds,
};
use trunkload_core::scenarios::{
    build_snapshot, snapshot_from_parsed, Case, ScenarioConfig, ScenarioFile, ScenarioSnapshot,
};
use trunkload_core::Error;

// stdout writes ignore errors so a closed pipe (`| head`) ends output quietly
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

/// Trunk muscle loading in normal and crutch-assisted walking.
#[derive(Debug, Parser)]
#[command(name = "trunkload", version)]
struct Cli {
    /// Model file (TOML). Defaults to the shipped model.
    #[arg(long, global = true, env = "TRUNKLOAD_DEFAULT_MODEL")]
    model: Option<PathBuf>,

    /// Ignore unknown fields in model and scenario files.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file against the structural rules.
    Validate,
    /// Analyze one walking snapshot.
    Analyze(AnalyzeArgs),
    /// Analyze several cases side by side.
    Compare(CompareArgs),
    /// Cross-check the solver against exhaustive search on random problems.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
    Plot,
}

#[derive(Debug, Args)]
struct Knobs {
    /// Side of the injured foot.
    #[arg(long, value_parser = parse_side)]
    injured_side: Option<Side>,

    /// Fraction of body weight on the injured foot while it is in contact.
    #[arg(long)]
    foot_fraction: Option<f64>,

    /// Share of the remaining weight carried by the crutch(es).
    #[arg(long)]
    crutch_share: Option<f64>,

    /// Activation cost exponent (1, 2 or 3).
    #[arg(long, default_value_t = 2)]
    exponent: u8,

    /// Disable reserve actuators; fail when muscles cannot balance the load.
    #[arg(long)]
    no_reserves: bool,

    /// Use the model as given instead of attaching the crutches a case needs.
    #[arg(long)]
    no_augment: bool,

    /// Output directory for csv, json and plot files.
    #[arg(long, default_value = "trunkload-out")]
    out_dir: PathBuf,

    /// Output formats; `table` prints to stdout.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "table")]
    format: Vec<Format>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Scenario file (TOML) with posture and knobs.
    #[arg(long, conflicts_with_all = ["case", "phase"], required_unless_present = "case")]
    scenario: Option<PathBuf>,

    /// Walking case: normal, single_crutch or double_crutch.
    #[arg(long)]
    case: Option<Case>,

    /// Phase within the case; defaults to its loaded phase.
    #[arg(long, requires = "case")]
    phase: Option<String>,

    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Cases to compare, as `case` or `case:phase`. Repeatable.
    #[arg(long = "case", value_delimiter = ',')]
    cases: Vec<String>,

    /// Scenario files to include. Repeatable.
    #[arg(long = "scenario")]
    scenarios: Vec<PathBuf>,

    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 100)]
    instances: usize,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long, default_value_t = 4)]
    max_muscles: usize,

    #[arg(long, default_value_t = 2)]
    max_coordinates: usize,

    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,

    #[arg(long, default_value_t = 2)]
    exponent: u8,
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s.parse::<Side>() {
        Ok(side @ (Side::Left | Side::Right)) => Ok(side),
        _ => Err(format!("expected `left` or `right`, got `{s}`")),
    }
}

enum Failure {
    /// Domain or validation failure, exit 1.
    Domain(String),
    /// Usage or I/O failure, exit 2.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Parse { .. } | Error::TooLarge(_) => {
                Failure::Usage(e.to_string())
            }
            e => Failure::Domain(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        Failure::from(Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    })
}

fn write(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| {
        Failure::from(Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    })
}

fn load_base_model(cli: &Cli) -> CliResult<Model> {
    match &cli.model {
        None => Ok(default_model()),
        Some(path) => {
            let text = read(path)?;
            Ok(load_model_with(
                &text,
                ParseOptions {
                    lenient: cli.lenient,
                },
            )?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate => validate(&cli),
        Command::Analyze(args) => analyze(&cli, args),
        Command::Compare(args) => compare(&cli, args),
        Command::OracleCheck(args) => oracle_check(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn validate(cli: &Cli) -> CliResult {
    let text = match &cli.model {
        Some(path) => read(path)?,
        None => trunkload_core::model::DEFAULT_MODEL_DOC.to_string(),
    };
    match load_model_with(
        &text,
        ParseOptions {
            lenient: cli.lenient,
        },
    ) {
        Ok(model) => {
            outln!(
                "OK: {} segments, {} coordinates, {} muscles",
                model.segments().len(),
                model.dof(),
                model.muscles().len()
            );
            Ok(())
        }
        Err(Error::Validation { violations }) => {
            for v in &violations {
                outln!("violation: {v}");
            }
            Err(Failure::Domain(format!(
                "{} violation(s)",
                violations.len()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn solver_params(knobs: &Knobs) -> CliResult<SolverParams> {
    let params = SolverParams {
        exponent: knobs.exponent,
        reserves_enabled: !knobs.no_reserves,
        ..Default::default()
    };
    params.validate()?;
    Ok(params)
}

/// What to run: a library case/phase or a scenario file.
enum Job {
    Library { case: Case, phase: Option<String> },
    File(PathBuf),
}

fn prepare(
    base: &Model,
    job: &Job,
    knobs: &Knobs,
    lenient: bool,
) -> CliResult<(Model, ScenarioSnapshot)> {
    match job {
        Job::Library { case, phase } => {
            let side = knobs.injured_side.unwrap_or(Side::Right);
            let model = fitted_model(base, *case, side, knobs)?;
            let mut config = ScenarioConfig::new(*case, &model).with_injured_side(side);
            if let Some(p) = phase {
                config.phase = case.parse_phase(p)?;
            }
            if let Some(f) = knobs.foot_fraction {
                config.injured_foot_fraction = f;
            }
            if let Some(k) = knobs.crutch_share {
                config.crutch_share = k;
            }
            let snapshot = build_snapshot(&config, &model)?;
            Ok((model, snapshot))
        }
        Job::File(path) => {
            let text = read(path)?;
            let mut file = ScenarioFile::parse(&text, lenient)?;
            if knobs.injured_side.is_some() {
                file.injured_side = knobs.injured_side;
            }
            if knobs.foot_fraction.is_some() {
                file.injured_foot_fraction = knobs.foot_fraction;
            }
            if knobs.crutch_share.is_some() {
                file.crutch_share = knobs.crutch_share;
            }
            let side = file.injured_side.unwrap_or(Side::Right);
            let model = fitted_model(base, file.case, side, knobs)?;
            let snapshot = snapshot_from_parsed(&file, &text, &model)?;
            Ok((model, snapshot))
        }
    }
}

fn fitted_model(base: &Model, case: Case, side: Side, knobs: &Knobs) -> CliResult<Model> {
    if knobs.no_augment {
        Ok(base.clone())
    } else {
        Ok(model_for_case(base, case, side)?)
    }
}

fn execute(base: &Model, job: &Job, knobs: &Knobs, lenient: bool) -> CliResult<(Model, CaseRun)> {
    let params = solver_params(knobs)?;
    let (model, snapshot) = prepare(base, job, knobs, lenient)?;
    for w in snapshot.posture.limit_warnings(&model) {
        eprintln!("warning: {w}");
    }
    let run = run_snapshot(&model, snapshot, &params, &RiskThresholds::default())?;
    Ok((model, run))
}

fn wants(knobs: &Knobs, format: Format) -> bool {
    knobs.format.contains(&format)
}

fn out_dir(knobs: &Knobs) -> CliResult<Option<&Path>> {
    if knobs.format.iter().all(|f| *f == Format::Table) {
        return Ok(None);
    }
    fs::create_dir_all(&knobs.out_dir).map_err(|e| {
        Failure::from(Error::Io {
            path: knobs.out_dir.display().to_string(),
            source: e,
        })
    })?;
    Ok(Some(&knobs.out_dir))
}

fn analyze(cli: &Cli, args: &AnalyzeArgs) -> CliResult {
    let base = load_base_model(cli)?;
    let job = match (&args.scenario, args.case) {
        (Some(path), _) => Job::File(path.clone()),
        (None, Some(case)) => Job::Library {
            case,
            phase: args.phase.clone(),
        },
        (None, None) => return Err(Failure::Usage("give --case or --scenario".into())),
    };
    let (model, run) = execute(&base, &job, &args.knobs, cli.lenient)?;
    let report = &run.report;

    if wants(&args.knobs, Format::Table) {
        out!("{}", render_report(report));
        if run.solution.reserves.iter().any(|r| r.abs() > 1e-6) {
            let uncovered: Vec<String> = model
                .coordinates()
                .iter()
                .zip(&run.solution.reserves)
                .filter(|(_, r)| r.abs() > 1e-6)
                .map(|(c, r)| format!("{}={r:.2}", c.name))
                .collect();
            outln!("reserve torques (N·m): {}", uncovered.join(" "));
        }
    }
    if let Some(dir) = out_dir(&args.knobs)? {
        let stem = format!("{}_{}", report.case, report.phase);
        if wants(&args.knobs, Format::Json) {
            write(
                &dir.join(format!("{stem}_report.json")),
                &report_json(report)?,
            )?;
            let record = run.solution_record(&model);
            write(
                &dir.join(format!("{stem}_solution.json")),
                &solution_json(&record)?,
            )?;
        }
        if wants(&args.knobs, Format::Csv) {
            write(
                &dir.join(format!("{stem}.csv")),
                &report_csv(std::slice::from_ref(report))?,
            )?;
        }
        if wants(&args.knobs, Format::Plot) {
            let table = compare_cases(std::slice::from_ref(report))?;
            write(&dir.join(format!("{stem}.svg")), &svg_bar_chart(&table))?;
            write(&dir.join(format!("{stem}.dat")), &plot_columns(&table))?;
        }
    }
    Ok(())
}

fn parse_case_arg(arg: &str) -> CliResult<Job> {
    let (case, phase) = match arg.split_once(':') {
        Some((c, p)) => (c, Some(p.to_string())),
        None => (arg, None),
    };
    let case = case
        .parse::<Case>()
        .map_err(|e| Failure::Usage(format!("--case `{arg}`: {e}")))?;
    Ok(Job::Library { case, phase })
}

fn compare(cli: &Cli, args: &CompareArgs) -> CliResult {
    let mut jobs = Vec::new();
    for arg in &args.cases {
        jobs.push(parse_case_arg(arg)?);
    }
    jobs.extend(args.scenarios.iter().cloned().map(Job::File));
    match jobs.len() {
        0 => {
            jobs = Case::ALL
                .iter()
                .map(|&case| Job::Library { case, phase: None })
                .collect()
        }
        1 => return Err(Failure::Usage("compare needs at least two cases".into())),
        _ => {}
    }
    let base = load_base_model(cli)?;

    // independent runs in parallel; results keep the requested order
    let results: Vec<CliResult<(Model, CaseRun)>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|job| s.spawn(|| execute(&base, job, &args.knobs, cli.lenient)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("analysis thread panicked"))
            .collect()
    });
    let mut reports = Vec::with_capacity(results.len());
    for (k, result) in results.into_iter().enumerate() {
        match result {
            Ok((_, run)) => reports.push(run.report),
            Err(Failure::Domain(msg)) => {
                return Err(Failure::Domain(format!("run {}: {msg}", k + 1)))
            }
            Err(Failure::Usage(msg)) => {
                return Err(Failure::Usage(format!("run {}: {msg}", k + 1)))
            }
        }
    }
    let table = compare_cases(&reports)?;

    if wants(&args.knobs, Format::Table) {
        out!("{}", render_comparison(&table));
    }
    if let Some(dir) = out_dir(&args.knobs)? {
        if wants(&args.knobs, Format::Json) {
            write(
                &dir.join("comparison.json"),
                &comparison_json(&table, &reports)?,
            )?;
        }
        if wants(&args.knobs, Format::Csv) {
            write(&dir.join("comparison.csv"), &report_csv(&reports)?)?;
        }
        if wants(&args.knobs, Format::Plot) {
            write(&dir.join("comparison.svg"), &svg_bar_chart(&table))?;
            write(&dir.join("comparison.dat"), &plot_columns(&table))?;
        }
    }
    Ok(())
}

fn oracle_check(args: &OracleArgs) -> CliResult {
    if args.grid_step > 0.1 {
        eprintln!(
            "warning: grid step {} is coarse; the objective allowance grows to p·n·step = {}",
            args.grid_step,
            args.exponent as f64 * args.max_muscles as f64 * args.grid_step
        );
    }
    let config = OracleCheckConfig {
        instances: args.instances,
        seed: args.seed,
        max_muscles: args.max_muscles,
        max_coordinates: args.max_coordinates,
        grid_step: args.grid_step,
        exponent: args.exponent,
    };
    let check = run_oracle_check(&config)?;
    outln!(
        "{} instances, seed {}: {} passed, {} failed, max objective deviation {:.3e}",
        check.cases.len(),
        args.seed,
        check.cases.len() - check.failures,
        check.failures,
        check.max_deviation
    );
    for (k, c) in check.cases.iter().enumerate().filter(|(_, c)| !c.passed) {
        outln!(
            "  instance {k}: {} muscles, {} coordinates, solver {:.6} oracle {:.6} (allowed {:.3e}, residual {:.1e}, {:?})",
            c.muscles,
            c.coordinates,
            c.solver_objective,
            c.oracle_objective,
            c.allowed,
            c.max_relative_residual,
            c.status
        );
    }
    if check.passed() {
        Ok(())
    } else {
        Err(Failure::Domain("solver and oracle disagree".into()))
    }
}
