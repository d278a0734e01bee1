use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use reossp::error::Error;
use reossp::io::write_atomic;
use reossp::model::{build_eossp, build_reossp, build_rhp_subproblem};
use reossp::report::{render_stage_table, stage_table, ComparisonReport, RunSummary};
use reossp::scenario::{
    generate_random, load_case_study, CaseStudyOptions, Scenario, STORM_TRACK_CSV,
};
use reossp::schedule::{Formulation, Schedule};
use reossp::solve::{solve, SolveOptions};
use reossp::validate::validate;
use reossp_milp::{write_lp, SolveLimits};

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NO_SOLUTION: u8 = 4;
const EXIT_INVALID: u8 = 5;

#[derive(Parser)]
#[command(
    name = "reossp",
    version,
    about = "Earth-observation scheduling with orbital reconfiguration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario file: a seeded random instance or the storm-track case study.
    Generate(GenerateArgs),
    /// Solve a scenario and write the schedule and a run summary.
    Solve(SolveArgs),
    /// Check a schedule against every constraint of its scenario.
    Validate(ValidateArgs),
    /// Write the model of a scenario in LP format.
    ExportLp(ExportArgs),
    /// Compare run summaries written by `solve`.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    stages: usize,
    #[arg(long, default_value_t = 4)]
    sats: usize,
    #[arg(long, default_value_t = 20)]
    slots: usize,
    /// Override the number of time steps of a random instance.
    #[arg(long, conflicts_with = "case_study")]
    steps: Option<usize>,
    /// Build the case study instead of a random instance.
    #[arg(long)]
    case_study: bool,
    /// Storm-track CSV for the case study (defaults to the bundled track).
    #[arg(long, requires = "case_study")]
    track: Option<PathBuf>,
    /// Output TOML file (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LimitArgs {
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl LimitArgs {
    fn limits(&self) -> Result<SolveLimits, Error> {
        let time_limit = self
            .time_limit
            .map(|t| {
                Duration::try_from_secs_f64(t)
                    .map_err(|e| Error::Config(format!("time limit: {e}")))
            })
            .transpose()?;
        Ok(SolveLimits {
            time_limit,
            node_limit: self.node_limit,
            gap_tolerance: self.gap,
            threads: self.threads,
            record_trace: false,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    scenario: PathBuf,
    #[arg(long, value_parser = parse_formulation)]
    formulation: Formulation,
    #[command(flatten)]
    limits: LimitArgs,
    /// Look-ahead stages of the rolling horizon.
    #[arg(long, default_value_t = 1)]
    lookahead: usize,
    #[arg(long)]
    no_warm_start: bool,
    /// Schedule JSON output.
    #[arg(long, short, default_value = "schedule.json")]
    out: PathBuf,
    /// Run summary output (defaults to `<out>.run.json`).
    #[arg(long)]
    run: Option<PathBuf>,
    /// Rolling-horizon trace output (defaults to `<out>.trace.json`).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Run label used by `report`.
    #[arg(long)]
    label: Option<String>,
    /// Print the run summary as JSON instead of tables.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    schedule: PathBuf,
    scenario: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportArgs {
    scenario: PathBuf,
    #[arg(long, value_parser = parse_formulation)]
    formulation: Formulation,
    /// Control stage of the exported rolling-horizon subproblem.
    #[arg(long, default_value_t = 1)]
    stage: usize,
    #[arg(long, default_value_t = 1)]
    lookahead: usize,
    /// Output LP file (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    s.parse::<Formulation>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Infeasible(_) => EXIT_INFEASIBLE,
                Error::NoSolution(_) => EXIT_NO_SOLUTION,
                _ => EXIT_ERROR,
            })
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Validate(a) => validate_cmd(a),
        Command::ExportLp(a) => export(a),
        Command::Report(a) => report(a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn generate(a: GenerateArgs) -> Result<u8, Error> {
    let config = if a.case_study {
        let text = match &a.track {
            Some(p) => std::fs::read_to_string(p)?,
            None => STORM_TRACK_CSV.to_string(),
        };
        let options = CaseStudyOptions {
            stages: a.stages,
            ..Default::default()
        };
        load_case_study(&text, &options)?
    } else {
        let mut config = generate_random(a.seed, a.stages, a.sats, a.slots)?;
        if let Some(steps) = a.steps {
            config.grid.steps = steps;
            config.validate()?;
        }
        config
    };
    emit(a.out.as_deref(), &config.to_toml()?)?;
    Ok(0)
}

fn solve_cmd(a: SolveArgs) -> Result<u8, Error> {
    let scenario = Scenario::load(&a.scenario)?;
    let data = scenario.problem_data()?;
    let options = SolveOptions {
        limits: a.limits.limits()?,
        lookahead: a.lookahead,
        warm_start: !a.no_warm_start,
    };
    let outcome = solve(&data, a.formulation, &options)?;
    outcome.schedule.save(&a.out)?;
    let wall = if outcome.rhp.is_empty() {
        outcome.stats.elapsed_s
    } else {
        outcome.rhp.iter().map(|s| s.elapsed_s).sum()
    };
    let status = if outcome.rhp.is_empty() {
        outcome.stats.status.clone()
    } else {
        format!("rhp({} subproblems)", outcome.rhp.len())
    };
    let label = a
        .label
        .unwrap_or_else(|| a.formulation.as_str().to_string());
    let summary = RunSummary::new(
        label,
        &outcome.schedule,
        &data.constants,
        &scenario.config().budgets(),
        wall,
        status,
    );
    summary.save(&a.run.unwrap_or_else(|| sibling(&a.out, "run.json")))?;
    if !outcome.rhp.is_empty() {
        let trace = serde_json::to_string_pretty(&outcome.rhp)?;
        write_atomic(
            &a.trace.unwrap_or_else(|| sibling(&a.out, "trace.json")),
            trace.as_bytes(),
        )?;
    }
    let report = validate(&outcome.schedule, &data);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print!("{}", ComparisonReport::new(vec![summary]).render());
        println!();
        print!("{}", render_stage_table(&stage_table(&outcome.schedule)));
    }
    if !report.is_valid() {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        return Ok(EXIT_INVALID);
    }
    Ok(0)
}

fn validate_cmd(a: ValidateArgs) -> Result<u8, Error> {
    let schedule = Schedule::load(&a.schedule)?;
    let data = Scenario::load(&a.scenario)?.problem_data()?;
    let report = validate(&schedule, &data);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else if report.is_valid() {
        println!("valid");
    } else {
        for v in &report.violations {
            println!("{v}");
        }
    }
    Ok(if report.is_valid() { 0 } else { EXIT_INVALID })
}

fn export(a: ExportArgs) -> Result<u8, Error> {
    let data = Scenario::load(&a.scenario)?.problem_data()?;
    let fm = match a.formulation {
        Formulation::Eossp => build_eossp(&data)?,
        Formulation::Reossp => build_reossp(&data)?,
        Formulation::Rhp => {
            if a.stage != 1 {
                return Err(Error::Config(
                    "only the first subproblem has a known entry state; use --stage 1".into(),
                ));
            }
            build_rhp_subproblem(&data, 1, a.lookahead, &data.initial_carry())?
        }
    };
    emit(a.out.as_deref(), &write_lp(&fm.model))?;
    Ok(0)
}

fn report(a: ReportArgs) -> Result<u8, Error> {
    let runs = a
        .runs
        .iter()
        .map(|p| RunSummary::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let report = ComparisonReport::new(runs);
    let json = report.to_json()?;
    if let Some(p) = &a.out {
        write_atomic(p, json.as_bytes())?;
    }
    if a.json {
        println!("{json}");
    } else {
        print!("{}", report.render());
    }
    Ok(0)
}
