//! Builds the storm-track case study from the bundled track and solves a short
//! prefix of it with each formulation under a time limit.
//!
//! `cargo run --release --example case_study -- [seconds]`

use std::time::Duration;

use reossp::report::{ComparisonReport, RunSummary};
use reossp::scenario::{load_case_study, CaseStudyOptions, Scenario, STORM_TRACK_CSV};
use reossp::schedule::Formulation;
use reossp::solve::{solve, SolveOptions};
use reossp_milp::SolveLimits;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seconds: f64 = std::env::args().nth(1).map_or(Ok(20.0), |s| s.parse())?;
    let options = CaseStudyOptions {
        phases: 5,
        planes: 1,
        ..CaseStudyOptions::default()
    };
    let mut config = load_case_study(STORM_TRACK_CSV, &options)?;
    println!(
        "{}: {} targets, {} stations, {} satellites, {} steps in {} stages",
        config.name,
        config.targets.len(),
        config.stations.len(),
        config.satellites.len(),
        config.grid.steps,
        config.grid.stages
    );
    // Keep the first two stages so that the example finishes quickly.
    config.grid.steps = 2 * config.grid.stage_len();
    config.grid.stages = 2;
    let budgets = config.budgets();
    let data = Scenario::new(config)?.problem_data()?;

    let solve_options = SolveOptions {
        limits: SolveLimits {
            time_limit: Some(Duration::from_secs_f64(seconds)),
            ..SolveLimits::default()
        },
        ..SolveOptions::default()
    };
    let mut runs = Vec::new();
    for formulation in [Formulation::Eossp, Formulation::Reossp, Formulation::Rhp] {
        match solve(&data, formulation, &solve_options) {
            Ok(out) => {
                let wall = out.elapsed.as_secs_f64();
                runs.push(RunSummary::new(
                    formulation.as_str(),
                    &out.schedule,
                    &data.constants,
                    &budgets,
                    wall,
                    out.stats.status.clone(),
                ));
            }
            Err(e) => println!("{}: {e}", formulation.as_str()),
        }
    }
    print!("{}", ComparisonReport::new(runs).render());
    Ok(())
}
