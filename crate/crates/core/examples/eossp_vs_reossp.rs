//! Solves one random instance with and without orbital reconfiguration and
//! compares the two schedules.
//!
//! `cargo run --release --example eossp_vs_reossp -- [seed]`

use reossp::report::{render_stage_table, stage_table, ComparisonReport, RunSummary};
use reossp::scenario::{generate_random, Scenario};
use reossp::schedule::Formulation;
use reossp::solve::{solve, SolveOptions};
use reossp::validate::validate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(9), |s| s.parse())?;
    let mut config = generate_random(seed, 3, 1, 3)?;
    config.grid.steps = 900;
    let budgets = config.budgets();
    let data = Scenario::new(config)?.problem_data()?;

    let mut runs = Vec::new();
    for formulation in [Formulation::Eossp, Formulation::Reossp] {
        let out = solve(&data, formulation, &SolveOptions::default())?;
        assert!(validate(&out.schedule, &data).is_valid());
        if formulation == Formulation::Reossp {
            println!("{}", render_stage_table(&stage_table(&out.schedule)));
        }
        runs.push(RunSummary::new(
            formulation.as_str(),
            &out.schedule,
            &data.constants,
            &budgets,
            out.stats.elapsed_s,
            out.stats.status.clone(),
        ));
    }
    print!("{}", ComparisonReport::new(runs).render());
    Ok(())
}
