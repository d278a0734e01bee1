//! Rolling-horizon solve with a configurable look-ahead, printing the trace of
//! every subproblem next to the full-horizon optimum.
//!
//! `cargo run --release --example rolling_horizon -- [lookahead] [seed]`

use reossp::scenario::{generate_random, Scenario};
use reossp::schedule::Formulation;
use reossp::solve::{solve, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let lookahead = args.next().map_or(Ok(1), |s| s.parse())?;
    let seed = args.next().map_or(Ok(9), |s| s.parse())?;
    let mut config = generate_random(seed, 3, 1, 3)?;
    config.grid.steps = 900;
    let data = Scenario::new(config)?.problem_data()?;

    let options = SolveOptions {
        lookahead,
        ..SolveOptions::default()
    };
    let rhp = solve(&data, Formulation::Rhp, &options)?;
    println!(
        "{:>7} {:>7} {:>10} {:>9} {:>9} {:>8}",
        "control", "window", "committed", "status", "z", "time [s]"
    );
    for step in &rhp.rhp {
        println!(
            "{:>7} {:>7} {:>10} {:>9} {:>9} {:>8.2}",
            step.control_stage,
            step.window_last,
            format!("{}..={}", step.committed.0, step.committed.1),
            if step.fallback {
                "greedy"
            } else {
                step.status.as_str()
            },
            step.committed_objective,
            step.elapsed_s
        );
    }
    let full = solve(&data, Formulation::Reossp, &SolveOptions::default())?;
    println!(
        "\nrolling horizon z = {}, full horizon z = {}",
        rhp.schedule.meta.objective, full.schedule.meta.objective
    );
    Ok(())
}
