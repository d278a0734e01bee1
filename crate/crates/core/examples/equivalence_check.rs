//! With a zero manoeuvre budget every satellite must stay in its initial slot,
//! so the reconfigurable model reduces to the fixed-orbit one. This example
//! checks that both reach the same optimum on a few seeds.
//!
//! `cargo run --release --example equivalence_check`

use reossp::scenario::{generate_random, Scenario};
use reossp::schedule::Formulation;
use reossp::solve::{solve, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for seed in 0..4 {
        let mut config = generate_random(seed, 2, 1, 3)?;
        config.grid.steps = 600;
        config.constants.budget_mps = 0.0;
        config.constants.battery_recon_kj = 0.0;
        let data = Scenario::new(config)?.problem_data()?;
        let e = solve(&data, Formulation::Eossp, &SolveOptions::default())?;
        let r = solve(&data, Formulation::Reossp, &SolveOptions::default())?;
        let (ze, zr) = (e.schedule.meta.objective, r.schedule.meta.objective);
        println!(
            "seed {seed}: z_E = {ze}, z_R = {zr} {}",
            if ze == zr { "ok" } else { "MISMATCH" }
        );
    }
    Ok(())
}
