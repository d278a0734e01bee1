//! Solves a small instance, then breaks the schedule in a few ways and shows
//! what the validator reports.
//!
//! `cargo run --release --example validate_schedule`

use reossp::scenario::{generate_random, Scenario};
use reossp::schedule::{Downlink, Formulation, Schedule};
use reossp::solve::{solve, SolveOptions};
use reossp::validate::validate;

type Edit = (&'static str, fn(&mut Schedule));

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = generate_random(0, 3, 1, 3)?;
    config.grid.steps = 900;
    let data = Scenario::new(config)?.problem_data()?;
    let base = solve(&data, Formulation::Reossp, &SolveOptions::default())?.schedule;
    println!(
        "solver schedule valid: {}",
        validate(&base, &data).is_valid()
    );

    let edits: [Edit; 4] = [
        ("downlink in every free step", |s| {
            let len = s.meta.stage_len;
            let busy = s.satellites[0].tasks_by_step(len);
            for (g, tasks) in busy.iter().enumerate() {
                if tasks.is_empty() {
                    s.satellites[0].stages[g / len].downlinks.push(Downlink {
                        step: g % len,
                        station: 0,
                    });
                }
            }
        }),
        ("extra transfer cost", |s| {
            s.satellites[0].maneuvers[0].cost_mps += 10.0
        }),
        ("broken slot path", |s| {
            s.satellites[0].maneuvers[1].from = 2
        }),
        ("tampered objective", |s| s.meta.objective += 1.0),
    ];
    for (name, edit) in edits {
        let mut s = base.clone();
        edit(&mut s);
        if name == "downlink in every free step" {
            s.finalize(&data.constants);
        }
        let report = validate(&s, &data);
        println!("\n{name}: {} violation(s)", report.violations.len());
        for v in report.violations.iter().take(3) {
            println!("  {v}");
        }
    }
    Ok(())
}
