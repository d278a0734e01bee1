//! Writes the full-horizon model of a small instance in LP format, reads it
//! back and solves the parsed copy.
//!
//! `cargo run --release --example export_lp -- [out.lp]`

use reossp::model::build_reossp;
use reossp::scenario::{generate_random, Scenario};
use reossp_milp::{parse_lp, solve_milp, write_lp, SolveLimits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = generate_random(2, 2, 1, 3)?;
    config.grid.steps = 360;
    let data = Scenario::new(config)?.problem_data()?;
    let fm = build_reossp(&data)?;
    let text = write_lp(&fm.model);
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, &text)?;
        println!("wrote {path}");
    }
    let parsed = parse_lp(&text)?;
    println!(
        "{} columns ({} binary), {} rows, {} bytes",
        parsed.num_columns(),
        parsed.num_binaries(),
        parsed.num_rows(),
        text.len()
    );
    let direct = solve_milp(&fm.model, &SolveLimits::default())?;
    let reread = solve_milp(&parsed, &SolveLimits::default())?;
    println!(
        "objective: built {:?}, parsed {:?}",
        direct.objective, reread.objective
    );
    Ok(())
}
