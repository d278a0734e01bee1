mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::geometric_toy;
use reossp::model::build_reossp;
use reossp::scenario::{Scenario, ScenarioConfig};
use reossp::schedule::{Downlink, Schedule};
use reossp_milp::parse_lp;
use serde_json::Value;

fn reossp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reossp"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy(dir: &Path, budget: f64) -> (PathBuf, ScenarioConfig) {
    let mut cfg = geometric_toy(101, 2, 200, 2, 3);
    cfg.constants.budget_mps = budget;
    cfg.constants.battery_recon_kj = 0.0;
    let path = dir.join("toy.toml");
    cfg.save(&path).unwrap();
    (path, cfg)
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&reossp(&["frobnicate"])), 2);
    assert_eq!(code(&reossp(&["solve", "x.toml"])), 2);
    assert_eq!(code(&reossp(&["--help"])), 0);
}

#[test]
fn generate_is_seeded() {
    let a = reossp(&[
        "generate", "--seed", "7", "--stages", "2", "--sats", "1", "--slots", "3", "--steps", "240",
    ]);
    let b = reossp(&[
        "generate", "--seed", "7", "--stages", "2", "--sats", "1", "--slots", "3", "--steps", "240",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let cfg = ScenarioConfig::from_toml(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
    assert_eq!(
        (cfg.grid.steps, cfg.grid.stages, cfg.satellites.len()),
        (240, 2, 1)
    );
    assert_ne!(
        code(&reossp(&["generate", "--stages", "2", "--steps", "241"])),
        0
    );
}

#[test]
fn solve_validate_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (scenario, _) = toy(dir.path(), 0.0);
    for f in ["eossp", "reossp", "rhp"] {
        let out = dir.path().join(format!("{f}.json"));
        let run = reossp(&[
            "solve",
            arg(&scenario),
            "--formulation",
            f,
            "--gap",
            "0",
            "-o",
            arg(&out),
        ]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
        let check = reossp(&["validate", arg(&out), arg(&scenario)]);
        assert_eq!(code(&check), 0);
        assert_eq!(String::from_utf8_lossy(&check.stdout).trim(), "valid");
        assert!(dir.path().join(format!("{f}.run.json")).exists());
    }
    assert!(dir.path().join("rhp.trace.json").exists());

    let runs: Vec<PathBuf> = ["eossp", "reossp"]
        .iter()
        .map(|f| dir.path().join(format!("{f}.run.json")))
        .collect();
    let report = reossp(&["report", arg(&runs[0]), arg(&runs[1]), "--json"]);
    assert_eq!(code(&report), 0);
    let v: Value = serde_json::from_slice(&report.stdout).unwrap();
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);
    // Without a budget both formulations reach the same optimum.
    let z: Vec<f64> = v["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["objective"].as_f64().unwrap())
        .collect();
    assert_eq!(z[0], z[1]);
    assert!(z[0] > 0.0);
    assert_eq!(v["gammas"][0]["by_objective_pct"].as_f64(), Some(0.0));
}

#[test]
fn corrupted_schedule_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (scenario, _) = toy(dir.path(), 50.0);
    let out = dir.path().join("s.json");
    assert_eq!(
        code(&reossp(&[
            "solve",
            arg(&scenario),
            "--formulation",
            "reossp",
            "-o",
            arg(&out)
        ])),
        0
    );
    let mut schedule = Schedule::load(&out).unwrap();
    let data = Scenario::load(&scenario).unwrap().problem_data().unwrap();
    let st = &mut schedule.satellites[0].stages[0];
    st.observations.clear();
    st.charging.retain(|&t| t != 0);
    st.downlinks.retain(|d| d.step != 0);
    st.downlinks.insert(
        0,
        Downlink {
            step: 0,
            station: 0,
        },
    );
    schedule.finalize(&data.constants);
    schedule.save(&out).unwrap();
    let check = reossp(&["validate", arg(&out), arg(&scenario), "--json"]);
    assert_eq!(code(&check), 5);
    let v: Value = serde_json::from_slice(&check.stdout).unwrap();
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn infeasible_scenario_exits_with_its_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = geometric_toy(102, 2, 200, 1, 2);
    cfg.constants.battery_max_kj = 1.0;
    cfg.constants.battery_min_kj = 0.5;
    let path = dir.path().join("dead.toml");
    cfg.save(&path).unwrap();
    let out = dir.path().join("s.json");
    assert_eq!(
        code(&reossp(&[
            "solve",
            arg(&path),
            "--formulation",
            "eossp",
            "-o",
            arg(&out)
        ])),
        3
    );
}

#[test]
fn exported_model_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let (scenario, _) = toy(dir.path(), 50.0);
    let lp = dir.path().join("m.lp");
    let out = reossp(&[
        "export-lp",
        arg(&scenario),
        "--formulation",
        "reossp",
        "-o",
        arg(&lp),
    ]);
    assert_eq!(code(&out), 0);
    let parsed = parse_lp(&std::fs::read_to_string(&lp).unwrap()).unwrap();
    let data = Scenario::load(&scenario).unwrap().problem_data().unwrap();
    let fm = build_reossp(&data).unwrap();
    assert_eq!(parsed.num_columns(), fm.model.num_columns());
    assert_eq!(parsed.num_rows(), fm.model.num_rows());
    assert_eq!(parsed.num_binaries(), fm.model.num_binaries());
    assert_eq!(
        code(&reossp(&[
            "export-lp",
            arg(&scenario),
            "--formulation",
            "rhp",
            "--stage",
            "2"
        ])),
        1
    );
}
