//! Run summaries, improvement percentages, Δv budget usage and per-stage tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::Result;
use crate::io::write_atomic;
use crate::schedule::{score, Formulation, Schedule};

/// Δv usage per satellite and in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub per_satellite_mps: Vec<f64>,
    pub per_satellite_pct: Vec<f64>,
    pub total_mps: f64,
    pub total_pct: f64,
}

/// Sums a per-satellite ledger of manoeuvre costs against the budgets.
pub fn summarize_ledger(ledger: &[Vec<f64>], budgets: &[f64]) -> BudgetSummary {
    let per: Vec<f64> = ledger
        .iter()
        .map(|costs| costs.iter().fold(0.0, |a, b| a + b))
        .collect();
    let pct = per
        .iter()
        .zip(budgets)
        .map(|(u, b)| if *b > 0.0 { 100.0 * u / b } else { 0.0 })
        .collect();
    let total: f64 = per.iter().fold(0.0, |a, b| a + b);
    let cap: f64 = budgets.iter().fold(0.0, |a, b| a + b);
    BudgetSummary {
        per_satellite_mps: per,
        per_satellite_pct: pct,
        total_mps: total,
        total_pct: if cap > 0.0 { 100.0 * total / cap } else { 0.0 },
    }
}

/// Budget usage of a schedule's manoeuvre ledger.
pub fn summarize_budget(schedule: &Schedule, budgets: &[f64]) -> BudgetSummary {
    let ledger: Vec<Vec<f64>> = schedule
        .satellites
        .iter()
        .map(|s| s.maneuvers.iter().map(|m| m.cost_mps).collect())
        .collect();
    summarize_ledger(&ledger, budgets)
}

/// Percent improvement of `a` over `b`; `None` when `b` is zero.
pub fn gamma(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| 100.0 * (a - b) / b)
}

/// Summary of one solved run, stored as the run file of the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub formulation: Formulation,
    pub objective: f64,
    pub downlinked_gb: f64,
    pub downlinks: usize,
    pub observations: usize,
    pub charging: usize,
    pub wall_time_s: f64,
    pub status: String,
    pub budget: BudgetSummary,
}

impl RunSummary {
    pub fn new(
        label: impl Into<String>,
        schedule: &Schedule,
        constants: &PhysicalConstants,
        budgets: &[f64],
        wall_time_s: f64,
        status: impl Into<String>,
    ) -> Self {
        let (z, zz) = score(schedule, constants);
        Self {
            label: label.into(),
            formulation: schedule.formulation(),
            objective: z,
            downlinked_gb: zz,
            downlinks: schedule.count_downlinks(),
            observations: schedule.count_observations(),
            charging: schedule.satellites.iter().map(|s| s.count_charging()).sum(),
            wall_time_s,
            status: status.into(),
            budget: summarize_budget(schedule, budgets),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }
}

/// Improvement of run `a` over run `b` by objective and by downlinked volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub a: String,
    pub b: String,
    pub by_objective_pct: Option<f64>,
    pub by_downlink_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub runs: Vec<RunSummary>,
    /// Every later run over every earlier run, in input order.
    pub gammas: Vec<GammaEntry>,
}

impl ComparisonReport {
    pub fn new(runs: Vec<RunSummary>) -> Self {
        let mut gammas = Vec::new();
        for (j, a) in runs.iter().enumerate() {
            for b in &runs[..j] {
                gammas.push(GammaEntry {
                    a: a.label.clone(),
                    b: b.label.clone(),
                    by_objective_pct: gamma(a.objective, b.objective),
                    by_downlink_pct: gamma(a.downlinked_gb, b.downlinked_gb),
                });
            }
        }
        Self { runs, gammas }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:<8} {:>8} {:>8} {:>6} {:>6} {:>10} {:>10} {:>8}",
            "run", "form", "z", "Z [GB]", "q", "y", "dv [m/s]", "budget %", "time [s]"
        );
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{:<16} {:<8} {:>8.0} {:>8.2} {:>6} {:>6} {:>10.2} {:>10.2} {:>8.2}",
                r.label,
                r.formulation.as_str(),
                r.objective,
                r.downlinked_gb,
                r.downlinks,
                r.observations,
                r.budget.total_mps,
                r.budget.total_pct,
                r.wall_time_s
            );
        }
        if !self.gammas.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:<16} {:<16} {:>12} {:>12}",
                "run", "over", "gamma z %", "gamma Z %"
            );
            let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
            for g in &self.gammas {
                let _ = writeln!(
                    out,
                    "{:<16} {:<16} {:>12} {:>12}",
                    g.a,
                    g.b,
                    pct(g.by_objective_pct),
                    pct(g.by_downlink_pct)
                );
            }
        }
        out
    }
}

/// Task counts and the manoeuvre of one satellite in one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: usize,
    pub satellite: usize,
    pub observations: usize,
    pub downlinks: usize,
    pub charging: usize,
    /// Arrival slot (zero-based), absent for the fixed-orbit problem.
    pub slot: Option<usize>,
    pub cost_mps: f64,
}

/// Per-stage, per-satellite task counts and transfer costs.
pub fn stage_table(schedule: &Schedule) -> Vec<StageRow> {
    let mut rows = Vec::new();
    for (k, sat) in schedule.satellites.iter().enumerate() {
        for (i, st) in sat.stages.iter().enumerate() {
            let m = sat.maneuver(i + 1);
            rows.push(StageRow {
                stage: i + 1,
                satellite: k + 1,
                observations: st.observations.len(),
                downlinks: st.downlinks.len(),
                charging: st.charging.len(),
                slot: m.map(|m| m.to),
                cost_mps: m.map_or(0.0, |m| m.cost_mps),
            });
        }
    }
    rows
}

pub fn render_stage_table(rows: &[StageRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} {:>4} {:>6} {:>6} {:>6} {:>6} {:>10}",
        "stage", "sat", "obs", "down", "charge", "slot", "dv [m/s]"
    );
    for r in rows {
        let slot = r
            .slot
            .map_or_else(|| "-".to_string(), |j| (j + 1).to_string());
        let _ = writeln!(
            out,
            "{:>5} {:>4} {:>6} {:>6} {:>6} {:>6} {:>10.2}",
            r.stage, r.satellite, r.observations, r.downlinks, r.charging, slot, r.cost_mps
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{Maneuver, SatelliteSchedule};

    fn run(label: &str, z: f64, zz: f64) -> RunSummary {
        RunSummary {
            label: label.into(),
            formulation: Formulation::Eossp,
            objective: z,
            downlinked_gb: zz,
            downlinks: 0,
            observations: 0,
            charging: 0,
            wall_time_s: 0.0,
            status: "optimal".into(),
            budget: summarize_ledger(&[], &[]),
        }
    }

    #[test]
    fn gamma_handles_zero_baseline() {
        assert_eq!(gamma(5.0, 0.0), None);
        assert_eq!(gamma(3.0, 2.0), Some(50.0));
        let rep = ComparisonReport::new(vec![run("e", 0.0, 0.0), run("r", 4.0, 0.1)]);
        assert_eq!(rep.gammas[0].by_objective_pct, None);
        assert!(rep.render().contains("n/a"));
    }

    #[test]
    fn pairs_follow_input_order() {
        let rep = ComparisonReport::new(vec![
            run("e", 1.0, 1.0),
            run("r", 2.0, 2.0),
            run("h", 3.0, 3.0),
        ]);
        let pairs: Vec<_> = rep
            .gammas
            .iter()
            .map(|g| (g.a.as_str(), g.b.as_str()))
            .collect();
        assert_eq!(pairs, vec![("r", "e"), ("h", "e"), ("h", "r")]);
        let back: ComparisonReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn empty_ledger_uses_nothing() {
        let s = summarize_ledger(&[vec![], vec![]], &[750.0, 750.0]);
        assert_eq!(s.total_mps, 0.0);
        assert_eq!(s.total_pct, 0.0);
        assert_eq!(s.per_satellite_pct, vec![0.0, 0.0]);
    }

    #[test]
    fn stage_rows_cover_every_stage_and_satellite() {
        let mut sat = SatelliteSchedule::empty(2);
        sat.maneuvers.push(Maneuver {
            stage: 2,
            from: 0,
            to: 3,
            cost_mps: 12.5,
        });
        sat.stages[1].charging.push(0);
        let sch = Schedule::new(Formulation::Reossp, 2, 4, 1, 1, vec![sat.clone(), sat]);
        let rows = stage_table(&sch);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].slot, Some(3));
        assert_eq!(rows[1].cost_mps, 12.5);
        assert_eq!(rows[1].charging, 1);
        assert_eq!(rows[0].slot, None);
        assert!(render_stage_table(&rows).contains("12.50"));
    }
}
