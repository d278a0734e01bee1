//! Constraint checks evaluated directly on a schedule and the instance data,
//! independent of the MILP matrices.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::ProblemData;
use crate::schedule::{score, step_delta, Schedule, Task};

/// Absolute-plus-relative tolerance of every numeric check.
pub const VALIDATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationClass {
    TargetVisibility,
    StationVisibility,
    SunVisibility,
    TaskOverlap,
    DataTracking,
    DataCapacity,
    DataFloor,
    BatteryTracking,
    BatteryCeiling,
    BatteryFloor,
    FlowInitial,
    FlowContinuity,
    Budget,
    CostLedger,
    CarryState,
    Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub class: ViolationClass,
    pub satellite: Option<usize>,
    pub step: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.class)?;
        if let Some(k) = self.satellite {
            write!(f, " sat {}", k + 1)?;
        }
        if let Some(g) = self.step {
            write!(f, " step {}", g + 1)?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn classes(&self) -> BTreeSet<ViolationClass> {
        self.violations.iter().map(|v| v.class).collect()
    }

    fn push(
        &mut self,
        class: ViolationClass,
        satellite: Option<usize>,
        step: Option<usize>,
        message: String,
    ) {
        self.violations.push(Violation {
            class,
            satellite,
            step,
            message,
        });
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALIDATION_TOL * (1.0 + a.abs().max(b.abs()))
}

fn le(a: f64, b: f64) -> bool {
    a <= b + VALIDATION_TOL * (1.0 + b.abs())
}

/// Checks every constraint group of the schedule's formulation against `data`.
pub fn validate(schedule: &Schedule, data: &ProblemData) -> ValidationReport {
    use ViolationClass::*;
    let mut rep = ValidationReport::default();
    let c = &data.constants;
    let vis = &data.tensors;
    let meta = &schedule.meta;
    let (num_s, len) = (data.num_stages(), data.stage_len());
    let steps = num_s * len;

    if meta.num_sats != data.num_sats()
        || schedule.satellites.len() != data.num_sats()
        || meta.num_stages != num_s
        || meta.stage_len != len
        || meta.num_targets != vis.num_targets
        || meta.num_stations != vis.num_stations
    {
        rep.push(
            Structure,
            None,
            None,
            "schedule dimensions differ from the instance".into(),
        );
        return rep;
    }
    for (k, sat) in schedule.satellites.iter().enumerate() {
        let mut bad =
            sat.stages.len() != num_s || sat.data.len() != steps || sat.battery.len() != steps;
        for st in &sat.stages {
            bad |= st
                .observations
                .iter()
                .any(|o| o.step >= len || o.target >= vis.num_targets);
            bad |= st
                .downlinks
                .iter()
                .any(|d| d.step >= len || d.station >= vis.num_stations);
            bad |= st.charging.iter().any(|&h| h >= len);
        }
        for m in &sat.maneuvers {
            bad |= m.stage == 0
                || m.stage > num_s
                || m.from >= data.costs.num_slots(m.stage.max(2) - 1, k)
                || m.to >= data.costs.num_slots(m.stage, k);
        }
        if !schedule.formulation().is_staged() && !sat.maneuvers.is_empty() {
            bad = true;
        }
        if bad {
            rep.push(
                Structure,
                Some(k),
                None,
                "indices or series lengths out of range".into(),
            );
        }
    }
    if !rep.is_valid() {
        return rep;
    }
    let (z, zz) = score(schedule, c);
    if !close(z, meta.objective) || !close(zz, meta.downlinked_gb) {
        rep.push(
            Structure,
            None,
            None,
            format!(
                "reported scores ({}, {}) differ from recount ({z}, {zz})",
                meta.objective, meta.downlinked_gb
            ),
        );
    }

    for (k, sat) in schedule.satellites.iter().enumerate() {
        let staged = schedule.formulation().is_staged();
        // Occupied slot per stage (None when the path is broken).
        let mut slot: Vec<Option<usize>> = vec![None; num_s + 1];
        let mut recon = vec![0.0; num_s + 2];
        if staged {
            slot[0] = Some(0);
            let mut spent = 0.0;
            for s in 1..=num_s {
                let ms: Vec<_> = sat.maneuvers.iter().filter(|m| m.stage == s).collect();
                recon[s] = c.battery_recon_kj * ms.len() as f64;
                let class = if s == 1 { FlowInitial } else { FlowContinuity };
                if ms.len() != 1 {
                    rep.push(
                        class,
                        Some(k),
                        None,
                        format!("{} transfers into stage {s}", ms.len()),
                    );
                    continue;
                }
                let m = ms[0];
                if slot[s - 1] != Some(m.from) {
                    rep.push(
                        class,
                        Some(k),
                        None,
                        format!("stage {s} transfer leaves slot {} not occupied", m.from + 1),
                    );
                    if m.from >= data.costs.num_slots(s - 1, k) {
                        continue;
                    }
                }
                let true_cost = data.costs.cost(s, k, m.from, m.to);
                if !true_cost.is_finite() {
                    rep.push(
                        CostLedger,
                        Some(k),
                        None,
                        format!("stage {s} transfer is infeasible"),
                    );
                } else {
                    if !close(true_cost, m.cost_mps) {
                        rep.push(
                            CostLedger,
                            Some(k),
                            None,
                            format!(
                                "stage {s} ledger {} m/s, transfer costs {true_cost} m/s",
                                m.cost_mps
                            ),
                        );
                    }
                    spent += true_cost;
                }
                slot[s] = Some(m.to);
            }
            let budget = data.costs.budgets[k];
            if !le(spent, budget) {
                rep.push(
                    Budget,
                    Some(k),
                    None,
                    format!("spends {spent} m/s of {budget} m/s"),
                );
            }
        }

        let tasks = sat.tasks_by_step(len);
        let (d, b) = (&sat.data, &sat.battery);
        if !close(d[0], c.data_min_mb()) {
            rep.push(
                DataTracking,
                Some(k),
                Some(0),
                format!("initial data {} MB", d[0]),
            );
        }
        if !close(b[0], c.battery_max_kj - recon[1]) {
            rep.push(
                BatteryTracking,
                Some(k),
                Some(0),
                format!("initial battery {} kJ", b[0]),
            );
        }
        if !le(c.battery_min_kj, c.battery_max_kj - recon[1]) {
            rep.push(
                BatteryFloor,
                Some(k),
                Some(0),
                "first transfer drains the battery".into(),
            );
        }
        for g in 0..steps {
            let (s, t) = (g / len + 1, g % len);
            let here = &tasks[g];
            if here.len() > 1 {
                rep.push(
                    TaskOverlap,
                    Some(k),
                    Some(g),
                    format!("{} tasks in one step", here.len()),
                );
            }
            let occupied = if staged { slot[s] } else { None };
            for task in here {
                let (ok, class) = match (*task, staged) {
                    (Task::Observe(p), false) => (vis.flat(k).target.get(g, p), TargetVisibility),
                    (Task::Downlink(q), false) => {
                        (vis.flat(k).station.get(g, q), StationVisibility)
                    }
                    (Task::Charge, false) => (vis.flat(k).sun.get(g, 0), SunVisibility),
                    (Task::Observe(p), true) => (
                        occupied.is_none_or(|j| vis.v(s, k, j, t, p)),
                        TargetVisibility,
                    ),
                    (Task::Downlink(q), true) => (
                        occupied.is_none_or(|j| vis.w(s, k, j, t, q)),
                        StationVisibility,
                    ),
                    (Task::Charge, true) => {
                        (occupied.is_none_or(|j| vis.h(s, k, j, t)), SunVisibility)
                    }
                };
                if !ok {
                    rep.push(
                        class,
                        Some(k),
                        Some(g),
                        format!("{task:?} outside its window"),
                    );
                }
            }
            let n_obs = here
                .iter()
                .filter(|t| matches!(t, Task::Observe(_)))
                .count() as f64;
            let n_comm = here
                .iter()
                .filter(|t| matches!(t, Task::Downlink(_)))
                .count() as f64;
            let n_charge = here.iter().filter(|t| matches!(t, Task::Charge)).count() as f64;

            if !le(d[g] + c.data_obs_mb * n_obs, c.data_max_mb()) {
                rep.push(
                    DataCapacity,
                    Some(k),
                    Some(g),
                    format!("data {} MB exceeds capacity", d[g]),
                );
            }
            if !le(c.data_min_mb(), d[g] - c.data_comm_mb * n_comm) {
                rep.push(
                    DataFloor,
                    Some(k),
                    Some(g),
                    format!("data {} MB below floor", d[g]),
                );
            }
            if !le(b[g] + c.battery_charge_kj * n_charge, c.battery_max_kj) {
                rep.push(
                    BatteryCeiling,
                    Some(k),
                    Some(g),
                    format!("battery {} kJ overflows", b[g]),
                );
            }
            let next_recon = if t + 1 == len && s < num_s {
                recon[s + 1]
            } else {
                0.0
            };
            let after = b[g]
                - c.battery_obs_kj * n_obs
                - c.battery_comm_kj * n_comm
                - c.battery_time_kj
                - next_recon;
            if !le(c.battery_min_kj, after) || !le(c.battery_min_kj, b[g]) {
                rep.push(
                    BatteryFloor,
                    Some(k),
                    Some(g),
                    format!("battery {} kJ drains to {after} kJ", b[g]),
                );
            }
            if g + 1 < steps {
                let (dd, db) = step_delta(c, here);
                if !close(d[g + 1], d[g] + dd) {
                    rep.push(
                        DataTracking,
                        Some(k),
                        Some(g + 1),
                        format!("data {} MB breaks the balance", d[g + 1]),
                    );
                }
                let expect = b[g] + db - c.battery_time_kj - next_recon;
                if !close(b[g + 1], expect) {
                    rep.push(
                        BatteryTracking,
                        Some(k),
                        Some(g + 1),
                        format!("battery {} kJ, balance gives {expect} kJ", b[g + 1]),
                    );
                }
            }
        }
    }

    check_carry(schedule, data, &mut rep);
    rep
}

/// Each recorded carry state must equal the state implied by the schedule before
/// its stage.
fn check_carry(schedule: &Schedule, data: &ProblemData, rep: &mut ValidationReport) {
    let c = &data.constants;
    let len = data.stage_len();
    for carry in &schedule.carry {
        let s = carry.stage;
        let k_n = data.num_sats();
        if s == 0
            || s > data.num_stages()
            || carry.budget.len() != k_n
            || carry.origin.len() != k_n
            || carry.data.len() != k_n
            || carry.battery.len() != k_n
        {
            rep.push(
                ViolationClass::CarryState,
                None,
                None,
                format!("malformed carry record for stage {s}"),
            );
            continue;
        }
        for (k, sat) in schedule.satellites.iter().enumerate() {
            let spent: f64 = sat
                .maneuvers
                .iter()
                .filter(|m| m.stage < s)
                .map(|m| m.cost_mps)
                .sum();
            let origin = if s == 1 {
                Some(0)
            } else {
                sat.maneuver(s - 1).map(|m| m.to)
            };
            let recon =
                sat.maneuvers.iter().filter(|m| m.stage == s).count() as f64 * c.battery_recon_kj;
            let g = (s - 1) * len;
            let ok = carry.budget[k] >= -VALIDATION_TOL
                && close(carry.budget[k], data.costs.budgets[k] - spent)
                && origin == Some(carry.origin[k])
                && close(carry.data[k], sat.data[g])
                && close(carry.battery[k], sat.battery[g] + recon);
            if !ok {
                rep.push(
                    ViolationClass::CarryState,
                    Some(k),
                    Some(g),
                    format!("carry into stage {s} disagrees with the committed schedule"),
                );
            }
        }
    }
}
