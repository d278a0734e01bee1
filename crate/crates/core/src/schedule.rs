//! Realized schedules, storage re-simulation, scoring and JSON I/O.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Which problem produced a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Eossp,
    Reossp,
    Rhp,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Eossp => "eossp",
            Self::Reossp => "reossp",
            Self::Rhp => "rhp",
        }
    }

    /// True when satellites follow a slot path through the stages.
    pub fn is_staged(self) -> bool {
        !matches!(self, Self::Eossp)
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eossp" => Ok(Self::Eossp),
            "reossp" => Ok(Self::Reossp),
            "rhp" => Ok(Self::Rhp),
            other => Err(Error::Parse(format!("unknown formulation `{other}`"))),
        }
    }
}

/// Transfer of one satellite into `to` (slot of `stage`) from `from` (slot of the
/// previous stage). Slots are zero-based; stages are one-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maneuver {
    pub stage: usize,
    pub from: usize,
    pub to: usize,
    pub cost_mps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub step: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Downlink {
    pub step: usize,
    pub station: usize,
}

/// Tasks of one satellite in one stage; steps are zero-based within the stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTasks {
    pub observations: Vec<Observation>,
    pub downlinks: Vec<Downlink>,
    pub charging: Vec<usize>,
}

impl StageTasks {
    fn sort(&mut self) {
        self.observations.sort_by_key(|o| (o.step, o.target));
        self.downlinks.sort_by_key(|d| (d.step, d.station));
        self.charging.sort_unstable();
    }
}

/// What a satellite does during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Observe(usize),
    Downlink(usize),
    Charge,
}

/// Plan of one satellite: its manoeuvres, per-stage tasks and storage series
/// (`data` in MB, `battery` in kJ, one value per global step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSchedule {
    pub maneuvers: Vec<Maneuver>,
    pub stages: Vec<StageTasks>,
    pub data: Vec<f64>,
    pub battery: Vec<f64>,
}

impl SatelliteSchedule {
    pub fn empty(num_stages: usize) -> Self {
        Self {
            maneuvers: Vec::new(),
            stages: vec![StageTasks::default(); num_stages],
            data: Vec::new(),
            battery: Vec::new(),
        }
    }

    /// Tasks per global step (several entries at one step indicate an overlap).
    pub fn tasks_by_step(&self, stage_len: usize) -> Vec<Vec<Task>> {
        tasks_by_step(stage_len, &self.stages)
    }

    pub fn maneuver(&self, stage: usize) -> Option<&Maneuver> {
        self.maneuvers.iter().find(|m| m.stage == stage)
    }

    pub fn total_cost(&self) -> f64 {
        self.maneuvers.iter().fold(0.0, |a, m| a + m.cost_mps)
    }

    pub fn count_downlinks(&self) -> usize {
        self.stages.iter().map(|s| s.downlinks.len()).sum()
    }

    pub fn count_observations(&self) -> usize {
        self.stages.iter().map(|s| s.observations.len()).sum()
    }

    pub fn count_charging(&self) -> usize {
        self.stages.iter().map(|s| s.charging.len()).sum()
    }

    pub fn sort(&mut self) {
        self.maneuvers.sort_by_key(|m| m.stage);
        self.stages.iter_mut().for_each(StageTasks::sort);
    }
}

/// Rolled-forward state entering one RHP control stage: residual budget (m/s),
/// occupied slot, data (MB) and pre-manoeuvre battery (kJ) per satellite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarryState {
    pub stage: usize,
    pub budget: Vec<f64>,
    pub origin: Vec<usize>,
    pub data: Vec<f64>,
    pub battery: Vec<f64>,
}

impl CarryState {
    /// State at the start of the horizon.
    pub fn initial(constants: &PhysicalConstants, budgets: &[f64]) -> Self {
        let k = budgets.len();
        Self {
            stage: 1,
            budget: budgets.to_vec(),
            origin: vec![0; k],
            data: vec![constants.data_min_mb(); k],
            battery: vec![constants.battery_max_kj; k],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMeta {
    pub formulation: Formulation,
    pub num_sats: usize,
    pub num_stages: usize,
    pub stage_len: usize,
    pub num_targets: usize,
    pub num_stations: usize,
    pub objective: f64,
    pub downlinked_gb: f64,
}

/// A complete schedule. Serialized as the schedule JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub meta: ScheduleMeta,
    pub satellites: Vec<SatelliteSchedule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub carry: Vec<CarryState>,
}

impl Schedule {
    pub fn new(
        formulation: Formulation,
        num_stages: usize,
        stage_len: usize,
        num_targets: usize,
        num_stations: usize,
        satellites: Vec<SatelliteSchedule>,
    ) -> Self {
        Self {
            meta: ScheduleMeta {
                formulation,
                num_sats: satellites.len(),
                num_stages,
                stage_len,
                num_targets,
                num_stations,
                objective: 0.0,
                downlinked_gb: 0.0,
            },
            satellites,
            carry: Vec::new(),
        }
    }

    pub fn formulation(&self) -> Formulation {
        self.meta.formulation
    }

    pub fn steps(&self) -> usize {
        self.meta.num_stages * self.meta.stage_len
    }

    pub fn count_downlinks(&self) -> usize {
        self.satellites
            .iter()
            .map(SatelliteSchedule::count_downlinks)
            .sum()
    }

    pub fn count_observations(&self) -> usize {
        self.satellites
            .iter()
            .map(SatelliteSchedule::count_observations)
            .sum()
    }

    /// Recomputes storage series and scores from the tasks and manoeuvres.
    pub fn finalize(&mut self, constants: &PhysicalConstants) {
        for sat in &mut self.satellites {
            sat.sort();
            let (d, b) = simulate_storage(constants, self.meta.stage_len, sat);
            sat.data = d;
            sat.battery = b;
        }
        let (z, zz) = score(self, constants);
        self.meta.objective = z;
        self.meta.downlinked_gb = zz;
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Objective value `z` and downlinked volume `Z` (GB) of a schedule.
pub fn score(schedule: &Schedule, constants: &PhysicalConstants) -> (f64, f64) {
    let downlinks = schedule.count_downlinks();
    let observations = schedule.count_observations();
    (
        constants.objective(downlinks, observations),
        constants.downlinked_gb(downlinks),
    )
}

/// Forward-simulates the data and battery series of one satellite from its tasks.
/// Storage starts at the data floor and a full battery; a manoeuvre into stage `s`
/// costs the reconfiguration energy at the first step of that stage.
pub fn simulate_storage(
    constants: &PhysicalConstants,
    stage_len: usize,
    sat: &SatelliteSchedule,
) -> (Vec<f64>, Vec<f64>) {
    simulate_from(
        constants,
        stage_len,
        1,
        constants.data_min_mb(),
        constants.battery_max_kj,
        &sat.maneuvers,
        &sat.stages,
    )
}

/// Forward simulation over the consecutive stages `first..first + stages.len()`
/// starting from data `d0` and the battery level `b0` held before the manoeuvre
/// into `first`.
pub fn simulate_from(
    constants: &PhysicalConstants,
    stage_len: usize,
    first: usize,
    d0: f64,
    b0: f64,
    maneuvers: &[Maneuver],
    stages: &[StageTasks],
) -> (Vec<f64>, Vec<f64>) {
    let steps = stage_len * stages.len();
    let tasks = tasks_by_step(stage_len, stages);
    let recon = |stage: usize| {
        constants.battery_recon_kj * maneuvers.iter().filter(|m| m.stage == stage).count() as f64
    };
    let mut d = Vec::with_capacity(steps);
    let mut b = Vec::with_capacity(steps);
    if steps == 0 {
        return (d, b);
    }
    d.push(d0);
    b.push(b0 - recon(first));
    for g in 0..steps - 1 {
        let (dd, db) = step_delta(constants, &tasks[g]);
        let mut next_b = b[g] + db - constants.battery_time_kj;
        if (g + 1) % stage_len == 0 {
            next_b -= recon(first + (g + 1) / stage_len);
        }
        d.push(d[g] + dd);
        b.push(next_b);
    }
    (d, b)
}

/// Tasks per step over consecutive stages (several entries at one step indicate
/// an overlap).
pub fn tasks_by_step(stage_len: usize, stages: &[StageTasks]) -> Vec<Vec<Task>> {
    let mut out = vec![Vec::new(); stage_len * stages.len()];
    for (si, st) in stages.iter().enumerate() {
        let base = si * stage_len;
        let mut put = |step: usize, task| {
            if step < stage_len {
                out[base + step].push(task);
            }
        };
        st.observations
            .iter()
            .for_each(|o| put(o.step, Task::Observe(o.target)));
        st.downlinks
            .iter()
            .for_each(|d| put(d.step, Task::Downlink(d.station)));
        st.charging.iter().for_each(|&c| put(c, Task::Charge));
    }
    out
}

/// Data and battery change caused by the tasks of one step, excluding the
/// constant housekeeping drain.
pub fn step_delta(constants: &PhysicalConstants, tasks: &[Task]) -> (f64, f64) {
    let mut dd = 0.0;
    let mut db = 0.0;
    for t in tasks {
        match t {
            Task::Observe(_) => {
                dd += constants.data_obs_mb;
                db -= constants.battery_obs_kj;
            }
            Task::Downlink(_) => {
                dd -= constants.data_comm_mb;
                db -= constants.battery_comm_kj;
            }
            Task::Charge => db += constants.battery_charge_kj,
        }
    }
    (dd, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sat_with(stages: usize) -> SatelliteSchedule {
        SatelliteSchedule::empty(stages)
    }

    #[test]
    fn idle_schedule_drains_housekeeping_energy() {
        let c = PhysicalConstants::default();
        let (d, b) = simulate_storage(&c, 4, &sat_with(2));
        assert_eq!(d, vec![0.0; 8]);
        for (g, v) in b.iter().enumerate() {
            assert!((v - (1647.0 - 2.0 * g as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn tasks_post_on_the_next_step_and_recon_hits_stage_starts() {
        let c = PhysicalConstants::default();
        let mut sat = sat_with(2);
        sat.stages[0]
            .observations
            .push(Observation { step: 0, target: 0 });
        sat.stages[0].downlinks.push(Downlink {
            step: 3,
            station: 0,
        });
        sat.maneuvers = vec![
            Maneuver {
                stage: 1,
                from: 0,
                to: 0,
                cost_mps: 0.0,
            },
            Maneuver {
                stage: 2,
                from: 0,
                to: 1,
                cost_mps: 3.0,
            },
        ];
        let (d, b) = simulate_storage(&c, 4, &sat);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 102.5).abs() < 1e-12);
        assert!((d[4] - 2.5).abs() < 1e-12);
        assert!((b[0] - 1646.5).abs() < 1e-12);
        assert!((b[1] - (1646.5 - 16.26 - 2.0)).abs() < 1e-9);
        let expected4 = 1646.5 - 16.26 - 1.2 - 4.0 * 2.0 - 0.5;
        assert!((b[4] - expected4).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let c = PhysicalConstants::default();
        let mut sat = sat_with(1);
        sat.stages[0].charging = vec![2, 1];
        let mut s = Schedule::new(Formulation::Eossp, 1, 3, 1, 1, vec![sat]);
        s.finalize(&c);
        assert_eq!(s.satellites[0].stages[0].charging, vec![1, 2]);
        let back = Schedule::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn formulation_names() {
        for f in [Formulation::Eossp, Formulation::Reossp, Formulation::Rhp] {
            assert_eq!(f.as_str().parse::<Formulation>().unwrap(), f);
        }
        assert!("milp".parse::<Formulation>().is_err());
    }
}
