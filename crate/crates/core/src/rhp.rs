//! Rolling-horizon procedure: solve a window of one control stage plus
//! look-ahead stages, commit the control stage, roll the state forward.

use std::time::Instant;

use reossp_milp::SolveLimits;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::greedy_plan;
use crate::model::{build_rhp_subproblem, ProblemData, WindowPlan};
use crate::schedule::{
    simulate_from, step_delta, tasks_by_step, CarryState, Formulation, SatelliteSchedule, Schedule,
};
use crate::solve::{solve_model, SolveStats};

/// One rolling-horizon subproblem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhpStep {
    pub control_stage: usize,
    pub window_last: usize,
    /// Stages committed from this subproblem (`first..=last`).
    pub committed: (usize, usize),
    pub status: String,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    pub elapsed_s: f64,
    /// Objective of the committed tasks only.
    pub committed_objective: f64,
    /// Δv (m/s) committed per satellite.
    pub committed_dv: Vec<f64>,
    /// The greedy plan replaced a subproblem that hit its limit without a solution.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct RhpRun {
    pub schedule: Schedule,
    pub trace: Vec<RhpStep>,
    pub last_stats: Option<SolveStats>,
}

/// State entering stage `through + 1` after executing `plan` from `carry` up to
/// and including stage `through`. The battery is the level before the next
/// transfer.
pub fn update_carry_state(
    data: &ProblemData,
    carry: &CarryState,
    plan: &WindowPlan,
    through: usize,
) -> Result<CarryState> {
    if carry.stage != plan.first || through < plan.first || through > plan.last {
        return Err(Error::Config(format!(
            "cannot roll a plan over {}..={} through stage {through} from stage {}",
            plan.first, plan.last, carry.stage
        )));
    }
    let c = &data.constants;
    let len = data.stage_len();
    let n = through - plan.first + 1;
    let mut next = CarryState {
        stage: through + 1,
        budget: Vec::with_capacity(plan.sats.len()),
        origin: Vec::with_capacity(plan.sats.len()),
        data: Vec::with_capacity(plan.sats.len()),
        battery: Vec::with_capacity(plan.sats.len()),
    };
    for (k, sat) in plan.sats.iter().enumerate() {
        let done: Vec<_> = sat
            .maneuvers
            .iter()
            .filter(|m| m.stage <= through)
            .copied()
            .collect();
        let (d, b) = simulate_from(
            c,
            len,
            plan.first,
            carry.data[k],
            carry.battery[k],
            &done,
            &sat.stages[..n],
        );
        let tasks = tasks_by_step(len, &sat.stages[..n]);
        let (dd, db) = step_delta(c, &tasks[n * len - 1]);
        let origin = sat.maneuver(through).map(|m| m.to).ok_or_else(|| {
            Error::InconsistentSolution(format!(
                "satellite {} has no transfer into stage {through}",
                k + 1
            ))
        })?;
        let budget = carry.budget[k] - done.iter().map(|m| m.cost_mps).sum::<f64>();
        if budget < -1e-9 {
            return Err(Error::InconsistentSolution(format!(
                "satellite {} overspends its budget by {} m/s",
                k + 1,
                -budget
            )));
        }
        next.budget.push(budget.max(0.0));
        next.origin.push(origin);
        next.data.push(d[n * len - 1] + dd);
        next.battery.push(b[n * len - 1] + db - c.battery_time_kj);
    }
    Ok(next)
}

/// Runs the rolling horizon with `lookahead` stages (`lookahead < S`).
/// Control stages `1..S - lookahead` commit one stage each; the last subproblem
/// commits all of its stages. A total time limit in `limits` is split evenly.
pub fn run_rhp(
    data: &ProblemData,
    lookahead: usize,
    limits: &SolveLimits,
    warm_start: bool,
) -> Result<RhpRun> {
    let num_s = data.num_stages();
    if lookahead >= num_s {
        return Err(Error::Config(format!(
            "lookahead {lookahead} must lie in 0..{num_s}"
        )));
    }
    let count = num_s - lookahead;
    let mut sub_limits = limits.clone();
    sub_limits.time_limit = limits.time_limit.map(|t| t / count as u32);

    let c = &data.constants;
    let mut carry = data.initial_carry();
    let mut sats = vec![SatelliteSchedule::empty(num_s); data.num_sats()];
    let mut trace = Vec::with_capacity(count);
    let mut carries = Vec::with_capacity(count);
    let mut last_stats = None;
    for s in 1..=count {
        let started = Instant::now();
        let fm = build_rhp_subproblem(data, s, lookahead, &carry)?;
        let (plan, stats, fallback) = match solve_model(data, &fm, &sub_limits, warm_start) {
            Ok((plan, stats)) => (plan, Some(stats), false),
            Err(Error::NoSolution(msg)) => {
                log::warn!("subproblem {s}: {msg}; committing the greedy plan");
                (
                    greedy_plan(data, Formulation::Rhp, s, s + lookahead, &carry)?,
                    None,
                    true,
                )
            }
            Err(e) => return Err(e),
        };
        let commit_last = if s == count { num_s } else { s };
        let mut committed_dv = Vec::with_capacity(sats.len());
        let (mut downlinks, mut observations) = (0, 0);
        for (acc, sat) in sats.iter_mut().zip(&plan.sats) {
            let mut dv = 0.0;
            for m in sat.maneuvers.iter().filter(|m| m.stage <= commit_last) {
                acc.maneuvers.push(*m);
                dv += m.cost_mps;
            }
            committed_dv.push(dv);
            for st in s..=commit_last {
                let tasks = sat.stages[st - s].clone();
                downlinks += tasks.downlinks.len();
                observations += tasks.observations.len();
                acc.stages[st - 1] = tasks;
            }
        }
        trace.push(RhpStep {
            control_stage: s,
            window_last: s + lookahead,
            committed: (s, commit_last),
            status: stats
                .as_ref()
                .map_or_else(|| "greedy_fallback".into(), |st| st.status.clone()),
            objective: stats.as_ref().and_then(|st| st.objective),
            best_bound: stats.as_ref().and_then(|st| st.best_bound),
            gap: stats.as_ref().and_then(|st| st.gap),
            elapsed_s: started.elapsed().as_secs_f64(),
            committed_objective: c.objective(downlinks, observations),
            committed_dv,
            fallback,
        });
        if stats.is_some() {
            last_stats = stats;
        }
        let next = (commit_last < num_s)
            .then(|| update_carry_state(data, &carry, &plan, commit_last))
            .transpose()?;
        carries.push(carry);
        match next {
            Some(n) => carry = n,
            None => break,
        }
    }
    let mut schedule = data.schedule_shell(Formulation::Rhp, sats);
    schedule.carry = carries;
    schedule.finalize(c);
    Ok(RhpRun {
        schedule,
        trace,
        last_stats,
    })
}
