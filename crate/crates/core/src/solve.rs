//! High-level solve entry points: model construction, greedy warm start,
//! branch and bound and plan recovery.

use std::time::Duration;

use reossp_milp::{solve_milp_with_start, MilpSolution, MilpStatus, SolveLimits};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::greedy_plan;
use crate::model::{
    build_eossp, build_reossp, embed_plan, extract_plan, FormulationModel, ProblemData, WindowPlan,
};
use crate::rhp::{run_rhp, RhpStep};
use crate::schedule::{Formulation, Schedule};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Limits of the whole solve. The rolling horizon splits the time limit
    /// evenly over its subproblems.
    pub limits: SolveLimits,
    /// Look-ahead stages of the rolling horizon.
    pub lookahead: usize,
    /// Seed the search with the greedy plan.
    pub warm_start: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            limits: SolveLimits::default(),
            lookahead: 1,
            warm_start: true,
        }
    }
}

/// Solver statistics of one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub status: String,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub elapsed_s: f64,
    pub columns: usize,
    pub rows: usize,
    pub binaries: usize,
    pub warm_start_objective: Option<f64>,
}

impl SolveStats {
    fn new(fm: &FormulationModel, sol: &MilpSolution, warm: Option<f64>) -> Self {
        Self {
            status: sol.status.as_str().into(),
            objective: sol.objective,
            best_bound: sol.best_bound,
            gap: sol.gap,
            nodes: sol.nodes,
            elapsed_s: sol.elapsed.as_secs_f64(),
            columns: fm.model.num_columns(),
            rows: fm.model.num_rows(),
            binaries: fm.model.num_binaries(),
            warm_start_objective: warm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub schedule: Schedule,
    /// Statistics of the single model, or of the last rolling-horizon subproblem.
    pub stats: SolveStats,
    pub elapsed: Duration,
    /// Per-subproblem trace of the rolling horizon.
    pub rhp: Vec<RhpStep>,
}

/// Solves one built model, optionally warm-started by the greedy plan of its window.
pub fn solve_model(
    data: &ProblemData,
    fm: &FormulationModel,
    limits: &SolveLimits,
    warm_start: bool,
) -> Result<(WindowPlan, SolveStats)> {
    let mut start = None;
    let mut warm_obj = None;
    if warm_start {
        let carry = fm.carry.clone().unwrap_or_else(|| data.initial_carry());
        match greedy_plan(data, fm.formulation, fm.first_stage, fm.last_stage, &carry) {
            Ok(plan) => {
                let x = embed_plan(fm, data, &plan.sats)?;
                if fm.model.is_feasible(&x) {
                    warm_obj = Some(fm.model.objective_value(&x));
                    start = Some(x);
                } else {
                    log::warn!("greedy plan is not feasible for {}", fm.model.name);
                }
            }
            Err(e) => log::debug!("no greedy warm start: {e}"),
        }
    }
    let sol = solve_milp_with_start(&fm.model, limits, start.as_deref())?;
    let stats = SolveStats::new(fm, &sol, warm_obj);
    match sol.status {
        MilpStatus::Infeasible => Err(Error::Infeasible(format!(
            "model {} is infeasible",
            fm.model.name
        ))),
        MilpStatus::Unbounded => Err(Error::InconsistentSolution(format!(
            "model {} is unbounded",
            fm.model.name
        ))),
        MilpStatus::NoSolutionLimitHit => Err(Error::NoSolution(format!(
            "model {} hit a limit after {} nodes",
            fm.model.name, sol.nodes
        ))),
        MilpStatus::Optimal | MilpStatus::FeasibleLimitHit => {
            let values = sol.values.as_deref().ok_or_else(|| {
                Error::InconsistentSolution("solver reported a solution without values".into())
            })?;
            Ok((extract_plan(fm, data, values)?, stats))
        }
    }
}

/// Solves the requested formulation over the full horizon.
pub fn solve(
    data: &ProblemData,
    formulation: Formulation,
    options: &SolveOptions,
) -> Result<SolveOutcome> {
    let started = std::time::Instant::now();
    if formulation == Formulation::Rhp {
        let run = run_rhp(data, options.lookahead, &options.limits, options.warm_start)?;
        let stats = run
            .last_stats
            .ok_or_else(|| Error::NoSolution("rolling horizon solved no subproblem".into()))?;
        return Ok(SolveOutcome {
            schedule: run.schedule,
            stats,
            elapsed: started.elapsed(),
            rhp: run.trace,
        });
    }
    let fm = match formulation {
        Formulation::Eossp => build_eossp(data)?,
        _ => build_reossp(data)?,
    };
    let (plan, stats) = solve_model(data, &fm, &options.limits, options.warm_start)?;
    let mut schedule = data.schedule_shell(formulation, plan.sats);
    schedule.finalize(&data.constants);
    Ok(SolveOutcome {
        schedule,
        stats,
        elapsed: started.elapsed(),
        rhp: Vec::new(),
    })
}
