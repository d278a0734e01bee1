//! LP relaxation backed by the `microlp` simplex kernel.

use std::time::Duration;

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOptions, SolveOutcome, Variable};

use crate::error::MilpError;
use crate::model::{MilpModel, Sense, FEASIBILITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of an LP relaxation solve. `values` and `objective` are meaningful
/// only when `status` is [`LpStatus::Optimal`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: u64,
}

/// Solves the continuous relaxation of `model` (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, MilpError> {
    let relax = Relaxation::new(model);
    let n = model.num_columns();
    match relax.solve(None)? {
        NodeLp::Optimal(sol) => Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: sol.objective(),
            values: relax.values(&sol),
            iterations: sol.stats().lp_iterations,
        }),
        NodeLp::Infeasible => Ok(empty(LpStatus::Infeasible, n)),
        NodeLp::Unbounded => Ok(empty(LpStatus::Unbounded, n)),
        NodeLp::Interrupted => unreachable!("no time limit was set"),
    }
}

fn empty(status: LpStatus, n: usize) -> LpSolution {
    LpSolution {
        status,
        objective: f64::NAN,
        values: vec![f64::NAN; n],
        iterations: 0,
    }
}

/// Outcome of one relaxation solve inside the tree search.
pub(crate) enum NodeLp {
    Optimal(microlp::Solution),
    Infeasible,
    Unbounded,
    Interrupted,
}

/// The relaxation of a model as a reusable `microlp` problem.
pub(crate) struct Relaxation {
    problem: Problem,
    vars: Vec<Variable>,
    /// Set when an empty row is violated by its constant right-hand side.
    trivially_infeasible: bool,
}

impl Relaxation {
    pub(crate) fn new(model: &MilpModel) -> Self {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<Variable> = model
            .columns()
            .iter()
            .map(|c| problem.add_var(c.objective, (c.lower, c.upper)))
            .collect();
        let mut trivially_infeasible = false;
        for row in model.rows() {
            if row.coeffs.is_empty() {
                let bad = match row.sense {
                    Sense::Le => row.rhs < -FEASIBILITY_TOL,
                    Sense::Ge => row.rhs > FEASIBILITY_TOL,
                    Sense::Eq => row.rhs.abs() > FEASIBILITY_TOL,
                };
                trivially_infeasible |= bad;
                continue;
            }
            let op = match row.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            let expr: Vec<(Variable, f64)> =
                row.coeffs.iter().map(|&(c, a)| (vars[c], a)).collect();
            problem.add_constraint(expr, op, row.rhs);
        }
        Self {
            problem,
            vars,
            trivially_infeasible,
        }
    }

    pub(crate) fn solve(&self, time_limit: Option<Duration>) -> Result<NodeLp, MilpError> {
        if self.trivially_infeasible {
            return Ok(NodeLp::Infeasible);
        }
        let mut options = SolveOptions::default();
        options.time_limit = time_limit;
        convert(self.problem.solve_with(options))
    }

    /// Fixes one column of a solved relaxation and re-optimizes from its basis.
    pub(crate) fn fix(
        &self,
        sol: microlp::Solution,
        col: usize,
        value: f64,
    ) -> Result<NodeLp, MilpError> {
        convert(sol.fix_var(self.vars[col], value))
    }

    pub(crate) fn values(&self, sol: &microlp::Solution) -> Vec<f64> {
        self.vars.iter().map(|&v| sol.var_value_raw(v)).collect()
    }
}

fn convert(res: Result<SolveOutcome, microlp::Error>) -> Result<NodeLp, MilpError> {
    match res {
        Ok(SolveOutcome::Solution(sol)) => Ok(NodeLp::Optimal(sol)),
        Ok(SolveOutcome::Interrupted(_)) => Ok(NodeLp::Interrupted),
        Err(microlp::Error::Infeasible) => Ok(NodeLp::Infeasible),
        Err(microlp::Error::Unbounded) => Ok(NodeLp::Unbounded),
        Err(e) => Err(MilpError::NumericalStall {
            iterations: 0,
            message: e.to_string(),
        }),
    }
}
