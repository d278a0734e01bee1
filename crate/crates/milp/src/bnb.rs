//! Branch and bound over the `microlp` relaxation.
//!
//! Node selection is best-bound with depth-first plunging: the best open node
//! (deepest among equal bounds) is popped, then the search dives along the preferred child until the node is
//! pruned, infeasible or integral, pushing every sibling onto the open heap.
//! Branching uses the most fractional binary with ties broken by the lowest
//! column index. Single-threaded runs are fully deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use crate::error::MilpError;
use crate::lp::{NodeLp, Relaxation};
use crate::model::{MilpModel, VarKind, FEASIBILITY_TOL, INTEGRALITY_TOL};
use crate::presolve::{tighten_bounds, Presolve};

/// Limits and tolerances for [`solve_milp`].
#[derive(Debug, Clone)]
pub struct SolveLimits {
    /// Wall-clock budget. `None` means unlimited.
    pub time_limit: Option<Duration>,
    /// Maximum number of LP nodes. `None` means unlimited.
    pub node_limit: Option<u64>,
    /// Relative gap `(bound - incumbent) / max(1, |incumbent|)` at which the
    /// search stops and reports optimality.
    pub gap_tolerance: f64,
    /// Worker threads. With more than one thread only the objective value is
    /// reproducible, not the argmax.
    pub threads: usize,
    /// Record every solved node in [`MilpSolution::trace`].
    pub record_trace: bool,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: None,
            gap_tolerance: 1e-4,
            threads: 1,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MilpStatus {
    Optimal,
    FeasibleLimitHit,
    Infeasible,
    Unbounded,
    NoSolutionLimitHit,
}

impl MilpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MilpStatus::Optimal => "optimal",
            MilpStatus::FeasibleLimitHit => "feasible_limit_hit",
            MilpStatus::Infeasible => "infeasible",
            MilpStatus::Unbounded => "unbounded",
            MilpStatus::NoSolutionLimitHit => "no_solution_limit_hit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => MilpStatus::Optimal,
            "feasible_limit_hit" => MilpStatus::FeasibleLimitHit,
            "infeasible" => MilpStatus::Infeasible,
            "unbounded" => MilpStatus::Unbounded,
            "no_solution_limit_hit" => MilpStatus::NoSolutionLimitHit,
            _ => return None,
        })
    }

    pub fn has_solution(self) -> bool {
        matches!(self, MilpStatus::Optimal | MilpStatus::FeasibleLimitHit)
    }
}

/// One solved relaxation in the search tree.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: u64,
    pub parent: Option<u64>,
    pub depth: usize,
    /// LP objective of the node relaxation, `None` when infeasible.
    pub bound: Option<f64>,
    /// Objective of the node relaxation when it was integral.
    pub integral_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncumbentUpdate {
    pub node_count: u64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub elapsed: Duration,
    pub incumbent_history: Vec<IncumbentUpdate>,
    pub trace: Vec<NodeRecord>,
}

/// Solves `model` to optimality or until a limit is hit.
pub fn solve_milp(model: &MilpModel, limits: &SolveLimits) -> Result<MilpSolution, MilpError> {
    solve_milp_with_start(model, limits, None)
}

/// Like [`solve_milp`], seeding the incumbent with `start` when it is feasible.
pub fn solve_milp_with_start(
    model: &MilpModel,
    limits: &SolveLimits,
    start: Option<&[f64]>,
) -> Result<MilpSolution, MilpError> {
    if !(0.0..1.0).contains(&limits.gap_tolerance) {
        return Err(MilpError::InvalidOption(format!(
            "gap tolerance {} outside [0, 1)",
            limits.gap_tolerance
        )));
    }
    if limits.threads == 0 {
        return Err(MilpError::InvalidOption("threads must be positive".into()));
    }
    let mut reduced = model.clone();
    let presolved = tighten_bounds(&mut reduced, PRESOLVE_PASSES);
    let search = Search::new(&reduced, limits);
    if presolved == Presolve::Infeasible {
        return Ok(search.finish(
            MilpStatus::Infeasible,
            None,
            None,
            0,
            Vec::new(),
            Vec::new(),
        ));
    }
    search.run(start)
}

/// Bound-tightening sweeps before the search.
const PRESOLVE_PASSES: usize = 20;

/// Open node: the column fixings that define it and the bound inherited from its parent.
#[derive(Debug, Clone)]
struct OpenNode {
    bound: f64,
    id: u64,
    parent: Option<u64>,
    depth: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on bound; among equal bounds the deeper, then the older node
        // comes first. Floored bounds tie often, and depth keeps the search diving.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| self.depth.cmp(&other.depth))
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

/// Outcome of one plunge, merged into the global state by the driver.
#[derive(Default)]
struct PlungeResult {
    children: Vec<OpenNode>,
    candidates: Vec<(f64, Vec<f64>)>,
    records: Vec<NodeRecord>,
    nodes: u64,
    /// Largest bound discarded only because it was within tolerance of the incumbent.
    pruned_bound: Option<f64>,
    unbounded: bool,
}

struct Search<'a> {
    model: &'a MilpModel,
    limits: &'a SolveLimits,
    relax: Relaxation,
    binaries: Vec<usize>,
    integral_objective: bool,
    started: Instant,
    next_id: AtomicU64,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, limits: &'a SolveLimits) -> Self {
        Self {
            model,
            limits,
            relax: Relaxation::new(model),
            binaries: model.binary_columns(),
            integral_objective: model.has_integral_objective(),
            started: Instant::now(),
            next_id: AtomicU64::new(0),
        }
    }

    fn remaining(&self) -> Option<Duration> {
        self.limits
            .time_limit
            .map(|t| t.saturating_sub(self.started.elapsed()))
    }

    fn out_of_time(&self) -> bool {
        self.remaining().is_some_and(|r| r.is_zero())
    }

    /// Bound used for pruning; integral objectives let the LP bound be floored.
    fn effective(&self, lp_bound: f64) -> f64 {
        if self.integral_objective {
            (lp_bound + 1e-6).floor()
        } else {
            lp_bound
        }
    }

    fn prune_tol(&self, incumbent: f64) -> f64 {
        (self.limits.gap_tolerance * incumbent.abs().max(1.0)).max(1e-9)
    }

    fn fresh_id(&self) -> u64 {
        self.next_id.fetch_add(1, AtomicOrdering::Relaxed)
    }

    fn run(self, start: Option<&[f64]>) -> Result<MilpSolution, MilpError> {
        let mut incumbent: Option<Incumbent> = None;
        let mut history = Vec::new();
        let mut trace = Vec::new();
        let mut nodes = 0u64;

        if let Some(start) = start {
            if start.len() == self.model.num_columns() {
                let vals = self.snap(start);
                if self.model.is_feasible(&vals) {
                    let obj = self.model.objective_value(&vals);
                    history.push(IncumbentUpdate {
                        node_count: 0,
                        objective: obj,
                    });
                    incumbent = Some(Incumbent {
                        objective: obj,
                        values: vals,
                    });
                }
            }
        }

        let root = match self.relax.solve(self.remaining())? {
            NodeLp::Optimal(sol) => sol,
            NodeLp::Infeasible => {
                return Ok(self.finish(MilpStatus::Infeasible, None, None, 0, history, trace))
            }
            NodeLp::Unbounded => {
                return Ok(self.finish(MilpStatus::Unbounded, None, None, 0, history, trace))
            }
            NodeLp::Interrupted => {
                let status = if incumbent.is_some() {
                    MilpStatus::FeasibleLimitHit
                } else {
                    MilpStatus::NoSolutionLimitHit
                };
                return Ok(self.finish(status, incumbent, None, 0, history, trace));
            }
        };

        if let Some((obj, vals)) = self.round_heuristic(&root)? {
            if incumbent.as_ref().is_none_or(|inc| obj > inc.objective) {
                history.push(IncumbentUpdate {
                    node_count: 0,
                    objective: obj,
                });
                incumbent = Some(Incumbent {
                    objective: obj,
                    values: vals,
                });
            }
        }

        let mut heap = BinaryHeap::new();
        heap.push(OpenNode {
            bound: self.effective(root.objective()),
            id: self.fresh_id(),
            parent: None,
            depth: 0,
            fixings: Vec::new(),
        });
        let mut pruned_bound: Option<f64> = None;
        let mut limit_hit = false;

        loop {
            // Discard open nodes that cannot beat the incumbent by more than the tolerance.
            if let Some(inc) = &incumbent {
                let tol = self.prune_tol(inc.objective);
                if let Some(top) = heap.peek() {
                    if top.bound <= inc.objective + tol {
                        let best = heap
                            .iter()
                            .map(|n| n.bound)
                            .fold(f64::NEG_INFINITY, f64::max);
                        if best > inc.objective {
                            pruned_bound = Some(pruned_bound.map_or(best, |p: f64| p.max(best)));
                        }
                        heap.clear();
                    }
                }
            }
            if heap.is_empty() {
                break;
            }
            if self.out_of_time() || self.limits.node_limit.is_some_and(|l| nodes >= l) {
                limit_hit = true;
                break;
            }

            let batch_size = self.limits.threads.min(heap.len());
            let batch: Vec<OpenNode> = (0..batch_size).filter_map(|_| heap.pop()).collect();
            let inc_obj = incumbent.as_ref().map(|i| i.objective);
            let node_budget = self.limits.node_limit.map(|l| l.saturating_sub(nodes));
            let results: Vec<Result<PlungeResult, MilpError>> = if batch.len() == 1 {
                batch
                    .into_iter()
                    .map(|n| self.plunge(&root, n, inc_obj, node_budget))
                    .collect()
            } else {
                let share = node_budget.map(|b| (b / batch.len() as u64).max(1));
                std::thread::scope(|scope| {
                    let handles: Vec<_> = batch
                        .into_iter()
                        .map(|n| {
                            let root = &root;
                            let this = &self;
                            scope.spawn(move || this.plunge(root, n, inc_obj, share))
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("branch-and-bound worker panicked"))
                        .collect()
                })
            };

            for res in results {
                let res = res?;
                if res.unbounded {
                    return Ok(self.finish(
                        MilpStatus::Unbounded,
                        None,
                        None,
                        nodes,
                        history,
                        trace,
                    ));
                }
                nodes += res.nodes;
                for (obj, vals) in res.candidates {
                    if incumbent.as_ref().is_none_or(|inc| obj > inc.objective) {
                        history.push(IncumbentUpdate {
                            node_count: nodes,
                            objective: obj,
                        });
                        incumbent = Some(Incumbent {
                            objective: obj,
                            values: vals,
                        });
                    }
                }
                if let Some(p) = res.pruned_bound {
                    pruned_bound = Some(pruned_bound.map_or(p, |q: f64| q.max(p)));
                }
                heap.extend(res.children);
                if self.limits.record_trace {
                    trace.extend(res.records);
                }
            }
        }

        let open_bound = heap
            .iter()
            .map(|n| n.bound)
            .fold(None, |acc: Option<f64>, b| {
                Some(acc.map_or(b, |a| a.max(b)))
            });
        let bound = [
            open_bound,
            pruned_bound,
            incumbent.as_ref().map(|i| i.objective),
        ]
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<f64>, b| {
            Some(acc.map_or(b, |a| a.max(b)))
        });
        let status = match (&incumbent, limit_hit) {
            (Some(_), false) => MilpStatus::Optimal,
            (None, false) => MilpStatus::Infeasible,
            (Some(inc), true) => {
                let gap =
                    (bound.unwrap_or(inc.objective) - inc.objective) / inc.objective.abs().max(1.0);
                if gap <= self.limits.gap_tolerance {
                    MilpStatus::Optimal
                } else {
                    MilpStatus::FeasibleLimitHit
                }
            }
            (None, true) => MilpStatus::NoSolutionLimitHit,
        };
        Ok(self.finish(status, incumbent, bound, nodes, history, trace))
    }

    fn finish(
        &self,
        status: MilpStatus,
        incumbent: Option<Incumbent>,
        bound: Option<f64>,
        nodes: u64,
        incumbent_history: Vec<IncumbentUpdate>,
        trace: Vec<NodeRecord>,
    ) -> MilpSolution {
        let (objective, values) = match incumbent {
            Some(inc) if status.has_solution() => (Some(inc.objective), Some(inc.values)),
            _ => (None, None),
        };
        let gap = match (objective, bound) {
            (Some(z), Some(b)) => Some(((b - z) / z.abs().max(1.0)).max(0.0)),
            _ => None,
        };
        log::debug!(
            "milp {}: status {} objective {:?} bound {:?} nodes {}",
            self.model.name,
            status.as_str(),
            objective,
            bound,
            nodes
        );
        MilpSolution {
            status,
            objective,
            values,
            best_bound: bound,
            gap,
            nodes,
            elapsed: self.started.elapsed(),
            incumbent_history,
            trace,
        }
    }

    /// Re-creates the relaxation of an open node from the root basis.
    fn restore(
        &self,
        root: &microlp::Solution,
        fixings: &[(usize, f64)],
    ) -> Result<NodeLp, MilpError> {
        let mut current = NodeLp::Optimal(root.clone());
        for (n, &(col, val)) in fixings.iter().enumerate() {
            current = match current {
                NodeLp::Optimal(sol) => self.fix(sol, col, val, &fixings[..=n])?,
                other => return Ok(other),
            };
        }
        Ok(current)
    }

    /// Warm re-optimization after fixing `col`; when the kernel fails numerically
    /// the node is solved cold with every fixing in `fixings` applied as bounds.
    fn fix(
        &self,
        sol: microlp::Solution,
        col: usize,
        val: f64,
        fixings: &[(usize, f64)],
    ) -> Result<NodeLp, MilpError> {
        match self.relax.fix(sol, col, val) {
            Err(MilpError::NumericalStall { message, .. }) => {
                log::debug!("warm re-solve failed ({message}); solving the node cold");
                let mut fixed = self.model.clone();
                for &(c, v) in fixings {
                    fixed.set_bounds(c, v, v)?;
                }
                Relaxation::new(&fixed).solve(self.remaining())
            }
            other => other,
        }
    }

    fn plunge(
        &self,
        root: &microlp::Solution,
        node: OpenNode,
        inc_obj: Option<f64>,
        node_budget: Option<u64>,
    ) -> Result<PlungeResult, MilpError> {
        let mut out = PlungeResult::default();
        let OpenNode {
            mut id,
            mut parent,
            mut depth,
            mut fixings,
            bound: inherited,
        } = node;
        if let Some(inc) = inc_obj {
            if inherited <= inc + self.prune_tol(inc) {
                if inherited > inc {
                    out.pruned_bound = Some(inherited);
                }
                return Ok(out);
            }
        }
        let mut lp = self.restore(root, &fixings)?;
        loop {
            out.nodes += 1;
            let sol = match lp {
                NodeLp::Optimal(sol) => sol,
                NodeLp::Infeasible => {
                    self.record(&mut out, id, parent, depth, None, None);
                    break;
                }
                NodeLp::Unbounded => {
                    out.unbounded = true;
                    break;
                }
                NodeLp::Interrupted => {
                    out.nodes -= 1;
                    out.children.push(OpenNode {
                        bound: inherited,
                        id,
                        parent,
                        depth,
                        fixings,
                    });
                    break;
                }
            };
            let raw_bound = sol.objective();
            let bound = self.effective(raw_bound);
            let values = self.relax.values(&sol);
            if let Some(inc) = inc_obj {
                if bound <= inc + self.prune_tol(inc) {
                    if bound > inc {
                        out.pruned_bound = Some(out.pruned_bound.map_or(bound, |p| p.max(bound)));
                    }
                    self.record(&mut out, id, parent, depth, Some(raw_bound), None);
                    break;
                }
            }
            match self.branching_column(&values) {
                None => {
                    let snapped = self.snap(&values);
                    let integral = if self.model.is_feasible(&snapped) {
                        let obj = self.model.objective_value(&snapped);
                        if inc_obj.is_none_or(|inc| obj > inc) {
                            out.candidates.push((obj, snapped));
                        }
                        Some(obj)
                    } else {
                        None
                    };
                    self.record(&mut out, id, parent, depth, Some(raw_bound), integral);
                    break;
                }
                Some((col, frac)) => {
                    self.record(&mut out, id, parent, depth, Some(raw_bound), None);
                    let (first, second) = if frac >= 0.5 { (1.0, 0.0) } else { (0.0, 1.0) };
                    let mut sibling = fixings.clone();
                    sibling.push((col, second));
                    out.children.push(OpenNode {
                        bound,
                        id: self.fresh_id(),
                        parent: Some(id),
                        depth: depth + 1,
                        fixings: sibling,
                    });
                    let out_of_nodes = node_budget.is_some_and(|b| out.nodes >= b);
                    if self.out_of_time() || out_of_nodes {
                        fixings.push((col, first));
                        out.children.push(OpenNode {
                            bound,
                            id: self.fresh_id(),
                            parent: Some(id),
                            depth: depth + 1,
                            fixings,
                        });
                        break;
                    }
                    fixings.push((col, first));
                    parent = Some(id);
                    id = self.fresh_id();
                    depth += 1;
                    lp = self.fix(sol, col, first, &fixings)?;
                }
            }
        }
        Ok(out)
    }

    fn record(
        &self,
        out: &mut PlungeResult,
        id: u64,
        parent: Option<u64>,
        depth: usize,
        bound: Option<f64>,
        integral_objective: Option<f64>,
    ) {
        if self.limits.record_trace {
            out.records.push(NodeRecord {
                id,
                parent,
                depth,
                bound,
                integral_objective,
            });
        }
    }

    /// Most fractional binary column, lowest index on ties.
    /// Most fractional binary among those of the highest priority.
    fn branching_column(&self, values: &[f64]) -> Option<(usize, f64)> {
        let cols = self.model.columns();
        let mut best: Option<(usize, f64, i32, f64)> = None;
        for &c in &self.binaries {
            let v = values[c];
            let frac = v - v.floor();
            if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
                continue;
            }
            let (prio, score) = (cols[c].priority, (frac - 0.5).abs());
            if best.is_none_or(|(_, _, p, s)| prio > p || (prio == p && score < s)) {
                best = Some((c, frac, prio, score));
            }
        }
        best.map(|(c, f, _, _)| (c, f))
    }

    /// Rounds binaries exactly and clamps every value into its bounds.
    fn snap(&self, values: &[f64]) -> Vec<f64> {
        self.model
            .columns()
            .iter()
            .zip(values)
            .map(|(col, &v)| {
                let v = if col.kind == VarKind::Binary {
                    v.round()
                } else {
                    v
                };
                v.clamp(col.lower, col.upper)
            })
            .collect()
    }

    /// Greedy rounding of the root relaxation followed by a short dive that fixes
    /// the least fractional binary at each step.
    fn round_heuristic(
        &self,
        root: &microlp::Solution,
    ) -> Result<Option<(f64, Vec<f64>)>, MilpError> {
        let values = self.relax.values(root);
        let rounded: Vec<f64> = self.snap(&values);
        if let Some(vals) = complete_with_binaries(self.model, &rounded)? {
            return Ok(Some((self.model.objective_value(&vals), vals)));
        }
        let mut lp = NodeLp::Optimal(root.clone());
        let max_steps = self.binaries.len().min(2000);
        for _ in 0..=max_steps {
            if self.out_of_time() {
                return Ok(None);
            }
            let sol = match lp {
                NodeLp::Optimal(sol) => sol,
                _ => return Ok(None),
            };
            let values = self.relax.values(&sol);
            let mut pick: Option<(usize, f64, f64)> = None;
            for &c in &self.binaries {
                let v = values[c];
                let frac = v - v.floor();
                if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
                    continue;
                }
                let dist = frac.min(1.0 - frac);
                if pick.is_none_or(|(_, _, d)| dist < d) {
                    pick = Some((c, v.round(), dist));
                }
            }
            match pick {
                None => {
                    let snapped = self.snap(&values);
                    if self.model.is_feasible(&snapped) {
                        return Ok(Some((self.model.objective_value(&snapped), snapped)));
                    }
                    return Ok(None);
                }
                Some((col, val, _)) => {
                    let backup = sol.clone();
                    lp = match self.relax.fix(sol, col, val) {
                        Ok(NodeLp::Optimal(s)) => NodeLp::Optimal(s),
                        Ok(_) => match self.relax.fix(backup, col, 1.0 - val) {
                            Ok(next) => next,
                            Err(_) => return Ok(None),
                        },
                        Err(_) => return Ok(None),
                    };
                }
            }
        }
        Ok(None)
    }
}

/// Fixes every binary column to the given (rounded) value and solves for the
/// continuous columns. Returns `None` when the assignment is infeasible.
pub fn complete_with_binaries(
    model: &MilpModel,
    assignment: &[f64],
) -> Result<Option<Vec<f64>>, MilpError> {
    let has_continuous = model
        .columns()
        .iter()
        .any(|c| c.kind == VarKind::Continuous);
    if !has_continuous {
        let vals: Vec<f64> = assignment.iter().map(|v| v.round()).collect();
        return Ok(model.is_feasible(&vals).then_some(vals));
    }
    let mut fixed = model.clone();
    for c in model.binary_columns() {
        let v = assignment[c].round();
        if v < model.columns()[c].lower - FEASIBILITY_TOL
            || v > model.columns()[c].upper + FEASIBILITY_TOL
        {
            return Ok(None);
        }
        fixed.set_bounds(c, v, v)?;
    }
    let relax = Relaxation::new(&fixed);
    match relax.solve(None)? {
        NodeLp::Optimal(sol) => {
            let vals = relax.values(&sol);
            let vals: Vec<f64> = model
                .columns()
                .iter()
                .zip(vals)
                .map(|(col, v)| {
                    let v = if col.kind == VarKind::Binary {
                        v.round()
                    } else {
                        v
                    };
                    v.clamp(col.lower, col.upper)
                })
                .collect();
            Ok(model.is_feasible(&vals).then_some(vals))
        }
        _ => Ok(None),
    }
}
