//! MILP construction for the fixed-orbit, reconfigurable and rolling-horizon
//! scheduling problems, and conversion of solver vectors back into plans.

use std::collections::HashMap;

use reossp_milp::{MilpModel, Sense, VarKind, INTEGRALITY_TOL};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::maneuver::CostTensor;
use crate::schedule::{
    simulate_from, CarryState, Downlink, Formulation, Maneuver, Observation, SatelliteSchedule,
    Schedule,
};
use crate::visibility::VisibilityTensors;

/// Tolerance for comparing solver storage values with re-simulated ones.
pub const STORAGE_TOL: f64 = 1e-6;

const BUDGET_EPS: f64 = 1e-9;

/// Everything the model builders read: constants, visibility and costs.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub constants: PhysicalConstants,
    pub tensors: VisibilityTensors,
    pub costs: CostTensor,
}

impl ProblemData {
    pub fn new(
        constants: PhysicalConstants,
        tensors: VisibilityTensors,
        costs: CostTensor,
    ) -> Result<Self> {
        constants.validate()?;
        if costs.num_stages() != tensors.num_stages || costs.num_sats() != tensors.num_sats {
            return Err(Error::Dimension(format!(
                "costs cover {} stages x {} satellites, visibility {} x {}",
                costs.num_stages(),
                costs.num_sats(),
                tensors.num_stages,
                tensors.num_sats
            )));
        }
        for s in 1..=tensors.num_stages {
            for k in 0..tensors.num_sats {
                if costs.num_slots(s, k) != tensors.num_slots(s, k) {
                    return Err(Error::Dimension(format!(
                        "slot counts differ at stage {s}, satellite {}",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self {
            constants,
            tensors,
            costs,
        })
    }

    pub fn num_sats(&self) -> usize {
        self.tensors.num_sats
    }

    pub fn num_stages(&self) -> usize {
        self.tensors.num_stages
    }

    pub fn stage_len(&self) -> usize {
        self.tensors.stage_len
    }

    pub fn steps(&self) -> usize {
        self.tensors.steps()
    }

    pub fn initial_carry(&self) -> CarryState {
        CarryState::initial(&self.constants, &self.costs.budgets)
    }

    /// Empty schedule shell with the instance dimensions.
    pub fn schedule_shell(
        &self,
        formulation: Formulation,
        satellites: Vec<SatelliteSchedule>,
    ) -> Schedule {
        Schedule::new(
            formulation,
            self.num_stages(),
            self.stage_len(),
            self.tensors.num_targets,
            self.tensors.num_stations,
            satellites,
        )
    }
}

/// Decision coordinate of a model column. Stages are one-based (`s = 0` marks the
/// stage-free fixed-orbit problem, whose steps `t` are global); satellites, slots,
/// steps, targets and stations are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    X {
        s: usize,
        k: usize,
        i: usize,
        j: usize,
    },
    Y {
        s: usize,
        k: usize,
        t: usize,
        p: usize,
    },
    Q {
        s: usize,
        k: usize,
        t: usize,
        g: usize,
    },
    H {
        s: usize,
        k: usize,
        t: usize,
    },
    D {
        s: usize,
        k: usize,
        t: usize,
    },
    B {
        s: usize,
        k: usize,
        t: usize,
    },
}

impl Coord {
    /// Deterministic column name with one-based, zero-padded indices.
    pub fn name(&self) -> String {
        let stage = |s: usize| {
            if s == 0 {
                String::new()
            } else {
                format!("_s{s:02}")
            }
        };
        let step = |s: usize, t: usize| {
            if s == 0 {
                format!("t{:05}", t + 1)
            } else {
                format!("t{:04}", t + 1)
            }
        };
        match *self {
            Coord::X { s, k, i, j } => {
                format!("x{}_k{:02}_i{:03}_j{:03}", stage(s), k + 1, i + 1, j + 1)
            }
            Coord::Y { s, k, t, p } => {
                format!("y{}_k{:02}_{}_p{:02}", stage(s), k + 1, step(s, t), p + 1)
            }
            Coord::Q { s, k, t, g } => {
                format!("q{}_k{:02}_{}_g{:02}", stage(s), k + 1, step(s, t), g + 1)
            }
            Coord::H { s, k, t } => format!("h{}_k{:02}_{}", stage(s), k + 1, step(s, t)),
            Coord::D { s, k, t } => format!("d{}_k{:02}_{}", stage(s), k + 1, step(s, t)),
            Coord::B { s, k, t } => format!("b{}_k{:02}_{}", stage(s), k + 1, step(s, t)),
        }
    }
}

/// A built model with its coordinate map and the stage window it covers.
#[derive(Debug, Clone)]
pub struct FormulationModel {
    pub formulation: Formulation,
    pub model: MilpModel,
    pub first_stage: usize,
    pub last_stage: usize,
    pub carry: Option<CarryState>,
    coords: Vec<Coord>,
    index: HashMap<Coord, usize>,
}

impl FormulationModel {
    pub fn column(&self, c: &Coord) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn coord(&self, column: usize) -> Coord {
        self.coords[column]
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn num_window_stages(&self) -> usize {
        self.last_stage - self.first_stage + 1
    }
}

struct Builder {
    model: MilpModel,
    coords: Vec<Coord>,
    index: HashMap<Coord, usize>,
}

impl Builder {
    fn new(name: &str) -> Self {
        Self {
            model: MilpModel::new(name),
            coords: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn column(
        &mut self,
        c: Coord,
        kind: VarKind,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> Result<usize> {
        let idx = self
            .model
            .add_column(c.name(), kind, lower, upper, objective)?;
        if matches!(c, Coord::X { .. }) {
            // Once the transfers are fixed the rest decouples per slot path.
            self.model.set_priority(idx, 1);
        }
        self.coords.push(c);
        self.index.insert(c, idx);
        Ok(idx)
    }

    fn upper(&self, c: usize) -> f64 {
        self.model.columns()[c].upper
    }

    /// Adds `sum(terms) sense rhs`. Fixed columns are folded into the right-hand
    /// side; a row left with one free column becomes a bound on it, and a row
    /// with none is dropped when satisfied.
    fn emit(
        &mut self,
        name: impl FnOnce() -> String,
        terms: &[(usize, f64)],
        sense: Sense,
        rhs: f64,
    ) -> Result<()> {
        let mut rhs = rhs;
        let mut live = Vec::with_capacity(terms.len());
        for &(c, a) in terms {
            if a == 0.0 {
                continue;
            }
            let col = &self.model.columns()[c];
            if col.lower == col.upper {
                rhs -= a * col.lower;
            } else {
                live.push((c, a));
            }
        }
        const TOL: f64 = 1e-9;
        match live.len() {
            0 => {
                let ok = match sense {
                    Sense::Le => 0.0 <= rhs + TOL,
                    Sense::Ge => 0.0 >= rhs - TOL,
                    Sense::Eq => rhs.abs() <= TOL,
                };
                if !ok {
                    self.model.add_row(name(), [], sense, rhs)?;
                }
            }
            1 => {
                let (c, a) = live[0];
                let v = rhs / a;
                let eff = match (sense, a < 0.0) {
                    (Sense::Le, true) => Sense::Ge,
                    (Sense::Ge, true) => Sense::Le,
                    (s, _) => s,
                };
                let col = &self.model.columns()[c];
                let (mut lo, mut hi) = (col.lower, col.upper);
                if matches!(eff, Sense::Le | Sense::Eq) {
                    hi = hi.min(v);
                }
                if matches!(eff, Sense::Ge | Sense::Eq) {
                    lo = lo.max(v);
                }
                if col.kind == VarKind::Binary {
                    hi = (hi + TOL).floor();
                    lo = (lo - TOL).ceil();
                }
                if lo > hi + TOL {
                    self.model.add_row(name(), [(c, a)], sense, rhs)?;
                } else {
                    self.model.set_bounds(c, lo.min(hi), hi)?;
                }
            }
            _ => {
                self.model.add_row(name(), live, sense, rhs)?;
            }
        }
        Ok(())
    }

    fn finish(
        self,
        formulation: Formulation,
        first: usize,
        last: usize,
        carry: Option<CarryState>,
    ) -> FormulationModel {
        FormulationModel {
            formulation,
            model: self.model,
            first_stage: first,
            last_stage: last,
            carry,
            coords: self.coords,
            index: self.index,
        }
    }
}

/// Task columns of one satellite at one step.
struct StepCols {
    y: Vec<usize>,
    q: Vec<usize>,
    h: usize,
    d: usize,
    b: usize,
}

/// Adds the task and storage columns of one step. `s = 0` marks the fixed-orbit
/// problem. `visible` gives the (target, station, sun) upper bounds.
fn step_columns(
    bld: &mut Builder,
    c: &PhysicalConstants,
    s: usize,
    k: usize,
    t: usize,
    visible: (Vec<bool>, Vec<bool>, bool),
) -> Result<StepCols> {
    let (vt, vg, vh) = visible;
    let ub = |b: bool| if b { 1.0 } else { 0.0 };
    let y = vt
        .iter()
        .enumerate()
        .map(|(p, &v)| bld.column(Coord::Y { s, k, t, p }, VarKind::Binary, 0.0, ub(v), 1.0))
        .collect::<Result<Vec<_>>>()?;
    let q = vg
        .iter()
        .enumerate()
        .map(|(g, &v)| {
            bld.column(
                Coord::Q { s, k, t, g },
                VarKind::Binary,
                0.0,
                ub(v),
                c.weight,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let h = bld.column(Coord::H { s, k, t }, VarKind::Binary, 0.0, ub(vh), 0.0)?;
    let d = bld.column(
        Coord::D { s, k, t },
        VarKind::Continuous,
        c.data_min_mb(),
        c.data_max_mb(),
        0.0,
    )?;
    let b = bld.column(
        Coord::B { s, k, t },
        VarKind::Continuous,
        c.battery_min_kj,
        c.battery_max_kj,
        0.0,
    )?;
    Ok(StepCols { y, q, h, d, b })
}

/// Task-dependent terms of the storage rows at one step.
fn data_terms(c: &PhysicalConstants, cols: &StepCols) -> Vec<(usize, f64)> {
    cols.y
        .iter()
        .map(|&y| (y, c.data_obs_mb))
        .chain(cols.q.iter().map(|&q| (q, -c.data_comm_mb)))
        .collect()
}

fn battery_terms(c: &PhysicalConstants, cols: &StepCols) -> Vec<(usize, f64)> {
    cols.y
        .iter()
        .map(|&y| (y, -c.battery_obs_kj))
        .chain(cols.q.iter().map(|&q| (q, -c.battery_comm_kj)))
        .chain(std::iter::once((cols.h, c.battery_charge_kj)))
        .collect()
}

/// Rows that only involve one step: overlap, data cap and floor, battery cap.
/// The battery floor is added by the caller since it may carry manoeuvre terms.
fn step_rows(bld: &mut Builder, c: &PhysicalConstants, tag: &str, cols: &StepCols) -> Result<()> {
    let overlap: Vec<(usize, f64)> = cols
        .y
        .iter()
        .chain(&cols.q)
        .chain(std::iter::once(&cols.h))
        .filter(|&&v| bld.upper(v) > 0.0)
        .map(|&v| (v, 1.0))
        .collect();
    if overlap.len() >= 2 {
        bld.emit(|| format!("overlap{tag}"), &overlap, Sense::Le, 1.0)?;
    }
    let mut cap = vec![(cols.d, 1.0)];
    cap.extend(cols.y.iter().map(|&y| (y, c.data_obs_mb)));
    bld.emit(|| format!("dcap{tag}"), &cap, Sense::Le, c.data_max_mb())?;
    let mut floor = vec![(cols.d, 1.0)];
    floor.extend(cols.q.iter().map(|&q| (q, -c.data_comm_mb)));
    bld.emit(
        || format!("dfloor{tag}"),
        &floor,
        Sense::Ge,
        c.data_min_mb(),
    )?;
    bld.emit(
        || format!("bcap{tag}"),
        &[(cols.b, 1.0), (cols.h, c.battery_charge_kj)],
        Sense::Le,
        c.battery_max_kj,
    )?;
    Ok(())
}

/// Battery floor at one step, optionally charging manoeuvre energy for the arcs
/// `recon` into the next stage.
fn battery_floor(
    bld: &mut Builder,
    c: &PhysicalConstants,
    tag: &str,
    cols: &StepCols,
    recon: &[usize],
) -> Result<()> {
    let mut floor = vec![(cols.b, 1.0)];
    floor.extend(cols.y.iter().map(|&y| (y, -c.battery_obs_kj)));
    floor.extend(cols.q.iter().map(|&q| (q, -c.battery_comm_kj)));
    floor.extend(recon.iter().map(|&x| (x, -c.battery_recon_kj)));
    bld.emit(
        || format!("bfloor{tag}"),
        &floor,
        Sense::Ge,
        c.battery_min_kj + c.battery_time_kj,
    )
}

/// Storage transition `next = cur + task terms (- recon arcs) - housekeeping`.
fn transition_rows(
    bld: &mut Builder,
    c: &PhysicalConstants,
    tag: &str,
    cur: &StepCols,
    next: &StepCols,
    recon: &[usize],
) -> Result<()> {
    let mut data = vec![(next.d, 1.0), (cur.d, -1.0)];
    data.extend(data_terms(c, cur).into_iter().map(|(v, a)| (v, -a)));
    bld.emit(|| format!("dtrack{tag}"), &data, Sense::Eq, 0.0)?;
    let mut bat = vec![(next.b, 1.0), (cur.b, -1.0)];
    bat.extend(battery_terms(c, cur).into_iter().map(|(v, a)| (v, -a)));
    bat.extend(recon.iter().map(|&x| (x, c.battery_recon_kj)));
    bld.emit(
        || format!("btrack{tag}"),
        &bat,
        Sense::Eq,
        -c.battery_time_kj,
    )
}

/// Fixed-orbit problem over the whole horizon on each satellite's initial orbit.
pub fn build_eossp(data: &ProblemData) -> Result<FormulationModel> {
    let c = &data.constants;
    let vis = &data.tensors;
    let steps = data.steps();
    if steps == 0 {
        return Err(Error::Dimension("empty horizon".into()));
    }
    let mut bld = Builder::new("eossp");
    for k in 0..data.num_sats() {
        let flat = vis.flat(k);
        let mut prev: Option<StepCols> = None;
        for t in 0..steps {
            let visible = (
                (0..vis.num_targets)
                    .map(|p| flat.target.get(t, p))
                    .collect(),
                (0..vis.num_stations)
                    .map(|g| flat.station.get(t, g))
                    .collect(),
                flat.sun.get(t, 0),
            );
            let cols = step_columns(&mut bld, c, 0, k, t, visible)?;
            if t == 0 {
                bld.model
                    .set_bounds(cols.d, c.data_min_mb(), c.data_min_mb())?;
                bld.model
                    .set_bounds(cols.b, c.battery_max_kj, c.battery_max_kj)?;
            }
            let tag = format!("_k{:02}_t{:05}", k + 1, t + 1);
            step_rows(&mut bld, c, &tag, &cols)?;
            battery_floor(&mut bld, c, &tag, &cols, &[])?;
            if let Some(p) = prev {
                let ptag = format!("_k{:02}_t{:05}", k + 1, t);
                transition_rows(&mut bld, c, &ptag, &p, &cols, &[])?;
            }
            prev = Some(cols);
        }
    }
    Ok(bld.finish(Formulation::Eossp, 1, data.num_stages(), None))
}

/// Full reconfigurable problem: the window `1..=S` from the initial state.
pub fn build_reossp(data: &ProblemData) -> Result<FormulationModel> {
    build_window(
        data,
        1,
        data.num_stages(),
        &data.initial_carry(),
        Formulation::Reossp,
    )
}

/// Rolling-horizon subproblem with control stage `s` and `lookahead` further
/// stages, entered with `carry`.
pub fn build_rhp_subproblem(
    data: &ProblemData,
    s: usize,
    lookahead: usize,
    carry: &CarryState,
) -> Result<FormulationModel> {
    if s == 0 || s + lookahead > data.num_stages() {
        return Err(Error::Config(format!(
            "control stage {s} with lookahead {lookahead} exceeds {} stages",
            data.num_stages()
        )));
    }
    build_window(data, s, s + lookahead, carry, Formulation::Rhp)
}

fn check_carry(data: &ProblemData, first: usize, carry: &CarryState) -> Result<()> {
    let k = data.num_sats();
    if carry.stage != first
        || carry.budget.len() != k
        || carry.origin.len() != k
        || carry.data.len() != k
        || carry.battery.len() != k
    {
        return Err(Error::Dimension(format!(
            "carry state does not match stage {first} with {k} satellites"
        )));
    }
    let c = &data.constants;
    for kk in 0..k {
        if carry.origin[kk] >= data.costs.num_slots(first - 1, kk) {
            return Err(Error::Dimension(format!(
                "carry origin slot out of range for satellite {}",
                kk + 1
            )));
        }
        let d_ok = carry.data[kk] >= c.data_min_mb() - STORAGE_TOL
            && carry.data[kk] <= c.data_max_mb() + STORAGE_TOL;
        let b_ok = carry.battery[kk] >= c.battery_min_kj - STORAGE_TOL
            && carry.battery[kk] <= c.battery_max_kj + STORAGE_TOL;
        if !(d_ok && b_ok && carry.budget[kk] >= -BUDGET_EPS) {
            return Err(Error::InconsistentSolution(format!(
                "carry state out of range for satellite {}",
                kk + 1
            )));
        }
    }
    Ok(())
}

/// Staged model over stages `first..=last` entered with `carry`. Satellites start
/// the window in `carry.origin`, with `carry.budget` of Δv left, `carry.data` MB
/// stored and `carry.battery` kJ before the manoeuvre into `first`.
pub fn build_window(
    data: &ProblemData,
    first: usize,
    last: usize,
    carry: &CarryState,
    formulation: Formulation,
) -> Result<FormulationModel> {
    if first == 0 || last < first || last > data.num_stages() {
        return Err(Error::Config(format!(
            "invalid stage window {first}..={last}"
        )));
    }
    check_carry(data, first, carry)?;
    let c = &data.constants;
    let vis = &data.tensors;
    let costs = &data.costs;
    let len = data.stage_len();
    let name = match formulation {
        Formulation::Rhp => format!("rhp_s{first:02}_l{:02}", last - first),
        _ => "reossp".to_string(),
    };
    let mut bld = Builder::new(&name);

    for k in 0..data.num_sats() {
        let kt = format!("_k{:02}", k + 1);
        // Arcs per stage: (column, from, to).
        let mut arcs: Vec<Vec<(usize, usize, usize)>> = Vec::new();
        for s in first..=last {
            let origins: Vec<usize> = if s == first {
                vec![carry.origin[k]]
            } else {
                (0..costs.num_slots(s - 1, k)).collect()
            };
            let mut stage_arcs = Vec::new();
            for &i in &origins {
                for j in 0..costs.num_slots(s, k) {
                    let cost = costs.cost(s, k, i, j);
                    if !cost.is_finite() {
                        continue;
                    }
                    let ub = if cost <= carry.budget[k] + BUDGET_EPS {
                        1.0
                    } else {
                        0.0
                    };
                    let col = bld.column(Coord::X { s, k, i, j }, VarKind::Binary, 0.0, ub, 0.0)?;
                    stage_arcs.push((col, i, j));
                }
            }
            if s == first && stage_arcs.iter().all(|&(col, _, _)| bld.upper(col) == 0.0) {
                return Err(Error::Infeasible(format!(
                    "satellite {} has no affordable transfer into stage {s}",
                    k + 1
                )));
            }
            arcs.push(stage_arcs);
        }
        let stage_arcs = |s: usize| &arcs[s - first];
        let all_x = |s: usize| stage_arcs(s).iter().map(|a| a.0).collect::<Vec<_>>();

        // Flow out of the carried origin, continuity, budget.
        let flow: Vec<(usize, f64)> = stage_arcs(first).iter().map(|a| (a.0, 1.0)).collect();
        bld.emit(|| format!("flow_s{first:02}{kt}"), &flow, Sense::Eq, 1.0)?;
        for s in first..last {
            for i in 0..costs.num_slots(s, k) {
                let mut terms: Vec<(usize, f64)> = stage_arcs(s + 1)
                    .iter()
                    .filter(|a| a.1 == i)
                    .map(|a| (a.0, 1.0))
                    .collect();
                terms.extend(
                    stage_arcs(s)
                        .iter()
                        .filter(|a| a.2 == i)
                        .map(|a| (a.0, -1.0)),
                );
                if !terms.is_empty() {
                    bld.emit(
                        || format!("cont_s{s:02}{kt}_i{:03}", i + 1),
                        &terms,
                        Sense::Eq,
                        0.0,
                    )?;
                }
            }
        }
        let budget: Vec<(usize, f64)> = (first..=last)
            .flat_map(|s| {
                stage_arcs(s)
                    .iter()
                    .map(move |&(col, i, j)| (col, costs.cost(s, k, i, j)))
            })
            .collect();
        bld.emit(
            || format!("budget{kt}"),
            &budget,
            Sense::Le,
            carry.budget[k],
        )?;

        // Entry battery: the manoeuvre into `first` is paid from the carried level.
        let entry_x = all_x(first);
        let mut prev: Option<StepCols> = None;
        for s in first..=last {
            let arcs_s: Vec<(usize, usize)> = stage_arcs(s)
                .iter()
                .filter(|a| bld.upper(a.0) > 0.0)
                .map(|a| (a.0, a.2))
                .collect();
            let next_x = if s < last { all_x(s + 1) } else { Vec::new() };
            for t in 0..len {
                let reach = |f: &dyn Fn(usize) -> bool| arcs_s.iter().any(|&(_, j)| f(j));
                let visible = (
                    (0..vis.num_targets)
                        .map(|p| reach(&|j| vis.v(s, k, j, t, p)))
                        .collect(),
                    (0..vis.num_stations)
                        .map(|g| reach(&|j| vis.w(s, k, j, t, g)))
                        .collect(),
                    reach(&|j| vis.h(s, k, j, t)),
                );
                let cols = step_columns(&mut bld, c, s, k, t, visible)?;
                let tag = format!("_s{s:02}{kt}_t{:04}", t + 1);

                // Visibility coupling through the occupied slot.
                let couple =
                    |bld: &mut Builder, v: usize, kind: &str, vis_at: &dyn Fn(usize) -> bool| {
                        if bld.upper(v) == 0.0 {
                            return Ok(());
                        }
                        let mut terms = vec![(v, 1.0)];
                        terms.extend(
                            arcs_s
                                .iter()
                                .filter(|&&(_, j)| vis_at(j))
                                .map(|&(x, _)| (x, -1.0)),
                        );
                        bld.emit(|| format!("vis_{kind}{tag}"), &terms, Sense::Le, 0.0)
                    };
                for (p, &y) in cols.y.iter().enumerate() {
                    couple(&mut bld, y, &format!("y_p{:02}", p + 1), &|j| {
                        vis.v(s, k, j, t, p)
                    })?;
                }
                for (g, &q) in cols.q.iter().enumerate() {
                    couple(&mut bld, q, &format!("q_g{:02}", g + 1), &|j| {
                        vis.w(s, k, j, t, g)
                    })?;
                }
                couple(&mut bld, cols.h, "h", &|j| vis.h(s, k, j, t))?;

                step_rows(&mut bld, c, &tag, &cols)?;
                let stage_end = t + 1 == len;
                let recon: &[usize] = if stage_end { &next_x } else { &[] };
                battery_floor(&mut bld, c, &tag, &cols, recon)?;

                if s == first && t == 0 {
                    bld.model.set_bounds(cols.d, carry.data[k], carry.data[k])?;
                    let mut entry = vec![(cols.b, 1.0)];
                    entry.extend(entry_x.iter().map(|&x| (x, c.battery_recon_kj)));
                    bld.emit(
                        || format!("bentry_s{s:02}{kt}"),
                        &entry,
                        Sense::Eq,
                        carry.battery[k],
                    )?;
                    let check: Vec<(usize, f64)> =
                        entry_x.iter().map(|&x| (x, -c.battery_recon_kj)).collect();
                    bld.emit(
                        || format!("bcheck_s{s:02}{kt}"),
                        &check,
                        Sense::Ge,
                        c.battery_min_kj - carry.battery[k],
                    )?;
                }
                if let Some(p) = prev.take() {
                    let (ps, pt) = if t == 0 { (s - 1, len) } else { (s, t) };
                    let ptag = format!("_s{ps:02}{kt}_t{pt:04}");
                    let recon_in: Vec<usize> = if t == 0 { all_x(s) } else { Vec::new() };
                    transition_rows(&mut bld, c, &ptag, &p, &cols, &recon_in)?;
                }
                prev = Some(cols);
            }
        }
    }
    Ok(bld.finish(formulation, first, last, Some(carry.clone())))
}

/// Decisions of every satellite over the window of a model. Stage lists are
/// relative to `first`; storage series cover the window's steps.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    pub first: usize,
    pub last: usize,
    pub sats: Vec<SatelliteSchedule>,
}

fn decode(
    fm: &FormulationModel,
    data: &ProblemData,
    values: &[f64],
    strict: bool,
) -> Result<WindowPlan> {
    let model = &fm.model;
    if values.len() != model.num_columns() {
        return Err(Error::Dimension(format!(
            "{} values for {} columns",
            values.len(),
            model.num_columns()
        )));
    }
    let len = data.stage_len();
    let n_st = fm.num_window_stages();
    let mut sats = vec![SatelliteSchedule::empty(n_st); data.num_sats()];
    for s in sats.iter_mut() {
        s.data = vec![f64::NAN; n_st * len];
        s.battery = vec![f64::NAN; n_st * len];
    }
    let on = |col: usize| -> Result<bool> {
        let v = values[col];
        if strict && (v - v.round()).abs() > INTEGRALITY_TOL {
            return Err(Error::InconsistentSolution(format!(
                "{} = {v} is not integral",
                model.columns()[col].name
            )));
        }
        Ok(v > 0.5)
    };
    // Map a coordinate's (s, t) to (window stage index, local step).
    let locate = |s: usize, t: usize| -> (usize, usize) {
        if s == 0 {
            (t / len, t % len)
        } else {
            (s - fm.first_stage, t)
        }
    };
    for (col, coord) in fm.coords.iter().enumerate() {
        match *coord {
            Coord::X { s, k, i, j } => {
                if on(col)? {
                    sats[k].maneuvers.push(Maneuver {
                        stage: s,
                        from: i,
                        to: j,
                        cost_mps: data.costs.cost(s, k, i, j),
                    });
                }
            }
            Coord::Y { s, k, t, p } => {
                if on(col)? {
                    let (w, step) = locate(s, t);
                    sats[k].stages[w]
                        .observations
                        .push(Observation { step, target: p });
                }
            }
            Coord::Q { s, k, t, g } => {
                if on(col)? {
                    let (w, step) = locate(s, t);
                    sats[k].stages[w]
                        .downlinks
                        .push(Downlink { step, station: g });
                }
            }
            Coord::H { s, k, t } => {
                if on(col)? {
                    let (w, step) = locate(s, t);
                    sats[k].stages[w].charging.push(step);
                }
            }
            Coord::D { s, k, t } => {
                let (w, step) = locate(s, t);
                sats[k].data[w * len + step] = values[col];
            }
            Coord::B { s, k, t } => {
                let (w, step) = locate(s, t);
                sats[k].battery[w * len + step] = values[col];
            }
        }
    }
    for s in sats.iter_mut() {
        s.sort();
    }
    Ok(WindowPlan {
        first: fm.first_stage,
        last: fm.last_stage,
        sats,
    })
}

/// Storage series implied by the tasks of a plan, from the model's entry state.
fn resimulate(
    fm: &FormulationModel,
    data: &ProblemData,
    sat: &SatelliteSchedule,
    k: usize,
) -> (Vec<f64>, Vec<f64>) {
    let c = &data.constants;
    let (d0, b0) = match &fm.carry {
        Some(carry) => (carry.data[k], carry.battery[k]),
        None => (c.data_min_mb(), c.battery_max_kj),
    };
    simulate_from(
        c,
        data.stage_len(),
        fm.first_stage,
        d0,
        b0,
        &sat.maneuvers,
        &sat.stages,
    )
}

/// Recovers the window plan from a solver vector. Binaries must be integral
/// within tolerance, staged windows must hold exactly one transfer per stage and
/// satellite, and the solver's storage values must match a re-simulation of the
/// recovered tasks.
pub fn extract_plan(
    fm: &FormulationModel,
    data: &ProblemData,
    values: &[f64],
) -> Result<WindowPlan> {
    let mut plan = decode(fm, data, values, true)?;
    for (k, sat) in plan.sats.iter_mut().enumerate() {
        if fm.formulation.is_staged() {
            for s in fm.first_stage..=fm.last_stage {
                let n = sat.maneuvers.iter().filter(|m| m.stage == s).count();
                if n != 1 {
                    return Err(Error::InconsistentSolution(format!(
                        "satellite {} has {n} transfers into stage {s}",
                        k + 1
                    )));
                }
            }
        }
        let (d, b) = resimulate(fm, data, sat, k);
        let worst = d
            .iter()
            .zip(&sat.data)
            .chain(b.iter().zip(&sat.battery))
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max);
        if worst.is_nan() || worst > STORAGE_TOL {
            return Err(Error::InconsistentSolution(format!(
                "storage of satellite {} deviates from re-simulation (relative {worst:e})",
                k + 1
            )));
        }
        sat.data = d;
        sat.battery = b;
    }
    Ok(plan)
}

/// Full-horizon schedule from a solution of an EOSSP or full-window model.
pub fn extract_schedule(
    fm: &FormulationModel,
    data: &ProblemData,
    values: &[f64],
) -> Result<Schedule> {
    if fm.first_stage != 1 || fm.last_stage != data.num_stages() {
        return Err(Error::Config(
            "schedule extraction needs a full-horizon model".into(),
        ));
    }
    let plan = extract_plan(fm, data, values)?;
    let mut schedule = data.schedule_shell(fm.formulation, plan.sats);
    schedule.finalize(&data.constants);
    Ok(schedule)
}

/// Column vector of a model that realizes `sats` (window-relative stages).
/// Storage columns are filled by re-simulation from the model's entry state.
pub fn embed_plan(
    fm: &FormulationModel,
    data: &ProblemData,
    sats: &[SatelliteSchedule],
) -> Result<Vec<f64>> {
    let len = data.stage_len();
    if sats.len() != data.num_sats()
        || sats
            .iter()
            .any(|s| s.stages.len() != fm.num_window_stages())
    {
        return Err(Error::Dimension(
            "plan does not match the model window".into(),
        ));
    }
    let mut values = vec![0.0; fm.model.num_columns()];
    let mut set = |c: Coord, v: f64| -> Result<()> {
        let col = fm
            .column(&c)
            .ok_or_else(|| Error::InconsistentSolution(format!("no column {}", c.name())))?;
        values[col] = v;
        Ok(())
    };
    let staged = fm.formulation.is_staged();
    let coord_stage = |w: usize, step: usize| -> (usize, usize) {
        if staged {
            (fm.first_stage + w, step)
        } else {
            (0, w * len + step)
        }
    };
    for (k, sat) in sats.iter().enumerate() {
        if staged {
            for m in &sat.maneuvers {
                set(
                    Coord::X {
                        s: m.stage,
                        k,
                        i: m.from,
                        j: m.to,
                    },
                    1.0,
                )?;
            }
        }
        for (w, st) in sat.stages.iter().enumerate() {
            for o in &st.observations {
                let (s, t) = coord_stage(w, o.step);
                set(
                    Coord::Y {
                        s,
                        k,
                        t,
                        p: o.target,
                    },
                    1.0,
                )?;
            }
            for d in &st.downlinks {
                let (s, t) = coord_stage(w, d.step);
                set(
                    Coord::Q {
                        s,
                        k,
                        t,
                        g: d.station,
                    },
                    1.0,
                )?;
            }
            for &h in &st.charging {
                let (s, t) = coord_stage(w, h);
                set(Coord::H { s, k, t }, 1.0)?;
            }
        }
        let (d, b) = resimulate(fm, data, sat, k);
        for w in 0..sat.stages.len() {
            for step in 0..len {
                let (s, t) = coord_stage(w, step);
                set(Coord::D { s, k, t }, d[w * len + step])?;
                set(Coord::B { s, k, t }, b[w * len + step])?;
            }
        }
    }
    Ok(values)
}

/// Column vector realizing a full-horizon schedule.
pub fn embed_schedule(
    fm: &FormulationModel,
    data: &ProblemData,
    schedule: &Schedule,
) -> Result<Vec<f64>> {
    embed_plan(fm, data, &schedule.satellites)
}

/// Completes a binary assignment by forward-simulating storage; `None` when the
/// resulting point violates any row or bound of the model.
pub fn complete_by_simulation(
    fm: &FormulationModel,
    data: &ProblemData,
    assignment: &[f64],
) -> Option<Vec<f64>> {
    let plan = decode(fm, data, assignment, false).ok()?;
    let mut values = embed_plan(fm, data, &plan.sats).ok()?;
    for (v, col) in values.iter_mut().zip(fm.model.columns()) {
        if col.kind == VarKind::Continuous {
            continue;
        }
        *v = v.round();
    }
    fm.model.is_feasible(&values).then_some(values)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::maneuver::CostMatrix;
    use crate::visibility::SlotVisibility;

    /// Single-satellite, single-stage data from explicit target/station/sun rows.
    pub(crate) fn toy(v: &[u8], w: &[u8], h: &[u8], constants: PhysicalConstants) -> ProblemData {
        let steps = v.len();
        let mut sv = SlotVisibility::empty(steps, 1, 1);
        for t in 0..steps {
            sv.target.set(t, 0, v[t] == 1);
            sv.station.set(t, 0, w[t] == 1);
            sv.sun.set(t, 0, h[t] == 1);
        }
        let tensors =
            VisibilityTensors::from_parts(vec![sv.clone()], vec![vec![vec![sv]]]).unwrap();
        let costs = CostTensor::from_parts(
            vec![constants.budget_mps],
            vec![vec![CostMatrix::new(1, 1, vec![0.0]).unwrap()]],
        )
        .unwrap();
        ProblemData::new(constants, tensors, costs).unwrap()
    }

    /// One satellite, three stages of three steps, two slots per stage. Slot 2
    /// sees the target at steps 1-2 and the station at step 3; slot 1 sees the
    /// target at step 1 and the sun at step 2. Every move costs 10 m/s.
    pub(crate) fn staged_toy(constants: PhysicalConstants) -> ProblemData {
        let (stages, len) = (3, 3);
        let slot = |j: usize| {
            let mut sv = SlotVisibility::empty(len, 1, 1);
            sv.target.set(0, 0, true);
            if j == 0 {
                sv.sun.set(1, 0, true);
            } else {
                sv.target.set(1, 0, true);
                sv.station.set(2, 0, true);
            }
            sv
        };
        let mut flat = SlotVisibility::empty(len * stages, 1, 1);
        for g in 0..len * stages {
            let one = slot(0);
            flat.target.set(g, 0, one.target.get(g % len, 0));
            flat.sun.set(g, 0, one.sun.get(g % len, 0));
        }
        let per_stage = (0..stages).map(|_| vec![vec![slot(0), slot(1)]]).collect();
        let tensors = VisibilityTensors::from_parts(vec![flat], per_stage).unwrap();
        let mut mats = vec![vec![CostMatrix::new(1, 2, vec![0.0, 10.0]).unwrap()]];
        for _ in 1..stages {
            mats.push(vec![
                CostMatrix::new(2, 2, vec![0.0, 10.0, 10.0, 0.0]).unwrap()
            ]);
        }
        let costs = CostTensor::from_parts(vec![15.0], mats).unwrap();
        ProblemData::new(constants, tensors, costs).unwrap()
    }

    #[test]
    fn eossp_counts_and_names() {
        let data = toy(
            &[1, 0, 0],
            &[0, 0, 1],
            &[0, 1, 0],
            PhysicalConstants::default(),
        );
        let fm = build_eossp(&data).unwrap();
        assert_eq!(fm.model.num_binaries(), 3 * 3);
        assert_eq!(fm.model.num_columns(), 3 * 3 + 2 * 3);
        assert!(fm.model.column_index("y_k01_t00001_p01").is_some());
        assert!(fm.model.column_index("d_k01_t00003").is_some());
        for (i, c) in fm.coords().iter().enumerate() {
            assert_eq!(fm.column(c), Some(i));
        }
    }

    #[test]
    fn reossp_names_are_staged() {
        let data = toy(
            &[1, 0, 0],
            &[0, 0, 1],
            &[0, 1, 0],
            PhysicalConstants::default(),
        );
        let fm = build_reossp(&data).unwrap();
        assert!(fm.model.column_index("x_s01_k01_i001_j001").is_some());
        assert!(fm.model.column_index("y_s01_k01_t0001_p01").is_some());
    }

    #[test]
    fn single_free_column_rows_become_bounds() {
        let mut bld = Builder::new("t");
        let a = bld
            .column(
                Coord::H { s: 0, k: 0, t: 0 },
                VarKind::Binary,
                0.0,
                1.0,
                0.0,
            )
            .unwrap();
        let b = bld
            .column(
                Coord::D { s: 0, k: 0, t: 0 },
                VarKind::Continuous,
                0.0,
                10.0,
                0.0,
            )
            .unwrap();
        bld.model.set_bounds(b, 4.0, 4.0).unwrap();
        bld.emit(|| "r".into(), &[(a, 2.0), (b, 1.0)], Sense::Le, 5.0)
            .unwrap();
        assert_eq!(bld.model.num_rows(), 0);
        assert_eq!(bld.model.columns()[a].upper, 0.0);
        bld.emit(|| "bad".into(), &[(b, 1.0)], Sense::Ge, 5.0)
            .unwrap();
        assert_eq!(bld.model.num_rows(), 1);
    }

    #[test]
    fn extraction_round_trip_and_corruption() {
        let data = toy(
            &[1, 0, 0],
            &[0, 0, 1],
            &[0, 1, 0],
            PhysicalConstants::default(),
        );
        let fm = build_eossp(&data).unwrap();
        let mut sat = SatelliteSchedule::empty(1);
        sat.stages[0]
            .observations
            .push(Observation { step: 0, target: 0 });
        sat.stages[0].downlinks.push(Downlink {
            step: 2,
            station: 0,
        });
        let values = embed_plan(&fm, &data, &[sat.clone()]).unwrap();
        assert!(fm.model.is_feasible(&values));
        // A full battery cannot absorb a charge.
        sat.stages[0].charging.push(1);
        assert!(!fm
            .model
            .is_feasible(&embed_plan(&fm, &data, &[sat]).unwrap()));
        let sched = extract_schedule(&fm, &data, &values).unwrap();
        assert_eq!(sched.meta.objective, 3.0);
        assert_eq!(fm.model.objective_value(&values), 3.0);
        let again = embed_schedule(&fm, &data, &sched).unwrap();
        assert_eq!(fm.model.objective_value(&again), 3.0);

        let mut bad = values.clone();
        let d2 = fm.column(&Coord::D { s: 0, k: 0, t: 2 }).unwrap();
        bad[d2] += 1.0;
        assert!(matches!(
            extract_schedule(&fm, &data, &bad),
            Err(Error::InconsistentSolution(_))
        ));
        let mut frac = values;
        let y = fm
            .column(&Coord::Y {
                s: 0,
                k: 0,
                t: 0,
                p: 0,
            })
            .unwrap();
        frac[y] = 0.5;
        assert!(matches!(
            extract_schedule(&fm, &data, &frac),
            Err(Error::InconsistentSolution(_))
        ));
    }

    #[test]
    fn zero_visibility_gives_zero_objective_bounds() {
        let data = toy(&[0, 0], &[0, 0], &[0, 0], PhysicalConstants::default());
        let fm = build_eossp(&data).unwrap();
        assert!(fm
            .model
            .columns()
            .iter()
            .filter(|c| c.kind == VarKind::Binary)
            .all(|c| c.upper == 0.0));
    }

    #[test]
    fn completion_matches_embedding() {
        let data = toy(
            &[1, 0, 0],
            &[0, 0, 1],
            &[0, 1, 0],
            PhysicalConstants::default(),
        );
        let fm = build_reossp(&data).unwrap();
        let mut sat = SatelliteSchedule::empty(1);
        sat.maneuvers.push(Maneuver {
            stage: 1,
            from: 0,
            to: 0,
            cost_mps: 0.0,
        });
        sat.stages[0]
            .observations
            .push(Observation { step: 0, target: 0 });
        sat.stages[0].downlinks.push(Downlink {
            step: 2,
            station: 0,
        });
        let values = embed_plan(&fm, &data, &[sat]).unwrap();
        let completed = complete_by_simulation(&fm, &data, &values).unwrap();
        assert_eq!(completed, values);
    }
}
