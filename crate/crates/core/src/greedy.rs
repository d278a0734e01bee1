//! Constructive heuristic: cheapest transfer per stage, then a per-step task
//! choice that keeps the remainder of the window energy-feasible.

use crate::error::{Error, Result};
use crate::model::{ProblemData, WindowPlan};
use crate::schedule::{
    simulate_from, CarryState, Downlink, Formulation, Maneuver, Observation, SatelliteSchedule,
    Schedule,
};

/// Step-level view of one satellite over a window.
struct Track {
    target: Vec<Option<usize>>,
    station: Vec<Option<usize>>,
    sun: Vec<bool>,
    /// Reconfiguration energy charged after each step (transfer into the next stage).
    recon_after: Vec<f64>,
}

/// Greedy plan over stages `first..=last` from `carry`. The fixed-orbit problem
/// uses the flat visibility and ignores transfers.
pub fn greedy_plan(
    data: &ProblemData,
    formulation: Formulation,
    first: usize,
    last: usize,
    carry: &CarryState,
) -> Result<WindowPlan> {
    let num_s = data.num_stages();
    if first == 0 || first > last || last > num_s {
        return Err(Error::Config(format!(
            "window {first}..={last} outside 1..={num_s}"
        )));
    }
    if !formulation.is_staged() && (first, last) != (1, num_s) {
        return Err(Error::Config(
            "the fixed-orbit problem has no sub-windows".into(),
        ));
    }
    let sats = (0..data.num_sats())
        .map(|k| greedy_satellite(data, formulation, first, last, carry, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowPlan { first, last, sats })
}

/// Full-horizon greedy schedule.
pub fn greedy_schedule(data: &ProblemData, formulation: Formulation) -> Result<Schedule> {
    let plan = greedy_plan(
        data,
        formulation,
        1,
        data.num_stages(),
        &data.initial_carry(),
    )?;
    let mut schedule = data.schedule_shell(formulation, plan.sats);
    schedule.finalize(&data.constants);
    Ok(schedule)
}

fn greedy_satellite(
    data: &ProblemData,
    formulation: Formulation,
    first: usize,
    last: usize,
    carry: &CarryState,
    k: usize,
) -> Result<SatelliteSchedule> {
    let c = &data.constants;
    let vis = &data.tensors;
    let len = data.stage_len();
    let n_st = last - first + 1;
    let steps = n_st * len;
    let mut sat = SatelliteSchedule::empty(n_st);

    let mut track = Track {
        target: Vec::with_capacity(steps),
        station: Vec::with_capacity(steps),
        sun: Vec::with_capacity(steps),
        recon_after: vec![0.0; steps],
    };
    if formulation.is_staged() {
        let (mut slot, mut budget) = (carry.origin[k], carry.budget[k]);
        for s in first..=last {
            let m = data.costs.matrix(s, k);
            let j = (0..m.to)
                .filter(|&j| m.get(slot, j).is_finite() && m.get(slot, j) <= budget + 1e-9)
                .min_by(|&a, &b| m.get(slot, a).total_cmp(&m.get(slot, b)).then(a.cmp(&b)))
                .ok_or_else(|| {
                    Error::Infeasible(format!(
                        "satellite {} has no affordable transfer into stage {s}",
                        k + 1
                    ))
                })?;
            let cost = m.get(slot, j);
            sat.maneuvers.push(Maneuver {
                stage: s,
                from: slot,
                to: j,
                cost_mps: cost,
            });
            budget -= cost;
            slot = j;
            for t in 0..len {
                track
                    .target
                    .push((0..vis.num_targets).find(|&p| vis.v(s, k, j, t, p)));
                track
                    .station
                    .push((0..vis.num_stations).find(|&g| vis.w(s, k, j, t, g)));
                track.sun.push(vis.h(s, k, j, t));
            }
            if s > first {
                track.recon_after[(s - first) * len - 1] = c.battery_recon_kj;
            }
        }
    } else {
        let flat = vis.flat(k);
        for g in 0..steps {
            track
                .target
                .push((0..vis.num_targets).find(|&p| flat.target.get(g, p)));
            track
                .station
                .push((0..vis.num_stations).find(|&q| flat.station.get(g, q)));
            track.sun.push(flat.sun.get(g, 0));
        }
    }

    let (mut d, mut b) = if formulation.is_staged() {
        (carry.data[k], carry.battery[k] - c.battery_recon_kj)
    } else {
        (c.data_min_mb(), c.battery_max_kj)
    };
    let infeasible = || {
        Error::Infeasible(format!(
            "satellite {} cannot stay within its energy limits",
            k + 1
        ))
    };
    if b < c.battery_min_kj - 1e-9 || !rest_viable(data, &track, 0, b) {
        return Err(infeasible());
    }
    for g in 0..steps {
        let (w, t) = (g / len, g % len);
        let drain = c.battery_time_kj + track.recon_after[g];
        let mut done = false;
        if let Some(q) = track.station[g] {
            let next = b - c.battery_comm_kj - drain;
            if d - c.data_comm_mb >= c.data_min_mb() - 1e-9
                && next >= c.battery_min_kj - 1e-9
                && rest_viable(data, &track, g + 1, next)
            {
                sat.stages[w].downlinks.push(Downlink {
                    step: t,
                    station: q,
                });
                d -= c.data_comm_mb;
                b = next;
                done = true;
            }
        }
        if !done {
            if let Some(p) = track.target[g] {
                let next = b - c.battery_obs_kj - drain;
                if d + c.data_obs_mb <= c.data_max_mb() + 1e-9
                    && next >= c.battery_min_kj - 1e-9
                    && rest_viable(data, &track, g + 1, next)
                {
                    sat.stages[w]
                        .observations
                        .push(Observation { step: t, target: p });
                    d += c.data_obs_mb;
                    b = next;
                    done = true;
                }
            }
        }
        if !done {
            let (next, charged) = rest_step(data, &track, g, b).ok_or_else(infeasible)?;
            if charged {
                sat.stages[w].charging.push(t);
            }
            b = next;
        }
    }
    let (d0, b0) = if formulation.is_staged() {
        (carry.data[k], carry.battery[k])
    } else {
        (c.data_min_mb(), c.battery_max_kj)
    };
    (sat.data, sat.battery) = simulate_from(c, len, first, d0, b0, &sat.maneuvers, &sat.stages);
    Ok(sat)
}

/// Battery after the rest action (charge when sunlit and the ceiling allows,
/// otherwise idle) at step `g` and whether it charged, or `None` when the energy
/// floor is violated.
fn rest_step(data: &ProblemData, track: &Track, g: usize, b: f64) -> Option<(f64, bool)> {
    let c = &data.constants;
    let drain = c.battery_time_kj + track.recon_after[g];
    if b - drain < c.battery_min_kj - 1e-9 {
        return None;
    }
    let charge = track.sun[g] && b + c.battery_charge_kj <= c.battery_max_kj + 1e-9;
    Some((
        b - drain + if charge { c.battery_charge_kj } else { 0.0 },
        charge,
    ))
}

/// Whether resting from step `g` with battery `b` keeps every later floor.
fn rest_viable(data: &ProblemData, track: &Track, g: usize, mut b: f64) -> bool {
    for step in g..track.sun.len() {
        match rest_step(data, track, step, b) {
            Some((next, _)) => b = next,
            None => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use crate::model::tests::{staged_toy, toy};
    use crate::model::{
        build_eossp, build_reossp, build_rhp_subproblem, embed_plan, embed_schedule,
    };
    use crate::validate::validate;

    #[test]
    fn greedy_schedules_validate_and_embed() {
        let data = staged_toy(PhysicalConstants::default());
        for (f, fm) in [
            (Formulation::Eossp, build_eossp(&data).unwrap()),
            (Formulation::Reossp, build_reossp(&data).unwrap()),
        ] {
            let sch = greedy_schedule(&data, f).unwrap();
            let rep = validate(&sch, &data);
            assert!(rep.is_valid(), "{:?}", rep.violations);
            let x = embed_schedule(&fm, &data, &sch).unwrap();
            assert!(fm.model.is_feasible(&x));
            assert!((fm.model.objective_value(&x) - sch.meta.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn stays_put_and_prefers_downlinks() {
        let data = toy(
            &[1, 1, 0, 0],
            &[0, 0, 1, 1],
            &[0, 0, 0, 0],
            PhysicalConstants::default(),
        );
        let sch = greedy_schedule(&data, Formulation::Reossp).unwrap();
        let sat = &sch.satellites[0];
        assert_eq!(sat.maneuvers[0].to, 0);
        assert_eq!(sat.count_observations(), 2);
        assert_eq!(sat.count_downlinks(), 2);
    }

    #[test]
    fn windows_start_from_the_carry() {
        let data = staged_toy(PhysicalConstants::default());
        let mut carry = data.initial_carry();
        carry.stage = 2;
        carry.origin = vec![1];
        carry.budget = vec![0.0];
        carry.data = vec![data.constants.data_obs_mb];
        let plan = greedy_plan(&data, Formulation::Rhp, 2, 3, &carry).unwrap();
        assert!(plan.sats[0]
            .maneuvers
            .iter()
            .all(|m| m.from == 1 && m.to == 1));
        assert_eq!(plan.sats[0].count_downlinks(), 2);
        let fm = build_rhp_subproblem(&data, 2, 1, &carry).unwrap();
        let x = embed_plan(&fm, &data, &plan.sats).unwrap();
        assert!(fm.model.is_feasible(&x));
    }

    #[test]
    fn reports_energy_infeasibility() {
        let constants = PhysicalConstants {
            battery_max_kj: 3.0,
            ..Default::default()
        };
        let data = toy(&[0, 0, 0], &[0, 0, 0], &[0, 0, 0], constants);
        assert!(matches!(
            greedy_schedule(&data, Formulation::Eossp),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn skips_tasks_that_would_strand_the_battery() {
        let constants = PhysicalConstants {
            battery_max_kj: 24.0,
            ..Default::default()
        };
        let data = toy(&[1, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 0, 0], constants);
        let sch = greedy_schedule(&data, Formulation::Eossp).unwrap();
        assert_eq!(sch.count_observations(), 0);
        assert!(validate(&sch, &data).is_valid());
    }
}
