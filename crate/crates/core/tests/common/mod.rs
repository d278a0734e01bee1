#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reossp::constants::PhysicalConstants;
use reossp::maneuver::{CostMatrix, CostTensor};
use reossp::model::{complete_by_simulation, FormulationModel, ProblemData};
use reossp::orbital::{propagate, wrap_pi, OMEGA_EARTH};
use reossp::scenario::{generate_random, ScenarioConfig};
use reossp::visibility::{target_window, GroundPoint, SlotVisibility, VisibilityTensors};
use reossp_milp::brute_force_with;

/// Shape of a synthetic instance.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub sats: usize,
    pub stages: usize,
    pub stage_len: usize,
    pub slots: usize,
    pub targets: usize,
    pub stations: usize,
    /// Probability of each target or station access bit.
    pub density: f64,
}

impl Shape {
    pub fn tiny() -> Self {
        Self {
            sats: 1,
            stages: 2,
            stage_len: 3,
            slots: 2,
            targets: 1,
            stations: 1,
            density: 0.35,
        }
    }
}

/// Constants with small storage limits so that data and energy rows bind.
pub fn tight_constants(rng: &mut ChaCha8Rng) -> PhysicalConstants {
    PhysicalConstants {
        data_max_gb: rng.random_range(2..=4) as f64 * 0.1,
        battery_max_kj: rng.random_range(20.0..80.0),
        battery_recon_kj: rng.random_range(0.0..3.0),
        budget_mps: 0.0,
        ..PhysicalConstants::default()
    }
}

/// Random visibility and transfer costs. Slot 0 of every stage repeats the
/// flat (initial-orbit) visibility and costs nothing to stay in.
pub fn random_instance(
    seed: u64,
    shape: Shape,
    constants: Option<PhysicalConstants>,
) -> ProblemData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constants = constants.unwrap_or_else(|| tight_constants(&mut rng));
    let Shape {
        sats,
        stages,
        stage_len: len,
        slots,
        targets,
        stations,
        density,
    } = shape;
    let random_slot = |rng: &mut ChaCha8Rng, steps: usize| {
        let mut sv = SlotVisibility::empty(steps, targets, stations);
        for t in 0..steps {
            for p in 0..targets {
                sv.target.set(t, p, rng.random_bool(density));
            }
            for g in 0..stations {
                sv.station.set(t, g, rng.random_bool(density));
            }
            sv.sun.set(t, 0, rng.random_bool(0.6));
        }
        sv
    };
    let flat: Vec<SlotVisibility> = (0..sats)
        .map(|_| random_slot(&mut rng, stages * len))
        .collect();
    let mut per_stage = Vec::with_capacity(stages);
    for s in 0..stages {
        let mut by_sat = Vec::with_capacity(sats);
        for f in &flat {
            let mut home = SlotVisibility::empty(len, targets, stations);
            for t in 0..len {
                for p in 0..targets {
                    home.target.set(t, p, f.target.get(s * len + t, p));
                }
                for g in 0..stations {
                    home.station.set(t, g, f.station.get(s * len + t, g));
                }
                home.sun.set(t, 0, f.sun.get(s * len + t, 0));
            }
            let mut row = vec![home];
            row.extend((1..slots).map(|_| random_slot(&mut rng, len)));
            by_sat.push(row);
        }
        per_stage.push(by_sat);
    }
    let tensors = VisibilityTensors::from_parts(flat, per_stage).unwrap();
    let mut mats = Vec::with_capacity(stages);
    for s in 0..stages {
        let from = if s == 0 { 1 } else { slots };
        mats.push(
            (0..sats)
                .map(|_| {
                    let values = (0..from * slots)
                        .map(|idx| {
                            let (i, j) = (idx / slots, idx % slots);
                            if i == j {
                                0.0
                            } else {
                                rng.random_range(1..=20) as f64
                            }
                        })
                        .collect();
                    CostMatrix::new(from, slots, values).unwrap()
                })
                .collect(),
        );
    }
    let budgets = (0..sats).map(|_| rng.random_range(0..=40) as f64).collect();
    let costs = CostTensor::from_parts(budgets, mats).unwrap();
    ProblemData::new(constants, tensors, costs).unwrap()
}

/// Small geometric scenario: `sats` seeded random orbits, `slots` phase slots,
/// `targets` targets and `stations` stations placed under the first
/// satellite's ground track so that accesses exist.
pub fn geometric_toy(
    seed: u64,
    stages: usize,
    steps: usize,
    sats: usize,
    slots: usize,
) -> ScenarioConfig {
    let mut cfg = generate_random(seed, stages, sats, slots).unwrap();
    cfg.name = format!("toy-{seed}-s{stages}");
    cfg.grid.steps = steps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let eph = propagate(
        &cfg.satellites[0].elements(),
        &cfg.grid,
        cfg.sensor.propagation,
    )
    .unwrap();
    let greenwich = cfg.sensor.greenwich_angle_deg.to_radians();
    let under = |t: usize, name: String| {
        let [x, y, z] = eph.positions[t];
        let lat = z.atan2(x.hypot(y)).to_degrees();
        let lon = wrap_pi(y.atan2(x) - greenwich - OMEGA_EARTH * cfg.grid.seconds(t)).to_degrees();
        GroundPoint::new(name, lat, lon)
    };
    let num_targets = 2;
    cfg.targets = (0..num_targets)
        .map(|p| {
            let w = target_window(p, num_targets, steps);
            under(rng.random_range(w), format!("target-{}", p + 1))
        })
        .collect();
    cfg.stations = vec![under(
        rng.random_range(steps / 3..steps),
        "station-1".into(),
    )];
    cfg.validate().unwrap();
    cfg
}

/// Exhaustive optimum over the free binaries, completing the storage columns
/// by forward simulation.
pub fn exhaustive_optimum(fm: &FormulationModel, data: &ProblemData) -> Option<f64> {
    brute_force_with(&fm.model, |x| complete_by_simulation(fm, data, x))
        .unwrap()
        .objective
}
