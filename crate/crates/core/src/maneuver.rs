//! Candidate orbital slots and impulsive transfer costs between them.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::{
    cross, dot, norm, wrap_2pi, wrap_pi, OrbitalElements, Vec3, MIN_ALTITUDE_KM, MU_EARTH, R_EARTH,
};

use std::f64::consts::TAU;

/// Default upper bound on phasing-orbit revolutions.
pub const DEFAULT_MAX_REVOLUTIONS: usize = 30;

/// Per-stage, per-satellite lists of candidate orbits. Stage 0 holds the single
/// initial orbit of each satellite; stages `1..=S` hold the slot options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotGrid {
    stages: Vec<Vec<Vec<OrbitalElements>>>,
}

impl SlotGrid {
    /// Builds a grid from the initial orbits and the slot lists of every stage
    /// (`per_stage[s - 1][k]`). Any origin orbit missing from the next stage is
    /// appended to it so that staying put is always possible.
    pub fn new(
        initial: &[OrbitalElements],
        per_stage: Vec<Vec<Vec<OrbitalElements>>>,
    ) -> Result<Self> {
        if initial.is_empty() || per_stage.is_empty() {
            return Err(Error::Config(
                "slot grid needs satellites and stages".into(),
            ));
        }
        let mut stages = vec![initial.iter().map(|e| vec![*e]).collect::<Vec<_>>()];
        for (si, stage) in per_stage.into_iter().enumerate() {
            if stage.len() != initial.len() {
                return Err(Error::Dimension(format!(
                    "stage {} lists {} satellites, expected {}",
                    si + 1,
                    stage.len(),
                    initial.len()
                )));
            }
            stages.push(stage);
        }
        for s in 1..stages.len() {
            let (done, rest) = stages.split_at_mut(s);
            for (prev, next) in done[s - 1].iter().zip(rest[0].iter_mut()) {
                let missing: Vec<OrbitalElements> = prev
                    .iter()
                    .filter(|o| !next.iter().any(|c| same_orbit(c, o)))
                    .copied()
                    .collect();
                next.extend(missing);
            }
        }
        for el in stages.iter().flatten().flatten() {
            el.validate()?;
        }
        Ok(Self { stages })
    }

    /// Same slot list for every stage.
    pub fn uniform(
        initial: &[OrbitalElements],
        per_sat: Vec<Vec<OrbitalElements>>,
        stages: usize,
    ) -> Result<Self> {
        Self::new(initial, vec![per_sat; stages])
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn num_sats(&self) -> usize {
        self.stages[0].len()
    }

    /// Slots of satellite `k` at stage `s` (stage 0 is the initial orbit).
    pub fn slots(&self, s: usize, k: usize) -> &[OrbitalElements] {
        &self.stages[s][k]
    }

    pub fn initial(&self, k: usize) -> &OrbitalElements {
        &self.stages[0][k][0]
    }
}

pub(crate) fn same_orbit(a: &OrbitalElements, b: &OrbitalElements) -> bool {
    a.semi_major_axis_km == b.semi_major_axis_km
        && a.eccentricity == b.eccentricity
        && a.inclination == b.inclination
        && a.raan == b.raan
        && a.arg_latitude == b.arg_latitude
}

/// `count` slots in the initial plane with equally spaced arguments of latitude,
/// starting at the initial phase.
pub fn build_phase_slots(initial: &OrbitalElements, count: usize) -> Result<Vec<OrbitalElements>> {
    if count == 0 {
        return Err(Error::Config("slot count must be positive".into()));
    }
    Ok((0..count)
        .map(|q| OrbitalElements {
            arg_latitude: wrap_2pi(initial.arg_latitude + TAU * q as f64 / count as f64),
            ..*initial
        })
        .collect())
}

/// Signed step multiples used for the plane offsets on one axis: +1, -1, +2, -2, ...
fn axis_offsets(count: usize) -> Vec<i32> {
    (1..=count as i32)
        .map(|a| if a % 2 == 1 { (a + 1) / 2 } else { -(a / 2) })
        .collect()
}

/// Plane-and-phase slots: `2m - 1` planes (the initial plane, `m - 1` inclination
/// offsets and `m - 1` RAAN offsets) times `f` phases each. The outermost offset on
/// each axis costs `scale * budget_mps` as a pure plane change. Slot `plane * f + q`
/// has phase index `q`; slot 0 is the initial orbit.
pub fn build_plane_phase_slots(
    initial: &OrbitalElements,
    phases: usize,
    planes: usize,
    budget_mps: f64,
    scale: f64,
) -> Result<Vec<OrbitalElements>> {
    if phases == 0 || planes == 0 {
        return Err(Error::Config(
            "phase and plane counts must be positive".into(),
        ));
    }
    if !(budget_mps >= 0.0 && scale > 0.0) {
        return Err(Error::Config(format!(
            "budget {budget_mps} m/s, scale {scale}"
        )));
    }
    let v = initial.speed() * 1000.0;
    let dv_max = scale * budget_mps;
    if dv_max >= 2.0 * v {
        return Err(Error::Config(format!(
            "plane-change budget {dv_max} m/s exceeds 2v"
        )));
    }
    let theta_max = 2.0 * (dv_max / (2.0 * v)).asin();
    let offsets = axis_offsets(planes - 1);
    let side = offsets
        .iter()
        .map(|o| o.unsigned_abs())
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let incl_step = theta_max / side;
    let raan_arg = (theta_max / 2.0).sin() / initial.inclination.sin();
    if planes > 1 && (raan_arg.is_nan() || raan_arg.abs() > 1.0) {
        return Err(Error::Config(
            "RAAN offsets undefined for this inclination".into(),
        ));
    }
    let raan_step = 2.0 * raan_arg.asin() / side;

    let mut plane_list = vec![*initial];
    for &o in &offsets {
        let inc = initial.inclination + o as f64 * incl_step;
        if !(0.0..=std::f64::consts::PI).contains(&inc) {
            return Err(Error::Config(format!(
                "inclination offset leaves [0, 180] deg: {}",
                inc.to_degrees()
            )));
        }
        plane_list.push(OrbitalElements {
            inclination: inc,
            ..*initial
        });
    }
    for &o in &offsets {
        plane_list.push(OrbitalElements {
            raan: wrap_2pi(initial.raan + o as f64 * raan_step),
            ..*initial
        });
    }
    let mut out = Vec::with_capacity(plane_list.len() * phases);
    for plane in &plane_list {
        out.extend(build_phase_slots(plane, phases)?);
    }
    Ok(out)
}

/// Two-impulse coplanar phasing cost (m/s) to advance the phase by `du` rad on a
/// circular orbit of radius `a_km`, within `max_duration_s` and at most `max_rev`
/// phasing revolutions. Both drift directions are tried; `INFINITY` when none fits.
pub fn phasing_cost(a_km: f64, du: f64, max_duration_s: f64, max_rev: usize) -> f64 {
    let delta = wrap_2pi(du);
    if delta < 1e-12 || TAU - delta < 1e-12 {
        return 0.0;
    }
    let n = (MU_EARTH / a_km.powi(3)).sqrt();
    let period = TAU / n;
    let v_circ = (MU_EARTH / a_km).sqrt();
    let mut best = f64::INFINITY;
    let rev_cap = if max_duration_s.is_finite() {
        max_rev.min((max_duration_s / period).floor() as usize + 2)
    } else {
        max_rev
    };
    for k in 1..=rev_cap {
        let kf = k as f64;
        // Lower orbit catches up by delta; higher orbit falls back by 2pi - delta.
        for p_ph in [
            period * (1.0 - delta / (TAU * kf)),
            period * (1.0 + (TAU - delta) / (TAU * kf)),
        ] {
            if p_ph <= 0.0 || kf * p_ph > max_duration_s * (1.0 + 1e-12) {
                continue;
            }
            let a_ph = (MU_EARTH * (p_ph / TAU).powi(2)).cbrt();
            let perigee = (2.0 * a_ph - a_km).min(a_km);
            if perigee < R_EARTH + MIN_ALTITUDE_KM {
                continue;
            }
            let v_burn = (MU_EARTH * (2.0 / a_km - 1.0 / a_ph)).sqrt();
            best = best.min(2.0 * (v_burn - v_circ).abs() * 1000.0);
        }
    }
    best
}

/// Which elements a transfer changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferKind {
    None,
    Phasing,
    Inclination,
    Raan,
    InclinationRaan,
    InclinationPhasing,
    RaanPhasing,
    InclinationRaanPhasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub dv_mps: f64,
    pub kind: TransferKind,
    pub plane_angle: f64,
    pub residual_phase: f64,
}

/// Argument of latitude of direction `dir` in the plane of `el`.
fn arg_latitude_of(el: &OrbitalElements, dir: &Vec3) -> f64 {
    let node = [el.raan.cos(), el.raan.sin(), 0.0];
    let h = el.normal();
    let y = cross(&h, &node);
    dot(dir, &y).atan2(dot(dir, &node))
}

/// Position direction of an orbit at the epoch.
fn epoch_direction(el: &OrbitalElements) -> Vec3 {
    let node = [el.raan.cos(), el.raan.sin(), 0.0];
    let y = cross(&el.normal(), &node);
    let (s, c) = el.arg_latitude.sin_cos();
    [
        c * node[0] + s * y[0],
        c * node[1] + s * y[1],
        c * node[2] + s * y[2],
    ]
}

/// Cost of moving from `from` to `to` (same radius). A plane change is one impulse
/// at the node line, after which a coplanar phasing manoeuvre closes the remaining
/// phase; the phasing window is the duration left after waiting up to half a
/// period for the node.
pub fn transfer_cost(
    from: &OrbitalElements,
    to: &OrbitalElements,
    max_duration_s: f64,
    max_rev: usize,
) -> Result<Transfer> {
    if (from.semi_major_axis_km - to.semi_major_axis_km).abs() > 1e-6 {
        return Err(Error::IncompatibleOrbits(format!(
            "radii {} km and {} km differ",
            from.semi_major_axis_km, to.semi_major_axis_km
        )));
    }
    if same_orbit(from, to) {
        return Ok(Transfer {
            dv_mps: 0.0,
            kind: TransferKind::None,
            plane_angle: 0.0,
            residual_phase: 0.0,
        });
    }
    let a = from.semi_major_axis_km;
    let (n1, n2) = (from.normal(), to.normal());
    let axis = cross(&n1, &n2);
    let sin_theta = norm(&axis);
    let theta = sin_theta.atan2(dot(&n1, &n2));
    let v = from.speed() * 1000.0;
    let (plane_dv, residual, window) = if sin_theta < 1e-12 {
        // Coplanar: measure the phase directly between the epoch positions.
        let (r1, r2) = (epoch_direction(from), epoch_direction(to));
        let du = dot(&cross(&r1, &r2), &n1).atan2(dot(&r1, &r2));
        (0.0, du, max_duration_s)
    } else {
        let node = [
            axis[0] / sin_theta,
            axis[1] / sin_theta,
            axis[2] / sin_theta,
        ];
        let shift = arg_latitude_of(to, &node) - arg_latitude_of(from, &node);
        let du = (to.arg_latitude - from.arg_latitude) - shift;
        let wait = std::f64::consts::PI / from.mean_motion();
        (2.0 * v * (theta / 2.0).sin(), du, max_duration_s - wait)
    };
    let residual = wrap_pi(residual);
    let phase_dv = if residual.abs() < 1e-9 {
        0.0
    } else if window <= 0.0 {
        f64::INFINITY
    } else {
        phasing_cost(a, residual, window, max_rev)
    };
    let di = (from.inclination - to.inclination).abs() > 1e-12;
    let draan = wrap_pi(to.raan - from.raan).abs() > 1e-12 && sin_theta >= 1e-12;
    let dphase = residual.abs() >= 1e-9;
    let kind = match (di, draan, dphase) {
        (false, false, false) => TransferKind::None,
        (false, false, true) => TransferKind::Phasing,
        (true, false, false) => TransferKind::Inclination,
        (false, true, false) => TransferKind::Raan,
        (true, true, false) => TransferKind::InclinationRaan,
        (true, false, true) => TransferKind::InclinationPhasing,
        (false, true, true) => TransferKind::RaanPhasing,
        (true, true, true) => TransferKind::InclinationRaanPhasing,
    };
    Ok(Transfer {
        dv_mps: plane_dv + phase_dv,
        kind,
        plane_angle: theta,
        residual_phase: residual,
    })
}

/// Dense transfer-cost matrix of one satellite between consecutive stages.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub from: usize,
    pub to: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(from: usize, to: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != from * to {
            return Err(Error::Dimension(format!(
                "{} costs for a {from}x{to} matrix",
                values.len()
            )));
        }
        Ok(Self { from, to, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.to + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Transfer costs `c[s][k][i][j]` (m/s) from slot `i` of stage `s - 1` to slot `j`
/// of stage `s`, with per-satellite budgets. `INFINITY` marks infeasible arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    pub budgets: Vec<f64>,
    stages: Vec<Vec<CostMatrix>>,
}

impl CostTensor {
    /// `stages[s - 1][k]` is the matrix into stage `s`.
    pub fn from_parts(budgets: Vec<f64>, stages: Vec<Vec<CostMatrix>>) -> Result<Self> {
        if stages.iter().any(|st| st.len() != budgets.len()) {
            return Err(Error::Dimension(
                "cost tensor satellite count mismatch".into(),
            ));
        }
        for (s, pair) in stages.windows(2).enumerate() {
            if pair[0]
                .iter()
                .zip(&pair[1])
                .any(|(prev, next)| next.from != prev.to)
            {
                return Err(Error::Dimension(format!(
                    "stage {} slot counts do not chain",
                    s + 2
                )));
            }
        }
        if stages
            .first()
            .is_some_and(|st| st.iter().any(|m| m.from != 1))
        {
            return Err(Error::Dimension(
                "stage 1 must leave from a single initial slot".into(),
            ));
        }
        Ok(Self { budgets, stages })
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn num_sats(&self) -> usize {
        self.budgets.len()
    }

    pub fn matrix(&self, s: usize, k: usize) -> &CostMatrix {
        &self.stages[s - 1][k]
    }

    #[inline]
    pub fn cost(&self, s: usize, k: usize, i: usize, j: usize) -> f64 {
        self.stages[s - 1][k].get(i, j)
    }

    /// Slot count of satellite `k` at stage `s` (stage 0 is the initial orbit).
    pub fn num_slots(&self, s: usize, k: usize) -> usize {
        if s == 0 {
            1
        } else {
            self.stages[s - 1][k].to
        }
    }
}

/// Evaluates every transfer between consecutive stages of `grid`.
pub fn build_cost_tensor(
    grid: &SlotGrid,
    budgets: &[f64],
    max_duration_s: f64,
    max_rev: usize,
) -> Result<CostTensor> {
    if budgets.len() != grid.num_sats() {
        return Err(Error::Dimension("one budget per satellite required".into()));
    }
    let mut stages = Vec::with_capacity(grid.num_stages());
    for s in 1..=grid.num_stages() {
        let per_sat = (0..grid.num_sats())
            .map(|k| {
                let from = grid.slots(s - 1, k);
                let to = grid.slots(s, k);
                let values: Vec<f64> = (0..from.len() * to.len())
                    .into_par_iter()
                    .map(|idx| {
                        let (i, j) = (idx / to.len(), idx % to.len());
                        transfer_cost(&from[i], &to[j], max_duration_s, max_rev).map(|t| t.dv_mps)
                    })
                    .collect::<Result<_>>()?;
                CostMatrix::new(from.len(), to.len(), values)
            })
            .collect::<Result<Vec<_>>>()?;
        stages.push(per_sat);
    }
    CostTensor::from_parts(budgets.to_vec(), stages)
}

// Cache file layout (little-endian): magic "RCST", version u32, num_stages u32,
// num_sats u32, budgets f64 x K, then for each (stage, satellite): from u32, to u32,
// and from * to f64 costs row-major. Infinite costs are stored as IEEE +inf.
const COST_MAGIC: &[u8; 4] = b"RCST";
const COST_VERSION: u32 = 1;

pub fn write_cost_cache(path: &Path, c: &CostTensor) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(COST_MAGIC)?;
    w.write_all(&COST_VERSION.to_le_bytes())?;
    w.write_all(&(c.num_stages() as u32).to_le_bytes())?;
    w.write_all(&(c.num_sats() as u32).to_le_bytes())?;
    for b in &c.budgets {
        w.write_all(&b.to_le_bytes())?;
    }
    for stage in &c.stages {
        for m in stage {
            w.write_all(&(m.from as u32).to_le_bytes())?;
            w.write_all(&(m.to as u32).to_le_bytes())?;
            for v in &m.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_cost_cache(path: &Path) -> Result<CostTensor> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let bad = |e: std::io::Error| Error::Cache(e.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(bad)?;
    if &magic != COST_MAGIC {
        return Err(Error::Cache("not a cost tensor cache".into()));
    }
    let mut u = [0u8; 4];
    let mut f = [0u8; 8];
    let mut read_u32 = |r: &mut std::io::BufReader<std::fs::File>| -> Result<usize> {
        r.read_exact(&mut u).map_err(bad)?;
        Ok(u32::from_le_bytes(u) as usize)
    };
    let version = read_u32(&mut r)?;
    if version != COST_VERSION as usize {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let s_count = read_u32(&mut r)?;
    let k_count = read_u32(&mut r)?;
    let mut read_f64 = |r: &mut std::io::BufReader<std::fs::File>| -> Result<f64> {
        r.read_exact(&mut f).map_err(bad)?;
        Ok(f64::from_le_bytes(f))
    };
    let budgets = (0..k_count)
        .map(|_| read_f64(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let mut stages = Vec::with_capacity(s_count);
    for _ in 0..s_count {
        let mut per_sat = Vec::with_capacity(k_count);
        for _ in 0..k_count {
            let from = read_u32(&mut r)?;
            let to = read_u32(&mut r)?;
            let values = (0..from * to)
                .map(|_| read_f64(&mut r))
                .collect::<Result<Vec<_>>>()?;
            per_sat.push(CostMatrix::new(from, to, values)?);
        }
        stages.push(per_sat);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Cache("trailing bytes in cost cache".into()));
    }
    CostTensor::from_parts(budgets, stages)
}
