//! Geometric access (target, station, Sun) and the bit-packed visibility tensors
//! consumed by the scheduling models.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maneuver::SlotGrid;
use crate::orbital::{
    dot, ground_point_positions, norm, propagate, sub, sun_positions, OrbitalElements,
    Perturbation, TimeGrid, Vec3, R_EARTH, R_SUN,
};

/// Slack on the cone boundary so that points exactly on it count as visible.
const ANGLE_EPS: f64 = 1e-9;

/// How a configured cone angle maps to the off-nadir half-angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeInterpretation {
    /// The angle is the full apex angle; the half-angle is half of it.
    #[default]
    FullApex,
    /// The angle already is the half-angle.
    HalfAngle,
}

impl ConeInterpretation {
    pub fn half_angle_rad(self, cone_deg: f64) -> f64 {
        match self {
            ConeInterpretation::FullApex => (cone_deg / 2.0).to_radians(),
            ConeInterpretation::HalfAngle => cone_deg.to_radians(),
        }
    }
}

/// A named point on the Earth's surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundPoint {
    #[serde(default)]
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GroundPoint {
    pub fn new(name: impl Into<String>, lat_deg: f64, lon_deg: f64) -> Self {
        Self {
            name: name.into(),
            lat_deg,
            lon_deg,
        }
    }
}

/// Sensor and geometry settings shared by all access computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSettings {
    pub target_cone_deg: f64,
    pub station_cone_deg: f64,
    pub cone_interpretation: ConeInterpretation,
    /// Minimum visible fraction of the solar disk for a step to count as sunlit.
    pub sun_threshold: f64,
    pub greenwich_angle_deg: f64,
    pub propagation: Perturbation,
    /// Restrict target `p` to the `p`-th of `P` equal time windows.
    pub target_masking: bool,
}

impl Default for SensorSettings {
    fn default() -> Self {
        Self {
            target_cone_deg: 45.0,
            station_cone_deg: 120.0,
            cone_interpretation: ConeInterpretation::FullApex,
            sun_threshold: 1.0,
            greenwich_angle_deg: 0.0,
            propagation: Perturbation::TwoBody,
            target_masking: true,
        }
    }
}

/// True when the segment between two points does not pass through the Earth.
pub fn line_of_sight(a: &Vec3, b: &Vec3) -> bool {
    let d = sub(b, a);
    let dd = dot(&d, &d);
    if dd == 0.0 {
        return true;
    }
    let s = (-dot(a, &d) / dd).clamp(0.0, 1.0);
    let closest = [a[0] + s * d[0], a[1] + s * d[1], a[2] + s * d[2]];
    norm(&closest) >= R_EARTH - 1e-6
}

/// Whether `object` lies inside the nadir-pointing cone of `observer` with an
/// unobstructed line of sight. The cone boundary is inclusive.
pub fn in_cone(observer: &Vec3, object: &Vec3, half_angle: f64) -> bool {
    let to_obj = sub(object, observer);
    let dist = norm(&to_obj);
    if dist == 0.0 {
        return true;
    }
    let nadir = [-observer[0], -observer[1], -observer[2]];
    let cos_off = (dot(&nadir, &to_obj) / (norm(observer) * dist)).clamp(-1.0, 1.0);
    cos_off.acos() <= half_angle + ANGLE_EPS && line_of_sight(observer, object)
}

/// Step-wise cone access between two position series of equal length.
pub fn cone_access(
    observer: &[Vec3],
    object: &[Vec3],
    cone_deg: f64,
    interpretation: ConeInterpretation,
) -> Result<Vec<bool>> {
    if observer.len() != object.len() {
        return Err(Error::Dimension(format!(
            "observer series has {} steps, object series {}",
            observer.len(),
            object.len()
        )));
    }
    if !(cone_deg > 0.0 && cone_deg <= 360.0) {
        return Err(Error::Config(format!("cone angle {cone_deg} deg")));
    }
    let half = interpretation.half_angle_rad(cone_deg);
    Ok(observer
        .iter()
        .zip(object)
        .map(|(o, p)| in_cone(o, p, half))
        .collect())
}

/// Visible fraction of the solar disk seen from `sat`, using the apparent radii of
/// the Sun and the Earth (umbra and penumbra cones).
pub fn sun_fraction(sat: &Vec3, sun: &Vec3) -> f64 {
    let to_sun = sub(sun, sat);
    let d_sun = norm(&to_sun);
    let r = norm(sat);
    let a = (R_SUN / d_sun).asin();
    let b = (R_EARTH / r).clamp(-1.0, 1.0).asin();
    let to_earth = [-sat[0], -sat[1], -sat[2]];
    let c = (dot(&to_earth, &to_sun) / (r * d_sun))
        .clamp(-1.0, 1.0)
        .acos();
    if c >= a + b {
        1.0
    } else if c <= b - a {
        0.0
    } else if c <= a - b {
        1.0 - (b * b) / (a * a)
    } else {
        let x = (c * c + a * a - b * b) / (2.0 * c);
        let y = (a * a - x * x).max(0.0).sqrt();
        let area = a * a * (x / a).clamp(-1.0, 1.0).acos()
            + b * b * ((c - x) / b).clamp(-1.0, 1.0).acos()
            - c * y;
        (1.0 - area / (std::f64::consts::PI * a * a)).clamp(0.0, 1.0)
    }
}

pub fn eclipse_series(sat: &[Vec3], sun: &[Vec3]) -> Result<Vec<f64>> {
    if sat.len() != sun.len() {
        return Err(Error::Dimension(
            "satellite and Sun series differ in length".into(),
        ));
    }
    Ok(sat
        .iter()
        .zip(sun)
        .map(|(r, s)| sun_fraction(r, s))
        .collect())
}

pub fn binarize_sun(series: &[f64], threshold: f64) -> Vec<bool> {
    series.iter().map(|&f| f >= threshold).collect()
}

/// Zero-based step range in which target `p` of `targets` may be observed.
pub fn target_window(p: usize, targets: usize, steps: usize) -> std::ops::Range<usize> {
    let w = steps / targets;
    p * w..(p + 1) * w
}

/// Dense bit matrix, row-major, one row per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            words: vec![0; (rows * cols).div_ceil(64)],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        let i = r * self.cols + c;
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let i = r * self.cols + c;
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Copies rows `start..start + len` into a new matrix.
    pub fn slice_rows(&self, start: usize, len: usize) -> Self {
        let mut out = Self::new(len, self.cols);
        for r in 0..len {
            for c in 0..self.cols {
                if self.get(start + r, c) {
                    out.set(r, c, true);
                }
            }
        }
        out
    }

    /// Keeps column `c` only inside `window`.
    pub fn mask_column(&mut self, c: usize, window: std::ops::Range<usize>) {
        for r in 0..self.rows {
            if !window.contains(&r) {
                self.set(r, c, false);
            }
        }
    }

    fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Target, station and Sun access of one orbit over a run of steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotVisibility {
    pub target: BitMatrix,
    pub station: BitMatrix,
    pub sun: BitMatrix,
}

impl SlotVisibility {
    pub fn empty(steps: usize, targets: usize, stations: usize) -> Self {
        Self {
            target: BitMatrix::new(steps, targets),
            station: BitMatrix::new(steps, stations),
            sun: BitMatrix::new(steps, 1),
        }
    }

    pub fn steps(&self) -> usize {
        self.sun.rows()
    }

    fn slice(&self, start: usize, len: usize) -> Self {
        Self {
            target: self.target.slice_rows(start, len),
            station: self.station.slice_rows(start, len),
            sun: self.sun.slice_rows(start, len),
        }
    }
}

/// Visibility tensors. Stage-resolved entries are indexed by one-based stage `s`,
/// satellite `k`, slot `j` and zero-based in-stage step `t`; the flat view covers
/// the whole horizon for each satellite's initial orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityTensors {
    pub num_sats: usize,
    pub num_targets: usize,
    pub num_stations: usize,
    pub num_stages: usize,
    pub stage_len: usize,
    stages: Vec<Vec<Vec<SlotVisibility>>>,
    flat: Vec<SlotVisibility>,
}

impl VisibilityTensors {
    /// Assembles tensors from explicit parts: `flat[k]` over the whole horizon and
    /// `stages[s - 1][k][j]` over one stage each.
    pub fn from_parts(
        flat: Vec<SlotVisibility>,
        stages: Vec<Vec<Vec<SlotVisibility>>>,
    ) -> Result<Self> {
        let num_sats = flat.len();
        let first = flat
            .first()
            .ok_or_else(|| Error::Dimension("no satellites".into()))?;
        let (num_targets, num_stations) = (first.target.cols(), first.station.cols());
        let steps = first.steps();
        let num_stages = stages.len();
        if num_stages == 0 || steps % num_stages != 0 {
            return Err(Error::Dimension(format!(
                "{steps} steps over {num_stages} stages"
            )));
        }
        let stage_len = steps / num_stages;
        let shape_ok = |v: &SlotVisibility, len: usize| {
            v.steps() == len
                && v.target.cols() == num_targets
                && v.station.cols() == num_stations
                && v.sun.cols() == 1
        };
        if !flat.iter().all(|v| shape_ok(v, steps)) {
            return Err(Error::Dimension("flat view shapes differ".into()));
        }
        for stage in &stages {
            if stage.len() != num_sats || stage.iter().flatten().any(|v| !shape_ok(v, stage_len)) {
                return Err(Error::Dimension("stage tensor shapes differ".into()));
            }
            if stage.iter().any(|slots| slots.is_empty()) {
                return Err(Error::Dimension("a stage has no slots".into()));
            }
        }
        Ok(Self {
            num_sats,
            num_targets,
            num_stations,
            num_stages,
            stage_len,
            stages,
            flat,
        })
    }

    pub fn steps(&self) -> usize {
        self.num_stages * self.stage_len
    }

    pub fn num_slots(&self, s: usize, k: usize) -> usize {
        self.stages[s - 1][k].len()
    }

    pub fn slot(&self, s: usize, k: usize, j: usize) -> &SlotVisibility {
        &self.stages[s - 1][k][j]
    }

    pub fn flat(&self, k: usize) -> &SlotVisibility {
        &self.flat[k]
    }

    #[inline]
    pub fn v(&self, s: usize, k: usize, j: usize, t: usize, p: usize) -> bool {
        self.stages[s - 1][k][j].target.get(t, p)
    }

    #[inline]
    pub fn w(&self, s: usize, k: usize, j: usize, t: usize, g: usize) -> bool {
        self.stages[s - 1][k][j].station.get(t, g)
    }

    #[inline]
    pub fn h(&self, s: usize, k: usize, j: usize, t: usize) -> bool {
        self.stages[s - 1][k][j].sun.get(t, 0)
    }
}

/// Computes the access series of one orbit over the whole grid.
pub fn orbit_visibility(
    elements: &OrbitalElements,
    grid: &TimeGrid,
    targets: &[Vec<Vec3>],
    stations: &[Vec<Vec3>],
    sun: &[Vec3],
    settings: &SensorSettings,
) -> Result<SlotVisibility> {
    let eph = propagate(elements, grid, settings.propagation)?;
    let steps = grid.steps;
    let mut vis = SlotVisibility::empty(steps, targets.len(), stations.len());
    let t_half = settings
        .cone_interpretation
        .half_angle_rad(settings.target_cone_deg);
    let g_half = settings
        .cone_interpretation
        .half_angle_rad(settings.station_cone_deg);
    for (t, r) in eph.positions.iter().enumerate() {
        for (p, series) in targets.iter().enumerate() {
            if in_cone(r, &series[t], t_half) {
                vis.target.set(t, p, true);
            }
        }
        for (g, series) in stations.iter().enumerate() {
            if in_cone(r, &series[t], g_half) {
                vis.station.set(t, g, true);
            }
        }
        if sun_fraction(r, &sun[t]) >= settings.sun_threshold {
            vis.sun.set(t, 0, true);
        }
    }
    if settings.target_masking && !targets.is_empty() {
        for p in 0..targets.len() {
            vis.target
                .mask_column(p, target_window(p, targets.len(), steps));
        }
    }
    Ok(vis)
}

/// Builds stage-resolved and flat tensors for every slot of `slots`. Identical
/// orbits are computed once; distinct orbits are processed in parallel.
pub fn build_tensors(
    grid: &TimeGrid,
    slots: &SlotGrid,
    targets: &[GroundPoint],
    stations: &[GroundPoint],
    settings: &SensorSettings,
) -> Result<VisibilityTensors> {
    grid.validate()?;
    if slots.num_stages() != grid.stages {
        return Err(Error::Dimension(format!(
            "slot grid has {} stages, time grid {}",
            slots.num_stages(),
            grid.stages
        )));
    }
    if settings.target_masking && !targets.is_empty() && grid.steps % targets.len() != 0 {
        return Err(Error::Config(format!(
            "{} steps do not split into {} target windows",
            grid.steps,
            targets.len()
        )));
    }
    let gw = settings.greenwich_angle_deg.to_radians();
    let target_pos: Vec<Vec<Vec3>> = targets
        .iter()
        .map(|p| ground_point_positions(p.lat_deg, p.lon_deg, grid, gw))
        .collect::<Result<_>>()?;
    let station_pos: Vec<Vec<Vec3>> = stations
        .iter()
        .map(|p| ground_point_positions(p.lat_deg, p.lon_deg, grid, gw))
        .collect::<Result<_>>()?;
    let sun = sun_positions(grid);

    let mut unique: Vec<OrbitalElements> = Vec::new();
    let mut key_of = std::collections::HashMap::new();
    let mut index = |el: &OrbitalElements| -> usize {
        let key = orbit_key(el);
        *key_of.entry(key).or_insert_with(|| {
            unique.push(*el);
            unique.len() - 1
        })
    };
    let k_count = slots.num_sats();
    let flat_idx: Vec<usize> = (0..k_count).map(|k| index(&slots.slots(0, k)[0])).collect();
    let stage_idx: Vec<Vec<Vec<usize>>> = (1..=grid.stages)
        .map(|s| {
            (0..k_count)
                .map(|k| slots.slots(s, k).iter().map(&mut index).collect())
                .collect()
        })
        .collect();

    let full: Vec<SlotVisibility> = unique
        .par_iter()
        .map(|el| orbit_visibility(el, grid, &target_pos, &station_pos, &sun, settings))
        .collect::<Result<_>>()?;

    let len = grid.stage_len();
    let flat = flat_idx.iter().map(|&i| full[i].clone()).collect();
    let stages = stage_idx
        .iter()
        .enumerate()
        .map(|(si, per_sat)| {
            per_sat
                .iter()
                .map(|idxs| idxs.iter().map(|&i| full[i].slice(si * len, len)).collect())
                .collect()
        })
        .collect();
    VisibilityTensors::from_parts(flat, stages)
}

fn orbit_key(el: &OrbitalElements) -> [u64; 5] {
    [
        el.semi_major_axis_km.to_bits(),
        el.eccentricity.to_bits(),
        el.inclination.to_bits(),
        el.raan.to_bits(),
        el.arg_latitude.to_bits(),
    ]
}

// Cache file layout (little-endian):
//   magic "RVIS", format version u32,
//   num_sats, num_targets, num_stations, num_stages, stage_len (u32 each),
//   slot counts per (stage, satellite) as u32, stage-major,
//   then for every flat view (satellite order) followed by every stage slot
//   (stage, satellite, slot order): target, station and Sun bit words as u64.
const TENSOR_MAGIC: &[u8; 4] = b"RVIS";
const TENSOR_VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Cache(format!("value {v} too large")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Cache(e.to_string()))?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn put_bits(w: &mut impl Write, m: &BitMatrix) -> Result<()> {
    for word in m.words() {
        w.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}

fn get_bits(r: &mut impl Read, rows: usize, cols: usize) -> Result<BitMatrix> {
    let mut m = BitMatrix::new(rows, cols);
    for word in m.words.iter_mut() {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)
            .map_err(|e| Error::Cache(e.to_string()))?;
        *word = u64::from_le_bytes(b);
    }
    Ok(m)
}

pub fn write_tensor_cache(path: &Path, t: &VisibilityTensors) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&TENSOR_VERSION.to_le_bytes())?;
    for v in [
        t.num_sats,
        t.num_targets,
        t.num_stations,
        t.num_stages,
        t.stage_len,
    ] {
        put_u32(&mut w, v)?;
    }
    for s in 1..=t.num_stages {
        for k in 0..t.num_sats {
            put_u32(&mut w, t.num_slots(s, k))?;
        }
    }
    let all = t.flat.iter().chain(t.stages.iter().flatten().flatten());
    for v in all {
        put_bits(&mut w, &v.target)?;
        put_bits(&mut w, &v.station)?;
        put_bits(&mut w, &v.sun)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor_cache(path: &Path) -> Result<VisibilityTensors> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Cache(e.to_string()))?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Cache("not a visibility tensor cache".into()));
    }
    let version = get_u32(&mut r)?;
    if version != TENSOR_VERSION as usize {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let (k, p, g, s, len) = (
        get_u32(&mut r)?,
        get_u32(&mut r)?,
        get_u32(&mut r)?,
        get_u32(&mut r)?,
        get_u32(&mut r)?,
    );
    let mut counts = vec![vec![0usize; k]; s];
    for row in counts.iter_mut() {
        for c in row.iter_mut() {
            *c = get_u32(&mut r)?;
        }
    }
    let mut read_vis = |steps: usize| -> Result<SlotVisibility> {
        Ok(SlotVisibility {
            target: get_bits(&mut r, steps, p)?,
            station: get_bits(&mut r, steps, g)?,
            sun: get_bits(&mut r, steps, 1)?,
        })
    };
    let flat = (0..k)
        .map(|_| read_vis(s * len))
        .collect::<Result<Vec<_>>>()?;
    let mut stages = Vec::with_capacity(s);
    for row in &counts {
        let mut per_sat = Vec::with_capacity(k);
        for &n in row {
            per_sat.push((0..n).map(|_| read_vis(len)).collect::<Result<Vec<_>>>()?);
        }
        stages.push(per_sat);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Cache("trailing bytes in tensor cache".into()));
    }
    VisibilityTensors::from_parts(flat, stages)
}
