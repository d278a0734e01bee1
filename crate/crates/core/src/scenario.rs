//! Scenario configuration, random-instance generation, storm-track case studies
//! and cached construction of visibility and cost tensors.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::io::{content_hash, write_atomic};
use crate::maneuver::{
    build_cost_tensor, build_phase_slots, build_plane_phase_slots, read_cost_cache,
    write_cost_cache, CostTensor, SlotGrid, DEFAULT_MAX_REVOLUTIONS,
};
use crate::model::ProblemData;
use crate::orbital::{walker_delta, OrbitalElements, TimeGrid};
use crate::visibility::{
    build_tensors, read_tensor_cache, write_tensor_cache, GroundPoint, SensorSettings,
    VisibilityTensors,
};

/// Version of the scenario file schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the tensor cache directory.
pub const CACHE_ENV: &str = "REOSSP_CACHE_DIR";

/// Steps of a generated random instance (14 days at 100 s).
pub const RANDOM_STEPS: usize = 12_096;
pub const RANDOM_DT_S: f64 = 100.0;
pub const RANDOM_TARGETS: usize = 12;
pub const RANDOM_STATIONS: usize = 2;

/// The bundled storm track (29 six-hourly fixes).
pub const STORM_TRACK_CSV: &str = include_str!("../data/storm_track.csv");

const LAND_MASK: &str = include_str!("../data/land_mask_1deg.txt");

/// Circular orbit in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteConfig {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub arg_latitude_deg: f64,
}

impl SatelliteConfig {
    pub fn elements(&self) -> OrbitalElements {
        OrbitalElements::circular_deg(
            self.altitude_km,
            self.inclination_deg,
            self.raan_deg,
            self.arg_latitude_deg,
        )
    }

    fn from_elements(el: &OrbitalElements) -> Self {
        Self {
            altitude_km: el.altitude_km(),
            inclination_deg: el.inclination.to_degrees(),
            raan_deg: el.raan.to_degrees(),
            arg_latitude_deg: el.arg_latitude.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    /// `phases` equally spaced arguments of latitude in the initial plane.
    PhaseOnly,
    /// `2 * planes - 1` planes times `phases` phases.
    PlaneAndPhase,
}

/// Slot grid and transfer settings, identical for every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotConfig {
    pub kind: SlotKind,
    pub phases: usize,
    #[serde(default = "one")]
    pub planes: usize,
    /// Fraction of the budget spent by the outermost plane offset.
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_revolutions")]
    pub max_revolutions: usize,
    /// Transfer duration limit; defaults to one stage span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_duration_s: Option<f64>,
}

fn one() -> usize {
    1
}

fn default_scale() -> f64 {
    0.75
}

fn default_revolutions() -> usize {
    DEFAULT_MAX_REVOLUTIONS
}

impl SlotConfig {
    pub fn phase_only(phases: usize) -> Self {
        Self {
            kind: SlotKind::PhaseOnly,
            phases,
            planes: 1,
            scale: default_scale(),
            max_revolutions: DEFAULT_MAX_REVOLUTIONS,
            max_duration_s: None,
        }
    }

    pub fn plane_and_phase(phases: usize, planes: usize, scale: f64) -> Self {
        Self {
            kind: SlotKind::PlaneAndPhase,
            phases,
            planes,
            scale,
            ..Self::phase_only(phases)
        }
    }

    /// Slots per stage and satellite.
    pub fn count(&self) -> usize {
        match self.kind {
            SlotKind::PhaseOnly => self.phases,
            SlotKind::PlaneAndPhase => self.phases * (2 * self.planes - 1),
        }
    }
}

/// Scenario file contents (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: TimeGrid,
    #[serde(default)]
    pub sensor: SensorSettings,
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub slots: SlotConfig,
    pub satellites: Vec<SatelliteConfig>,
    pub targets: Vec<GroundPoint>,
    pub stations: Vec<GroundPoint>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "scenario schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.grid.validate()?;
        self.constants.validate()?;
        if self.satellites.is_empty() || self.targets.is_empty() || self.stations.is_empty() {
            return Err(Error::Config(
                "a scenario needs satellites, targets and stations".into(),
            ));
        }
        if self.grid.steps % self.targets.len() != 0 {
            return Err(Error::Config(format!(
                "{} steps do not split into {} target windows",
                self.grid.steps,
                self.targets.len()
            )));
        }
        if self.slots.phases == 0 || self.slots.planes == 0 {
            return Err(Error::Config("slot counts must be positive".into()));
        }
        if !(self.slots.scale > 0.0 && self.slots.scale <= 1.0) {
            return Err(Error::Config(format!(
                "slot scale {} outside (0, 1]",
                self.slots.scale
            )));
        }
        for sat in &self.satellites {
            sat.elements().validate()?;
        }
        for p in self.targets.iter().chain(&self.stations) {
            if !(-90.0..=90.0).contains(&p.lat_deg) || !(-180.0..=360.0).contains(&p.lon_deg) {
                return Err(Error::Config(format!(
                    "ground point {:?} out of range",
                    p.name
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_toml()?.as_bytes())
    }

    pub fn initial_orbits(&self) -> Vec<OrbitalElements> {
        self.satellites
            .iter()
            .map(SatelliteConfig::elements)
            .collect()
    }

    pub fn budgets(&self) -> Vec<f64> {
        vec![self.constants.budget_mps; self.satellites.len()]
    }

    pub fn slot_grid(&self) -> Result<SlotGrid> {
        let initial = self.initial_orbits();
        let per_sat = initial
            .iter()
            .map(|el| match self.slots.kind {
                SlotKind::PhaseOnly => build_phase_slots(el, self.slots.phases),
                SlotKind::PlaneAndPhase => build_plane_phase_slots(
                    el,
                    self.slots.phases,
                    self.slots.planes,
                    self.constants.budget_mps,
                    self.slots.scale,
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        SlotGrid::uniform(&initial, per_sat, self.grid.stages)
    }

    pub fn max_transfer_duration_s(&self) -> f64 {
        self.slots
            .max_duration_s
            .unwrap_or_else(|| self.grid.stage_seconds())
    }

    fn tensor_key(&self) -> Result<String> {
        let key = (
            "rvis-1",
            &self.grid,
            &self.sensor,
            &self.slots,
            &self.satellites,
            &self.targets,
            &self.stations,
            self.constants.budget_mps,
        );
        Ok(content_hash(&serde_json::to_vec(&key)?))
    }

    fn cost_key(&self) -> Result<String> {
        let key = (
            "rcst-1",
            &self.grid,
            &self.slots,
            &self.satellites,
            &self.constants.budget_mps,
        );
        Ok(content_hash(&serde_json::to_vec(&key)?))
    }
}

/// A scenario with lazily built, optionally cached tensors.
#[derive(Debug)]
pub struct Scenario {
    config: ScenarioConfig,
    cache_dir: Option<PathBuf>,
    tensors: OnceLock<VisibilityTensors>,
    costs: OnceLock<CostTensor>,
}

impl Scenario {
    /// Wraps a validated configuration. The cache directory comes from
    /// `REOSSP_CACHE_DIR` when set.
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            cache_dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
            tensors: OnceLock::new(),
            costs: OnceLock::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(ScenarioConfig::load(path)?)
    }

    pub fn with_cache_dir(mut self, dir: Option<PathBuf>) -> Self {
        self.cache_dir = dir;
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn tensors(&self) -> Result<&VisibilityTensors> {
        if let Some(t) = self.tensors.get() {
            return Ok(t);
        }
        let cfg = &self.config;
        let path = self.cache_path("vis", &cfg.tensor_key()?, "rvis");
        let built = cached(
            path.as_deref(),
            read_tensor_cache,
            write_tensor_cache,
            || {
                build_tensors(
                    &cfg.grid,
                    &cfg.slot_grid()?,
                    &cfg.targets,
                    &cfg.stations,
                    &cfg.sensor,
                )
            },
        )?;
        Ok(self.tensors.get_or_init(|| built))
    }

    pub fn costs(&self) -> Result<&CostTensor> {
        if let Some(c) = self.costs.get() {
            return Ok(c);
        }
        let cfg = &self.config;
        let path = self.cache_path("cost", &cfg.cost_key()?, "rcst");
        let built = cached(path.as_deref(), read_cost_cache, write_cost_cache, || {
            build_cost_tensor(
                &cfg.slot_grid()?,
                &cfg.budgets(),
                cfg.max_transfer_duration_s(),
                cfg.slots.max_revolutions,
            )
        })?;
        Ok(self.costs.get_or_init(|| built))
    }

    /// Model inputs. Constants are taken from the configuration at call time, so
    /// edited rates reach the model without rebuilding the tensors.
    pub fn problem_data(&self) -> Result<ProblemData> {
        ProblemData::new(
            self.config.constants.clone(),
            self.tensors()?.clone(),
            self.costs()?.clone(),
        )
    }

    fn cache_path(&self, prefix: &str, key: &str, ext: &str) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{prefix}-{}.{ext}", &key[..32])))
    }
}

/// Reads `path` when it holds a valid cache, otherwise builds and (best effort)
/// writes it atomically.
fn cached<T>(
    path: Option<&Path>,
    read: fn(&Path) -> Result<T>,
    write: fn(&Path, &T) -> Result<()>,
    build: impl FnOnce() -> Result<T>,
) -> Result<T> {
    if let Some(p) = path.filter(|p| p.exists()) {
        match read(p) {
            Ok(v) => {
                log::debug!("loaded cache {}", p.display());
                return Ok(v);
            }
            Err(e) => log::warn!("ignoring cache {}: {e}", p.display()),
        }
    }
    let value = build()?;
    if let Some(p) = path {
        let store = || -> Result<()> {
            let dir = p.parent().unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir)?;
            let tmp = tempfile::NamedTempFile::new_in(dir)?;
            write(tmp.path(), &value)?;
            tmp.persist(p).map_err(|e| Error::Io(e.error))?;
            Ok(())
        };
        if let Err(e) = store() {
            log::warn!("could not write cache {}: {e}", p.display());
        }
    }
    Ok(value)
}

/// Whether the 1 deg cell containing (`lat`, `lon`) is land. Rows run from
/// 90N southwards, columns from 180W eastwards, 360 bits per row in hex.
pub fn is_land(lat_deg: f64, lon_deg: f64) -> bool {
    let row = ((90.0 - lat_deg).floor() as i64).clamp(0, 179) as usize;
    let col = ((lon_deg + 180.0).floor() as i64).rem_euclid(360) as usize;
    let line = LAND_MASK.lines().nth(row).unwrap_or("");
    line.as_bytes()
        .get(col / 4)
        .and_then(|b| (*b as char).to_digit(16))
        .is_some_and(|nibble| nibble & (8 >> (col % 4)) != 0)
}

/// Random instance with phase-only slots. The ChaCha8 stream is consumed in a
/// fixed order: per satellite altitude, inclination, RAAN and argument of
/// latitude; then per station latitude and longitude, redrawn until on land;
/// then per target latitude and longitude.
pub fn generate_random(
    seed: u64,
    stages: usize,
    sats: usize,
    slots: usize,
) -> Result<ScenarioConfig> {
    if sats == 0 || slots == 0 {
        return Err(Error::Config(
            "satellite and slot counts must be positive".into(),
        ));
    }
    let grid = TimeGrid::new(epoch_2025(), RANDOM_DT_S, RANDOM_STEPS, stages)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let satellites = (0..sats)
        .map(|_| SatelliteConfig {
            altitude_km: rng.random_range(600.0..1200.0),
            inclination_deg: rng.random_range(40.0..80.0),
            raan_deg: rng.random_range(0.0..360.0),
            arg_latitude_deg: rng.random_range(0.0..360.0),
        })
        .collect();
    let draw = |rng: &mut ChaCha8Rng| {
        (
            rng.random_range(-80.0..=80.0),
            rng.random_range(-180.0..180.0),
        )
    };
    let stations = (0..RANDOM_STATIONS)
        .map(|g| loop {
            let (lat, lon) = draw(&mut rng);
            if is_land(lat, lon) {
                break GroundPoint::new(format!("station-{}", g + 1), lat, lon);
            }
        })
        .collect();
    let targets = (0..RANDOM_TARGETS)
        .map(|p| {
            let (lat, lon) = draw(&mut rng);
            GroundPoint::new(format!("target-{}", p + 1), lat, lon)
        })
        .collect();
    let cfg = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: format!("random-{seed}-s{stages}-k{sats}-j{slots}"),
        seed: Some(seed),
        grid,
        sensor: SensorSettings::default(),
        constants: PhysicalConstants::default(),
        slots: SlotConfig::phase_only(slots),
        satellites,
        targets,
        stations,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn epoch_2025() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0)
        .single()
        .expect("valid epoch")
}

/// One fix of a storm track.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrackFix {
    pub time_utc: DateTime<Utc>,
    pub lat_deg: f64,
    pub lon_deg: f64,
}

/// Parses a `time_utc,lat_deg,lon_deg` CSV whose fixes are strictly increasing
/// at a fixed interval.
pub fn parse_track(csv_text: &str) -> Result<Vec<TrackFix>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["time_utc", "lat_deg", "lon_deg"] {
        return Err(Error::Parse(
            "track header must be `time_utc,lat_deg,lon_deg`".into(),
        ));
    }
    let fixes = rdr
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Parse(format!("track row {}: {e}", i + 2))))
        .collect::<Result<Vec<TrackFix>>>()?;
    if fixes.is_empty() {
        return Err(Error::Parse("track has no fixes".into()));
    }
    if fixes.len() > 1 {
        let step = fixes[1].time_utc - fixes[0].time_utc;
        for (i, w) in fixes.windows(2).enumerate() {
            let d = w[1].time_utc - w[0].time_utc;
            if d <= chrono::TimeDelta::zero() || d != step {
                return Err(Error::Parse(format!(
                    "track rows {} and {} break the fixed interval",
                    i + 2,
                    i + 3
                )));
            }
        }
    }
    Ok(fixes)
}

/// Case-study settings around a storm track.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyOptions {
    pub stages: usize,
    pub dt_s: f64,
    /// Interval of a single-fix track, which has no spacing of its own.
    pub single_fix_interval_s: f64,
    pub phases: usize,
    pub planes: usize,
    pub scale: f64,
    pub stations: Vec<GroundPoint>,
    pub satellites: Vec<OrbitalElements>,
}

impl Default for CaseStudyOptions {
    fn default() -> Self {
        Self {
            stages: 8,
            dt_s: 100.0,
            single_fix_interval_s: 6.0 * 3600.0,
            phases: 15,
            planes: 5,
            scale: 0.75,
            stations: vec![
                GroundPoint::new("Svalbard", 78.23, 15.41),
                GroundPoint::new("Boecillo", 41.54, -4.70),
            ],
            satellites: walker_delta(98.18, 4, 4, 0, 709.0).expect("valid Walker pattern"),
        }
    }
}

/// Case-study scenario: one target per track fix, masked to chronological
/// windows, a horizon of one interval per fix starting at the first fix, and
/// plane-and-phase slots.
pub fn load_case_study(csv_text: &str, options: &CaseStudyOptions) -> Result<ScenarioConfig> {
    let fixes = parse_track(csv_text)?;
    let interval = if fixes.len() > 1 {
        (fixes[1].time_utc - fixes[0].time_utc).as_seconds_f64()
    } else {
        options.single_fix_interval_s
    };
    let horizon = interval * fixes.len() as f64;
    let steps_f = horizon / options.dt_s;
    if (steps_f - steps_f.round()).abs() > 1e-9 {
        return Err(Error::Parse(format!(
            "horizon {horizon} s is not a multiple of {} s",
            options.dt_s
        )));
    }
    let grid = TimeGrid::new(
        fixes[0].time_utc,
        options.dt_s,
        steps_f.round() as usize,
        options.stages,
    )?;
    let targets = fixes
        .iter()
        .enumerate()
        .map(|(p, f)| GroundPoint::new(format!("fix-{}", p + 1), f.lat_deg, f.lon_deg))
        .collect();
    let cfg = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: "storm-track".into(),
        seed: None,
        grid,
        sensor: SensorSettings::default(),
        constants: PhysicalConstants::default(),
        slots: SlotConfig::plane_and_phase(options.phases, options.planes, options.scale),
        satellites: options
            .satellites
            .iter()
            .map(SatelliteConfig::from_elements)
            .collect(),
        targets,
        stations: options.stations.clone(),
    };
    cfg.validate()?;
    Ok(cfg)
}
