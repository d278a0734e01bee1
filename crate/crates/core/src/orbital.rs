//! Time grid, circular-orbit propagation, ground points and a low-precision Sun
//! ephemeris, all in an Earth-centred inertial frame (km).

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Earth
pub const MU_EARTH: f64 = 398_600.441_8; // km^3/s^2
pub const R_EARTH: f64 = 6_378.14; // km
pub const J2: f64 = 1.082_626_68e-3;
pub const OMEGA_EARTH: f64 = 7.292_115_146_706_979e-5; // rad/s, sidereal

// Sun
pub const AU_KM: f64 = 149_597_870.7;
pub const R_SUN: f64 = 696_000.0; // km

/// Orbits below this altitude are rejected.
pub const MIN_ALTITUDE_KM: f64 = 100.0;

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Uniform schedule grid: `steps` instants spaced `dt_s` apart from `epoch`,
/// split into `stages` stages of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub epoch: DateTime<Utc>,
    pub dt_s: f64,
    pub steps: usize,
    pub stages: usize,
}

impl TimeGrid {
    pub fn new(epoch: DateTime<Utc>, dt_s: f64, steps: usize, stages: usize) -> Result<Self> {
        let grid = Self {
            epoch,
            dt_s,
            steps,
            stages,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(Error::Config(format!(
                "time step {} s must be positive",
                self.dt_s
            )));
        }
        if self.steps == 0 || self.stages == 0 {
            return Err(Error::Config("steps and stages must be positive".into()));
        }
        if self.steps % self.stages != 0 {
            return Err(Error::Config(format!(
                "{} steps do not split evenly into {} stages",
                self.steps, self.stages
            )));
        }
        Ok(())
    }

    /// Steps per stage.
    pub fn stage_len(&self) -> usize {
        self.steps / self.stages
    }

    /// Seconds after the epoch of zero-based step `t`.
    pub fn seconds(&self, t: usize) -> f64 {
        t as f64 * self.dt_s
    }

    /// Zero-based global step of zero-based step `t` inside one-based stage `s`.
    pub fn global(&self, s: usize, t: usize) -> usize {
        (s - 1) * self.stage_len() + t
    }

    /// One-based stage and zero-based in-stage step of zero-based global step `g`.
    pub fn split(&self, g: usize) -> (usize, usize) {
        (g / self.stage_len() + 1, g % self.stage_len())
    }

    /// Stage span in seconds.
    pub fn stage_seconds(&self) -> f64 {
        self.stage_len() as f64 * self.dt_s
    }

    /// Julian date (UT) of the epoch.
    pub fn epoch_julian_date(&self) -> f64 {
        let secs =
            self.epoch.timestamp() as f64 + f64::from(self.epoch.timestamp_subsec_nanos()) * 1e-9;
        secs / 86_400.0 + 2_440_587.5
    }
}

/// Circular orbit elements. Angles are radians; the argument of latitude is given at the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub semi_major_axis_km: f64,
    pub eccentricity: f64,
    pub inclination: f64,
    pub raan: f64,
    pub arg_latitude: f64,
}

impl OrbitalElements {
    pub fn circular_deg(
        altitude_km: f64,
        inclination_deg: f64,
        raan_deg: f64,
        arg_latitude_deg: f64,
    ) -> Self {
        Self {
            semi_major_axis_km: R_EARTH + altitude_km,
            eccentricity: 0.0,
            inclination: inclination_deg.to_radians(),
            raan: wrap_2pi(raan_deg.to_radians()),
            arg_latitude: wrap_2pi(arg_latitude_deg.to_radians()),
        }
    }

    pub fn altitude_km(&self) -> f64 {
        self.semi_major_axis_km - R_EARTH
    }

    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.semi_major_axis_km.powi(3)).sqrt()
    }

    pub fn period_s(&self) -> f64 {
        std::f64::consts::TAU / self.mean_motion()
    }

    /// Circular speed in km/s.
    pub fn speed(&self) -> f64 {
        (MU_EARTH / self.semi_major_axis_km).sqrt()
    }

    /// Unit normal of the orbit plane.
    pub fn normal(&self) -> Vec3 {
        let (si, ci) = self.inclination.sin_cos();
        let (so, co) = self.raan.sin_cos();
        [si * so, -si * co, ci]
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.semi_major_axis_km,
            self.eccentricity,
            self.inclination,
            self.raan,
            self.arg_latitude,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidOrbit("non-finite element".into()));
        }
        if self.eccentricity.abs() > 1e-12 {
            return Err(Error::InvalidOrbit(format!(
                "eccentricity {} (only circular orbits are modelled)",
                self.eccentricity
            )));
        }
        if self.altitude_km() < MIN_ALTITUDE_KM {
            return Err(Error::InvalidOrbit(format!(
                "altitude {:.3} km below {MIN_ALTITUDE_KM} km",
                self.altitude_km()
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.inclination) {
            return Err(Error::InvalidOrbit(format!(
                "inclination {} rad",
                self.inclination
            )));
        }
        Ok(())
    }

    /// Position at `t` seconds after the epoch for the given RAAN and argument of latitude.
    fn position_at(&self, raan: f64, u: f64) -> Vec3 {
        let a = self.semi_major_axis_km;
        let (su, cu) = u.sin_cos();
        let (so, co) = raan.sin_cos();
        let (si, ci) = self.inclination.sin_cos();
        [
            a * (cu * co - su * ci * so),
            a * (cu * so + su * ci * co),
            a * su * si,
        ]
    }

    /// Secular RAAN and argument-of-latitude rates (rad/s) under J2 for a circular orbit.
    pub fn j2_rates(&self) -> (f64, f64) {
        let n = self.mean_motion();
        let k = J2 * (R_EARTH / self.semi_major_axis_km).powi(2);
        let (si, ci) = self.inclination.sin_cos();
        let raan_dot = -1.5 * n * k * ci;
        let u_dot = n * (1.0 + 0.75 * k * (6.0 - 8.0 * si * si));
        (raan_dot, u_dot)
    }
}

pub fn wrap_2pi(x: f64) -> f64 {
    x.rem_euclid(std::f64::consts::TAU)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_pi(x: f64) -> f64 {
    let y = wrap_2pi(x);
    if y > std::f64::consts::PI {
        y - std::f64::consts::TAU
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    TwoBody,
    J2Secular,
}

/// Positions at every step of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Ephemeris {
    pub positions: Vec<Vec3>,
}

/// Propagates a circular orbit over the grid.
pub fn propagate(
    elements: &OrbitalElements,
    grid: &TimeGrid,
    mode: Perturbation,
) -> Result<Ephemeris> {
    elements.validate()?;
    let (raan_dot, u_dot) = match mode {
        Perturbation::TwoBody => (0.0, elements.mean_motion()),
        Perturbation::J2Secular => elements.j2_rates(),
    };
    let positions = (0..grid.steps)
        .map(|t| {
            let dt = grid.seconds(t);
            elements.position_at(
                elements.raan + raan_dot * dt,
                elements.arg_latitude + u_dot * dt,
            )
        })
        .collect();
    Ok(Ephemeris { positions })
}

/// Inertial positions of a fixed point on a spherical Earth rotating at the sidereal
/// rate, with Greenwich at `greenwich_angle` (rad) at the epoch.
pub fn ground_point_positions(
    lat_deg: f64,
    lon_deg: f64,
    grid: &TimeGrid,
    greenwich_angle: f64,
) -> Result<Vec<Vec3>> {
    if !(-90.0..=90.0).contains(&lat_deg) || !(-180.0..=360.0).contains(&lon_deg) {
        return Err(Error::Config(format!(
            "ground point ({lat_deg}, {lon_deg}) out of range"
        )));
    }
    let (slat, clat) = lat_deg.to_radians().sin_cos();
    let lon = lon_deg.to_radians();
    Ok((0..grid.steps)
        .map(|t| {
            let theta = greenwich_angle + OMEGA_EARTH * grid.seconds(t) + lon;
            let (st, ct) = theta.sin_cos();
            [R_EARTH * clat * ct, R_EARTH * clat * st, R_EARTH * slat]
        })
        .collect())
}

/// Geocentric Sun position (km) at a Julian date, from the low-precision solar
/// theory of the Astronomical Almanac (about 0.01 deg accuracy).
pub fn sun_position_jd(jd: f64) -> Vec3 {
    let t = (jd - 2_451_545.0) / 36_525.0;
    let mean_lon = 280.460 + 36_000.771 * t;
    let m = (357.529_109_2 + 35_999.050_34 * t).to_radians();
    let ecl_lon =
        (mean_lon + 1.914_666_471 * m.sin() + 0.019_994_643 * (2.0 * m).sin()).to_radians();
    let r_au = 1.000_140_612 - 0.016_708_617 * m.cos() - 0.000_139_589 * (2.0 * m).cos();
    let eps = (23.439_291 - 0.013_004_2 * t).to_radians();
    let r = r_au * AU_KM;
    [
        r * ecl_lon.cos(),
        r * eps.cos() * ecl_lon.sin(),
        r * eps.sin() * ecl_lon.sin(),
    ]
}

pub fn sun_positions(grid: &TimeGrid) -> Vec<Vec3> {
    let jd0 = grid.epoch_julian_date();
    (0..grid.steps)
        .map(|t| sun_position_jd(jd0 + grid.seconds(t) / 86_400.0))
        .collect()
}

/// Walker-delta constellation `i: t/p/f` at a common altitude. Satellites are
/// ordered plane by plane.
pub fn walker_delta(
    inclination_deg: f64,
    total: usize,
    planes: usize,
    phasing: usize,
    altitude_km: f64,
) -> Result<Vec<OrbitalElements>> {
    if total == 0 || planes == 0 || total % planes != 0 || phasing >= planes {
        return Err(Error::Config(format!(
            "invalid Walker pattern {total}/{planes}/{phasing}"
        )));
    }
    let per_plane = total / planes;
    let mut sats = Vec::with_capacity(total);
    for p in 0..planes {
        for s in 0..per_plane {
            let raan = 360.0 * p as f64 / planes as f64;
            let u =
                360.0 * s as f64 / per_plane as f64 + 360.0 * (phasing * p) as f64 / total as f64;
            let el = OrbitalElements::circular_deg(altitude_km, inclination_deg, raan, u);
            el.validate()?;
            sats.push(el);
        }
    }
    Ok(sats)
}
