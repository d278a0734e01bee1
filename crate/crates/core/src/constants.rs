//! Resource rates, capacities and objective weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-step data and energy rates, storage limits, the downlink weight and the
/// per-satellite manoeuvre budget. Data rates are in MB, capacities in GB
/// (converted with `gb_factor`), energy in kJ, budget in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    pub data_obs_mb: f64,
    pub data_comm_mb: f64,
    pub data_min_gb: f64,
    pub data_max_gb: f64,
    pub gb_factor: f64,
    pub battery_obs_kj: f64,
    pub battery_comm_kj: f64,
    pub battery_charge_kj: f64,
    pub battery_time_kj: f64,
    pub battery_recon_kj: f64,
    pub battery_min_kj: f64,
    pub battery_max_kj: f64,
    pub weight: f64,
    pub budget_mps: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            data_obs_mb: 102.5,
            data_comm_mb: 100.0,
            data_min_gb: 0.0,
            data_max_gb: 128.0,
            gb_factor: 1000.0,
            battery_obs_kj: 16.26,
            battery_comm_kj: 1.2,
            battery_charge_kj: 41.48,
            battery_time_kj: 2.0,
            battery_recon_kj: 0.5,
            battery_min_kj: 0.0,
            battery_max_kj: 1647.0,
            weight: 2.0,
            budget_mps: 750.0,
        }
    }
}

impl PhysicalConstants {
    pub fn data_min_mb(&self) -> f64 {
        self.data_min_gb * self.gb_factor
    }

    pub fn data_max_mb(&self) -> f64 {
        self.data_max_gb * self.gb_factor
    }

    /// Objective value of the given task counts.
    pub fn objective(&self, downlinks: usize, observations: usize) -> f64 {
        self.weight * downlinks as f64 + observations as f64
    }

    /// Downlinked volume in GB.
    pub fn downlinked_gb(&self, downlinks: usize) -> f64 {
        self.data_comm_mb * downlinks as f64 / self.gb_factor
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            ("data_obs_mb", self.data_obs_mb),
            ("data_comm_mb", self.data_comm_mb),
            ("data_min_gb", self.data_min_gb),
            ("data_max_gb", self.data_max_gb),
            ("battery_obs_kj", self.battery_obs_kj),
            ("battery_comm_kj", self.battery_comm_kj),
            ("battery_charge_kj", self.battery_charge_kj),
            ("battery_time_kj", self.battery_time_kj),
            ("battery_recon_kj", self.battery_recon_kj),
            ("battery_min_kj", self.battery_min_kj),
            ("battery_max_kj", self.battery_max_kj),
            ("budget_mps", self.budget_mps),
        ];
        for (name, v) in values {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.gb_factor.is_nan() || self.gb_factor <= 0.0 {
            return Err(Error::Config("gb_factor must be positive".into()));
        }
        if self.data_max_gb < self.data_min_gb || self.battery_max_kj < self.battery_min_kj {
            return Err(Error::Config(
                "storage maxima must not be below minima".into(),
            ));
        }
        if self.weight.is_nan() || self.weight <= 1.0 {
            return Err(Error::Config(format!(
                "downlink weight must exceed 1, got {}",
                self.weight
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_convert() {
        let c = PhysicalConstants::default();
        c.validate().unwrap();
        assert_eq!(c.data_max_mb(), 128_000.0);
        assert_eq!(c.objective(8, 9), 25.0);
        assert!((c.downlinked_gb(8) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = PhysicalConstants::default();
        for c in [
            PhysicalConstants {
                weight: 1.0,
                ..base.clone()
            },
            PhysicalConstants {
                weight: f64::NAN,
                ..base.clone()
            },
            PhysicalConstants {
                battery_obs_kj: -1.0,
                ..base.clone()
            },
            PhysicalConstants {
                data_min_gb: 200.0,
                ..base.clone()
            },
        ] {
            assert!(c.validate().is_err());
        }
    }
}
