//! Simulation configuration: a flat key-value file (TOML syntax, top-level
//! keys only) mirroring every tunable of the simulator. All stock parameter
//! values live here as defaults; nothing is hard-coded in the model logic.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{PhaseOrder, Policy};
use crate::power::{ModelError, PowerProfile};
use crate::topology::PartitionMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidField {
        field,
        reason: reason.into(),
    }
}

/// Full experiment configuration. Field names double as the config-file
/// keys; unknown keys are rejected by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Time slots simulated per sweep point.
    pub num_slots: u32,
    /// Master seed; every stream in the run derives from it. There is no
    /// wall-clock fallback.
    pub seed: u64,
    /// Policies evaluated on every slot.
    pub policies: Vec<Policy>,
    /// Refuse exhaustive search above this many SBSs (2^s state vectors).
    pub es_max_s: u32,
    /// How SBSs are split between the HAPS- and MBS-offloadable sets.
    pub partition_mode: PartitionMode,
    /// Abort when offered demand cannot be served instead of clipping it.
    pub strict_demand: bool,

    /// Sweep axis: number of SBSs.
    pub sbs_counts: Vec<u32>,
    /// Sweep axis: offered demand as fractions of total network capacity,
    /// materialized per SBS count. Ignored when absolute points are given.
    pub demand_fractions: Vec<f64>,
    /// Sweep axis: absolute offered demand in Gbps. Takes precedence over
    /// `demand_fractions` when non-empty.
    pub total_demand_points_gbps: Vec<f64>,

    /// Fraction of SBSs whose offload target is the HAPS (ratio mode).
    pub gamma: f64,
    pub haps_radius_m: f64,
    pub mbs_radius_m: f64,
    pub sbs_radius_m: f64,

    pub haps_capacity_gbps: f64,
    pub mbs_capacity_gbps: f64,
    pub sbs_capacity_gbps: f64,

    pub haps_pa_efficiency: f64,
    pub haps_transmit_power_w: f64,
    pub haps_operational_power_w: f64,
    pub haps_sleep_power_w: f64,
    pub mbs_pa_efficiency: f64,
    pub mbs_transmit_power_w: f64,
    pub mbs_operational_power_w: f64,
    pub mbs_sleep_power_w: f64,
    pub sbs_pa_efficiency: f64,
    pub sbs_transmit_power_w: f64,
    pub sbs_operational_power_w: f64,
    pub sbs_sleep_power_w: f64,

    /// Share of offered demand directed at the SBS tier.
    pub sbs_share: f64,
    /// SoftMax temperature for the per-SBS traffic split.
    pub softmax_temperature: f64,

    /// Per-SBS capacity overrides, `"id:gbps"`. Entries whose id is beyond
    /// the current sweep's SBS count are ignored.
    pub sbs_capacity_overrides: Vec<String>,
    /// Per-SBS power profile overrides, `"id:eta:transmit:operational:sleep"`.
    pub sbs_profile_overrides: Vec<String>,

    /// Experimental: order of the two offloading phases in the greedy
    /// policy. The stock order offloads toward the HAPS first.
    pub phase_order: PhaseOrder,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_slots: 500,
            seed: 42,
            policies: vec![Policy::NoOffloading, Policy::MbsOnly, Policy::HapsMbs],
            es_max_s: 20,
            partition_mode: PartitionMode::Ratio,
            strict_demand: false,
            sbs_counts: vec![10, 20, 30, 40, 45, 50, 60, 70],
            // Eight evenly spaced points from 10% to 90% of capacity.
            demand_fractions: (0..8).map(|i| 0.1 + i as f64 * (0.8 / 7.0)).collect(),
            total_demand_points_gbps: Vec::new(),
            gamma: 0.7,
            haps_radius_m: 564.0,
            mbs_radius_m: 471.0,
            sbs_radius_m: 60.0,
            haps_capacity_gbps: 40.0,
            mbs_capacity_gbps: 10.0,
            sbs_capacity_gbps: 5.0,
            haps_pa_efficiency: 15.0,
            haps_transmit_power_w: 20.0,
            haps_operational_power_w: 130.0,
            haps_sleep_power_w: 75.0,
            mbs_pa_efficiency: 4.7,
            mbs_transmit_power_w: 20.0,
            mbs_operational_power_w: 130.0,
            mbs_sleep_power_w: 75.0,
            sbs_pa_efficiency: 2.6,
            sbs_transmit_power_w: 6.3,
            sbs_operational_power_w: 56.0,
            sbs_sleep_power_w: 39.0,
            sbs_share: 0.8,
            // Calibrated so the offloading dynamics stay visible at every
            // sweep size; see the README's reproduction notes.
            softmax_temperature: 2.0,
            sbs_capacity_overrides: Vec::new(),
            sbs_profile_overrides: Vec::new(),
            phase_order: PhaseOrder::HapsFirst,
        }
    }
}

impl SimConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: SimConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn haps_profile(&self) -> PowerProfile {
        PowerProfile {
            pa_efficiency: self.haps_pa_efficiency,
            transmit_power_w: self.haps_transmit_power_w,
            operational_power_w: self.haps_operational_power_w,
            sleep_power_w: self.haps_sleep_power_w,
        }
    }

    pub fn mbs_profile(&self) -> PowerProfile {
        PowerProfile {
            pa_efficiency: self.mbs_pa_efficiency,
            transmit_power_w: self.mbs_transmit_power_w,
            operational_power_w: self.mbs_operational_power_w,
            sleep_power_w: self.mbs_sleep_power_w,
        }
    }

    pub fn sbs_profile(&self) -> PowerProfile {
        PowerProfile {
            pa_efficiency: self.sbs_pa_efficiency,
            transmit_power_w: self.sbs_transmit_power_w,
            operational_power_w: self.sbs_operational_power_w,
            sleep_power_w: self.sbs_sleep_power_w,
        }
    }

    /// Capacity overrides parsed into `(id, gbps)` pairs.
    pub fn parsed_capacity_overrides(&self) -> Result<Vec<(u32, f64)>, ConfigError> {
        self.sbs_capacity_overrides
            .iter()
            .map(|entry| {
                let (id, capacity) = entry
                    .split_once(':')
                    .ok_or_else(|| invalid("sbs_capacity_overrides", format!("`{entry}` is not `id:gbps`")))?;
                let id: u32 = id
                    .trim()
                    .parse()
                    .map_err(|_| invalid("sbs_capacity_overrides", format!("bad id in `{entry}`")))?;
                let capacity: f64 = capacity
                    .trim()
                    .parse()
                    .map_err(|_| invalid("sbs_capacity_overrides", format!("bad capacity in `{entry}`")))?;
                if !(capacity > 0.0) {
                    return Err(invalid(
                        "sbs_capacity_overrides",
                        format!("capacity must be positive in `{entry}`"),
                    ));
                }
                Ok((id, capacity))
            })
            .collect()
    }

    /// Profile overrides parsed into `(id, profile)` pairs.
    pub fn parsed_profile_overrides(&self) -> Result<Vec<(u32, PowerProfile)>, ConfigError> {
        self.sbs_profile_overrides
            .iter()
            .map(|entry| {
                let parts: Vec<&str> = entry.split(':').map(str::trim).collect();
                if parts.len() != 5 {
                    return Err(invalid(
                        "sbs_profile_overrides",
                        format!("`{entry}` is not `id:eta:transmit:operational:sleep`"),
                    ));
                }
                let id: u32 = parts[0]
                    .parse()
                    .map_err(|_| invalid("sbs_profile_overrides", format!("bad id in `{entry}`")))?;
                let mut values = [0.0f64; 4];
                for (slot, raw) in values.iter_mut().zip(&parts[1..]) {
                    *slot = raw.parse().map_err(|_| {
                        invalid("sbs_profile_overrides", format!("bad number in `{entry}`"))
                    })?;
                }
                let profile = PowerProfile::new(values[0], values[1], values[2], values[3])?;
                Ok((id, profile))
            })
            .collect()
    }

    /// Total network capacity for a sweep point with `s` SBSs, including
    /// per-SBS capacity overrides.
    pub fn total_capacity_for(&self, s: u32) -> Result<f64, ConfigError> {
        let mut total = self.haps_capacity_gbps
            + self.mbs_capacity_gbps
            + f64::from(s) * self.sbs_capacity_gbps;
        for (id, capacity) in self.parsed_capacity_overrides()? {
            if id < s {
                total += capacity - self.sbs_capacity_gbps;
            }
        }
        Ok(total)
    }

    /// Materialized offered-demand axis for a sweep point with `s` SBSs.
    pub fn demand_points_for(&self, s: u32) -> Result<Vec<f64>, ConfigError> {
        if !self.total_demand_points_gbps.is_empty() {
            return Ok(self.total_demand_points_gbps.clone());
        }
        let capacity = self.total_capacity_for(s)?;
        Ok(self
            .demand_fractions
            .iter()
            .map(|fraction| fraction * capacity)
            .collect())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_slots == 0 {
            return Err(invalid("num_slots", "must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(invalid("policies", "must name at least one policy"));
        }
        if self.sbs_counts.is_empty() {
            return Err(invalid("sbs_counts", "sweep must be non-empty"));
        }
        if self.total_demand_points_gbps.is_empty() && self.demand_fractions.is_empty() {
            return Err(invalid(
                "demand_fractions",
                "need demand_fractions or total_demand_points_gbps",
            ));
        }
        for &fraction in &self.demand_fractions {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(invalid(
                    "demand_fractions",
                    format!("{fraction} is not in (0, 1]"),
                ));
            }
        }
        for &demand in &self.total_demand_points_gbps {
            if !(demand > 0.0) || !demand.is_finite() {
                return Err(invalid(
                    "total_demand_points_gbps",
                    format!("{demand} is not positive"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("{} is not in [0, 1]", self.gamma)));
        }
        for (field, value) in [
            ("haps_capacity_gbps", self.haps_capacity_gbps),
            ("mbs_capacity_gbps", self.mbs_capacity_gbps),
            ("sbs_capacity_gbps", self.sbs_capacity_gbps),
            ("haps_radius_m", self.haps_radius_m),
            ("mbs_radius_m", self.mbs_radius_m),
            ("sbs_radius_m", self.sbs_radius_m),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(invalid(field, format!("{value} is not positive")));
            }
        }
        if self.partition_mode == PartitionMode::Geometric {
            if self.haps_radius_m <= self.sbs_radius_m {
                return Err(invalid(
                    "haps_radius_m",
                    "must exceed sbs_radius_m for geometric placement",
                ));
            }
            if self.mbs_radius_m <= self.sbs_radius_m {
                return Err(invalid(
                    "mbs_radius_m",
                    "must exceed sbs_radius_m for geometric placement",
                ));
            }
            if self.mbs_radius_m > self.haps_radius_m {
                return Err(invalid(
                    "mbs_radius_m",
                    "must not exceed haps_radius_m",
                ));
            }
        }
        self.haps_profile().validate()?;
        self.mbs_profile().validate()?;
        self.sbs_profile().validate()?;
        if !(0.0..=1.0).contains(&self.sbs_share) {
            return Err(invalid(
                "sbs_share",
                format!("{} is not in [0, 1]", self.sbs_share),
            ));
        }
        if !(self.softmax_temperature > 0.0) || !self.softmax_temperature.is_finite() {
            return Err(invalid(
                "softmax_temperature",
                format!("{} is not positive", self.softmax_temperature),
            ));
        }
        self.parsed_capacity_overrides()?;
        self.parsed_profile_overrides()?;
        Ok(())
    }
}
