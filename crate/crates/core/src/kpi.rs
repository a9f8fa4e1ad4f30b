//! Per-slot performance indicators and their aggregation over a run:
//! total and grid power, energy efficiency, and capacity utilization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::SwitchDecision;
use crate::topology::Topology;

#[derive(Debug, Error)]
pub enum KpiError {
    #[error("cannot aggregate an empty record list")]
    Empty,
}

/// KPIs of one policy on one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiRecord {
    pub slot: u32,
    pub total_power_w: f64,
    /// Power drawn from the grid; the solar-fed HAPS is excluded.
    pub grid_power_w: f64,
    pub served_traffic_gbps: f64,
    pub energy_efficiency_gbps_per_w: f64,
    /// Summed capacity of the HAPS, the MBS, and every SBS still on.
    pub active_capacity_gbps: f64,
    pub capacity_utilization: f64,
    pub active_sbs: usize,
}

/// Served traffic per watt of network power.
pub fn energy_efficiency(served_traffic_gbps: f64, total_power_w: f64) -> f64 {
    // Operational power keeps total power positive in any valid profile;
    // guard anyway rather than emit infinities.
    debug_assert!(total_power_w > 0.0);
    if total_power_w > 0.0 {
        served_traffic_gbps / total_power_w
    } else {
        0.0
    }
}

/// Network power minus the HAPS draw, recomputed with the same fold the
/// total used so that `grid + haps == total` holds bit-for-bit.
pub fn grid_power(decision: &SwitchDecision, topology: &Topology) -> f64 {
    crate::power::grid_power(
        (&topology.mbs.profile, decision.state.lambda_mbs),
        topology
            .sbs
            .iter()
            .zip(decision.state.lambda_sbs.iter().zip(&decision.state.delta))
            .map(|(sbs, (&lambda, &on))| (&sbs.profile, lambda, on)),
    )
    .expect("decision states keep sleeping SBSs unloaded")
}

/// Served traffic over the capacity of everything switched on. The HAPS
/// and MBS always count toward the denominator.
pub fn capacity_utilization(decision: &SwitchDecision, topology: &Topology) -> f64 {
    decision.state.served_gbps(topology) / active_capacity(decision, topology)
}

fn active_capacity(decision: &SwitchDecision, topology: &Topology) -> f64 {
    topology.haps.capacity_gbps
        + topology.mbs.capacity_gbps
        + topology
            .sbs
            .iter()
            .zip(&decision.state.delta)
            .filter(|(_, &on)| on)
            .map(|(sbs, _)| sbs.capacity_gbps)
            .sum::<f64>()
}

/// Assembles the full KPI record for one decision.
pub fn kpi_record(slot: u32, decision: &SwitchDecision, topology: &Topology) -> KpiRecord {
    let served = decision.state.served_gbps(topology);
    let active_capacity = active_capacity(decision, topology);
    KpiRecord {
        slot,
        total_power_w: decision.total_power_w,
        grid_power_w: grid_power(decision, topology),
        served_traffic_gbps: served,
        energy_efficiency_gbps_per_w: energy_efficiency(served, decision.total_power_w),
        active_capacity_gbps: active_capacity,
        capacity_utilization: served / active_capacity,
        active_sbs: decision.state.active_sbs_count(),
    }
}

/// Mean, population standard deviation, and range of one KPI over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl FieldSummary {
    fn over(values: impl Iterator<Item = f64> + Clone) -> Self {
        let count = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / count;
        let variance = values
            .clone()
            .map(|value| (value - mean).powi(2))
            .sum::<f64>()
            / count;
        FieldSummary {
            mean,
            std_dev: variance.sqrt(),
            min: values.clone().fold(f64::INFINITY, f64::min),
            max: values.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Per-field statistics of every KPI over the slots of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiAggregate {
    pub total_power_w: FieldSummary,
    pub grid_power_w: FieldSummary,
    pub served_traffic_gbps: FieldSummary,
    pub energy_efficiency_gbps_per_w: FieldSummary,
    pub active_capacity_gbps: FieldSummary,
    pub capacity_utilization: FieldSummary,
    pub active_sbs: FieldSummary,
}

/// Aggregates per-slot records; two-pass means, deterministic in input
/// order.
pub fn aggregate(records: &[KpiRecord]) -> Result<KpiAggregate, KpiError> {
    if records.is_empty() {
        return Err(KpiError::Empty);
    }
    Ok(KpiAggregate {
        total_power_w: FieldSummary::over(records.iter().map(|r| r.total_power_w)),
        grid_power_w: FieldSummary::over(records.iter().map(|r| r.grid_power_w)),
        served_traffic_gbps: FieldSummary::over(records.iter().map(|r| r.served_traffic_gbps)),
        energy_efficiency_gbps_per_w: FieldSummary::over(
            records.iter().map(|r| r.energy_efficiency_gbps_per_w),
        ),
        active_capacity_gbps: FieldSummary::over(records.iter().map(|r| r.active_capacity_gbps)),
        capacity_utilization: FieldSummary::over(records.iter().map(|r| r.capacity_utilization)),
        active_sbs: FieldSummary::over(records.iter().map(|r| r.active_sbs as f64)),
    })
}
