//! The sweep harness: runs every requested policy over every
//! `(sbs count, offered demand)` sweep point for the configured number of
//! slots, and aggregates KPIs per point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, SimConfig};
use crate::kpi::{aggregate, kpi_record, KpiAggregate, KpiError};
use crate::policy::{evaluate_policy, Policy, PolicyError};
use crate::topology::build_topology;
use crate::traffic::{generate_snapshot, TrafficConfig, TrafficError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("sweep point (s = {s}, demand = {demand_gbps} Gbps): {source}")]
    Traffic {
        s: u32,
        demand_gbps: f64,
        source: TrafficError,
    },
    #[error(transparent)]
    Kpi(#[from] KpiError),
}

/// One per-slot result line; field names are the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub policy: Policy,
    pub s: u32,
    pub total_demand_gbps: f64,
    pub slot: u32,
    pub total_power_w: f64,
    pub grid_power_w: f64,
    pub ee_gbps_per_w: f64,
    pub capacity_utilization: f64,
    pub active_sbs: u32,
}

/// Aggregated KPIs of one policy at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: Policy,
    pub s: u32,
    pub total_demand_gbps: f64,
    pub num_slots: u32,
    pub kpis: KpiAggregate,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<RunSummary>,
}

/// Runs the full sweep. Deterministic in the config (which carries the
/// seed); sweep points execute in parallel but the output order is fixed
/// to (policy, s, demand, slot).
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentOutput, ExperimentError> {
    config.validate()?;
    if config.policies.contains(&Policy::Exhaustive) {
        if let Some(&s) = config.sbs_counts.iter().find(|&&s| s > config.es_max_s) {
            return Err(PolicyError::ExhaustiveGuard {
                s: s as usize,
                max_s: config.es_max_s,
            }
            .into());
        }
    }

    let mut points: Vec<(u32, f64)> = Vec::new();
    for &s in &config.sbs_counts {
        for demand in config.demand_points_for(s)? {
            points.push((s, demand));
        }
    }

    let results: Vec<(Vec<ResultRow>, Vec<RunSummary>)> = points
        .par_iter()
        .map(|&(s, demand)| run_point(config, s, demand))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (point_rows, point_summaries) in results {
        rows.extend(point_rows);
        summaries.extend(point_summaries);
    }
    rows.sort_by(|a, b| {
        (a.policy, a.s)
            .cmp(&(b.policy, b.s))
            .then(a.total_demand_gbps.total_cmp(&b.total_demand_gbps))
            .then(a.slot.cmp(&b.slot))
    });
    summaries.sort_by(|a, b| {
        (a.policy, a.s)
            .cmp(&(b.policy, b.s))
            .then(a.total_demand_gbps.total_cmp(&b.total_demand_gbps))
    });
    Ok(ExperimentOutput { rows, summaries })
}

fn run_point(
    config: &SimConfig,
    s: u32,
    demand_gbps: f64,
) -> Result<(Vec<ResultRow>, Vec<RunSummary>), ExperimentError> {
    let topology = build_topology(config, s, config.seed)?;
    let traffic = TrafficConfig {
        sbs_share: config.sbs_share,
        softmax_temperature: config.softmax_temperature,
        strict_demand: config.strict_demand,
    };

    let mut rows = Vec::with_capacity(config.policies.len() * config.num_slots as usize);
    let mut records: Vec<Vec<crate::kpi::KpiRecord>> =
        vec![Vec::with_capacity(config.num_slots as usize); config.policies.len()];

    for slot in 0..config.num_slots {
        let snapshot = generate_snapshot(&topology, &traffic, demand_gbps, config.seed, slot)
            .map_err(|source| ExperimentError::Traffic {
                s,
                demand_gbps,
                source,
            })?;
        for (policy_index, &policy) in config.policies.iter().enumerate() {
            let decision = evaluate_policy(
                policy,
                &snapshot,
                &topology,
                config.es_max_s,
                config.phase_order,
            )?;
            let record = kpi_record(slot, &decision, &topology);
            rows.push(ResultRow {
                policy,
                s,
                total_demand_gbps: demand_gbps,
                slot,
                total_power_w: record.total_power_w,
                grid_power_w: record.grid_power_w,
                ee_gbps_per_w: record.energy_efficiency_gbps_per_w,
                capacity_utilization: record.capacity_utilization,
                active_sbs: record.active_sbs as u32,
            });
            records[policy_index].push(record);
        }
    }

    let summaries = config
        .policies
        .iter()
        .zip(records)
        .map(|(&policy, policy_records)| {
            Ok(RunSummary {
                policy,
                s,
                total_demand_gbps: demand_gbps,
                num_slots: config.num_slots,
                kpis: aggregate(&policy_records)?,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    Ok((rows, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimConfig {
        let mut config = SimConfig::default();
        config.num_slots = 5;
        config.sbs_counts = vec![3];
        config.demand_fractions = vec![0.3];
        config
    }

    #[test]
    fn rows_cover_every_policy_point_and_slot() {
        let config = small_config();
        let output = run_experiment(&config).unwrap();
        assert_eq!(output.rows.len(), 3 * 5);
        assert_eq!(output.summaries.len(), 3);
        for summary in &output.summaries {
            assert_eq!(summary.num_slots, 5);
            assert!(summary.kpis.total_power_w.min <= summary.kpis.total_power_w.mean);
            assert!(summary.kpis.total_power_w.mean <= summary.kpis.total_power_w.max);
        }
    }

    #[test]
    fn rows_are_ordered_by_policy_s_demand_slot() {
        let mut config = small_config();
        config.sbs_counts = vec![2, 3];
        config.demand_fractions = vec![0.2, 0.4];
        let output = run_experiment(&config).unwrap();
        let keys: Vec<_> = output
            .rows
            .iter()
            .map(|row| (row.policy, row.s, row.total_demand_gbps, row.slot))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then(a.2.total_cmp(&b.2))
                .then(a.3.cmp(&b.3))
        });
        assert_eq!(keys, sorted);
    }

    #[test]
    fn runs_are_reproducible() {
        let config = small_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_points_are_isolated() {
        let narrow = small_config();
        let mut wide = small_config();
        wide.sbs_counts = vec![3, 6];
        let narrow_output = run_experiment(&narrow).unwrap();
        let wide_output = run_experiment(&wide).unwrap();
        let wide_s3: Vec<_> = wide_output
            .rows
            .into_iter()
            .filter(|row| row.s == 3)
            .collect();
        assert_eq!(narrow_output.rows, wide_s3);
    }

    #[test]
    fn exhaustive_guard_blocks_the_whole_run() {
        let mut config = small_config();
        config.policies.push(Policy::Exhaustive);
        config.sbs_counts = vec![25];
        let err = run_experiment(&config).unwrap_err();
        assert!(err.to_string().contains("es_max_s"), "{err}");
    }

    #[test]
    fn strict_mode_reports_the_offending_point() {
        let mut config = small_config();
        config.strict_demand = true;
        config.total_demand_points_gbps = vec![500.0];
        let err = run_experiment(&config).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("s = 3"), "{message}");
        assert!(message.contains("500"), "{message}");
    }
}
