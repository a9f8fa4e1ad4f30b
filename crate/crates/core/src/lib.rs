//! Discrete-time energy simulator for a HAPS-assisted heterogeneous
//! network.
//!
//! The network under study is one high altitude platform station (HAPS),
//! one macro base station (MBS), and a configurable tier of small base
//! stations (SBSs). Each time slot, a SoftMax draw spreads offered demand
//! across the SBS tier, a switching policy decides which SBSs sleep — with
//! their load moved to the HAPS or the MBS — and the KPI layer scores the
//! outcome: network power, grid power, energy efficiency, and capacity
//! utilization.
//!
//! Policies on offer: keeping everything on, greedy MBS-only offloading,
//! the greedy two-phase HAPS+MBS offloading driven by closed-form
//! load thresholds, and exhaustive search over all `2^s` state vectors as
//! the optimality oracle. Runs are deterministic in the configured seed.

pub mod config;
pub mod experiment;
pub mod kpi;
pub mod output;
pub mod policy;
pub mod power;
mod rng;
pub mod topology;
pub mod traffic;

pub use config::{ConfigError, SimConfig};
pub use experiment::{run_experiment, ExperimentOutput, ResultRow, RunSummary};
pub use output::{emit_csv, emit_figure_data, emit_summary_json, Figure};
pub use policy::{Policy, SwitchDecision};
pub use topology::{build_topology, Topology};
