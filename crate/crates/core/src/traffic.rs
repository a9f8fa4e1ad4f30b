//! Per-slot traffic generation.
//!
//! A SoftMax over standard-normal logits splits the SBS tier's share of the
//! offered demand across the SBSs; whatever the small cells cannot carry
//! joins the remainder, which the MBS and HAPS absorb in proportion to
//! their capacities. Generation is keyed by `(seed, slot)` so slots are
//! independent streams.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::{LoadFactor, ModelError};
use crate::rng::{derived_rng, DOMAIN_TRAFFIC};
use crate::topology::Topology;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error(
        "offered demand {offered_gbps} Gbps exceeds total network capacity {capacity_gbps} Gbps \
         (strict mode)"
    )]
    InfeasibleDemand {
        offered_gbps: f64,
        capacity_gbps: f64,
    },
    #[error("offered demand {0} Gbps is not a positive finite number")]
    BadDemand(f64),
    #[error("traffic {tau_gbps} Gbps exceeds capacity {capacity_gbps} Gbps")]
    OverCapacity { tau_gbps: f64, capacity_gbps: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs of the traffic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficConfig {
    /// Share of the offered demand directed at the SBS tier.
    pub sbs_share: f64,
    /// SoftMax temperature; higher flattens the split toward uniform.
    pub softmax_temperature: f64,
    /// Error out instead of clipping when demand cannot be served.
    pub strict_demand: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            sbs_share: 0.8,
            softmax_temperature: 2.0,
            strict_demand: false,
        }
    }
}

/// Offered traffic for one slot, already clipped to per-station capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSnapshot {
    pub slot: u32,
    pub tau_sbs_gbps: Vec<f64>,
    pub tau_mbs_gbps: f64,
    pub tau_haps_gbps: f64,
    /// The demand this snapshot was asked to place.
    pub offered_demand_gbps: f64,
    /// Demand nothing had room for; zero whenever the offer fits the
    /// network.
    pub overflow_gbps: f64,
}

impl TrafficSnapshot {
    /// Traffic actually placed: offered demand minus overflow.
    pub fn served_gbps(&self) -> f64 {
        self.tau_haps_gbps + self.tau_mbs_gbps + self.tau_sbs_gbps.iter().sum::<f64>()
    }
}

/// Load factor of one station, `tau / capacity`.
pub fn load_factor(tau_gbps: f64, capacity_gbps: f64) -> Result<LoadFactor, TrafficError> {
    if tau_gbps > capacity_gbps {
        return Err(TrafficError::OverCapacity {
            tau_gbps,
            capacity_gbps,
        });
    }
    Ok(LoadFactor::new(tau_gbps / capacity_gbps)?)
}

fn softmax_weights(logits: &[f64], temperature: f64) -> Vec<f64> {
    let peak = logits
        .iter()
        .map(|z| z / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logits
        .iter()
        .map(|z| (z / temperature - peak).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    for weight in &mut weights {
        *weight /= total;
    }
    weights
}

/// Splits the tier demand by weight, clipping each station at capacity.
/// Returns the per-station traffic and the clipped excess.
fn split_tier(tier_demand: f64, weights: &[f64], capacities: &[f64]) -> (Vec<f64>, f64) {
    let mut excess = 0.0;
    let tau = weights
        .iter()
        .zip(capacities)
        .map(|(weight, capacity)| {
            let raw = weight * tier_demand;
            if raw > *capacity {
                excess += raw - capacity;
                *capacity
            } else {
                raw
            }
        })
        .collect();
    (tau, excess)
}

/// Generates the slot's offered traffic. Deterministic given
/// `(seed, slot, config, topology)`.
pub fn generate_snapshot(
    topology: &Topology,
    config: &TrafficConfig,
    offered_demand_gbps: f64,
    seed: u64,
    slot: u32,
) -> Result<TrafficSnapshot, TrafficError> {
    if !(offered_demand_gbps > 0.0) || !offered_demand_gbps.is_finite() {
        return Err(TrafficError::BadDemand(offered_demand_gbps));
    }
    let capacity = topology.total_capacity_gbps();
    if config.strict_demand && offered_demand_gbps > capacity {
        return Err(TrafficError::InfeasibleDemand {
            offered_gbps: offered_demand_gbps,
            capacity_gbps: capacity,
        });
    }

    let s = topology.sbs_count();
    let mut rng = derived_rng(seed, DOMAIN_TRAFFIC, u64::from(slot));

    let (tau_sbs, sbs_excess) = if s > 0 {
        let logits: Vec<f64> = (0..s).map(|_| rng.sample(StandardNormal)).collect();
        let weights = softmax_weights(&logits, config.softmax_temperature);
        let capacities: Vec<f64> = topology.sbs.iter().map(|sbs| sbs.capacity_gbps).collect();
        split_tier(config.sbs_share * offered_demand_gbps, &weights, &capacities)
    } else {
        (Vec::new(), 0.0)
    };

    // Remainder: the non-SBS share plus whatever the small cells clipped,
    // split between MBS and HAPS in proportion to their capacities.
    let sbs_tier_demand = if s > 0 {
        config.sbs_share * offered_demand_gbps
    } else {
        0.0
    };
    let remainder = offered_demand_gbps - sbs_tier_demand + sbs_excess;
    let shared_capacity = topology.mbs.capacity_gbps + topology.haps.capacity_gbps;
    let mbs_share = remainder * topology.mbs.capacity_gbps / shared_capacity;
    // When the remainder fits, hand the MBS its proportional share and the
    // HAPS the exact rest, so nothing is lost to rounding.
    let (tau_mbs, tau_haps, overflow) = if mbs_share <= topology.mbs.capacity_gbps
        && remainder - mbs_share <= topology.haps.capacity_gbps
    {
        (mbs_share, remainder - mbs_share, 0.0)
    } else {
        let tau_mbs = mbs_share.min(topology.mbs.capacity_gbps);
        let tau_haps = (remainder * topology.haps.capacity_gbps / shared_capacity)
            .min(topology.haps.capacity_gbps);
        (tau_mbs, tau_haps, (remainder - tau_mbs - tau_haps).max(0.0))
    };

    if overflow > 0.0 {
        if config.strict_demand {
            return Err(TrafficError::InfeasibleDemand {
                offered_gbps: offered_demand_gbps,
                capacity_gbps: capacity,
            });
        }
        log::debug!(
            "slot {slot}: {overflow:.3} Gbps of {offered_demand_gbps:.3} Gbps offered demand \
             discarded (network full)"
        );
    }

    Ok(TrafficSnapshot {
        slot,
        tau_sbs_gbps: tau_sbs,
        tau_mbs_gbps: tau_mbs,
        tau_haps_gbps: tau_haps,
        offered_demand_gbps,
        overflow_gbps: overflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::topology::build_topology;
    use approx::assert_relative_eq;

    fn topology(s: u32) -> Topology {
        build_topology(&SimConfig::default(), s, 1).unwrap()
    }

    #[test]
    fn no_sbs_splits_by_capacity() {
        let snapshot =
            generate_snapshot(&topology(0), &TrafficConfig::default(), 8.0, 1, 0).unwrap();
        assert_relative_eq!(snapshot.tau_mbs_gbps, 1.6, max_relative = 1e-12);
        assert_relative_eq!(snapshot.tau_haps_gbps, 6.4, max_relative = 1e-12);
        assert_eq!(snapshot.overflow_gbps, 0.0);
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let mut config = TrafficConfig::default();
        config.sbs_share = 1.0;
        config.softmax_temperature = 1e12;
        let snapshot = generate_snapshot(&topology(10), &config, 10.0, 1, 0).unwrap();
        for tau in &snapshot.tau_sbs_gbps {
            assert!((tau - 1.0).abs() < 1e-6, "tau = {tau}");
        }
    }

    #[test]
    fn dominant_weight_is_clipped_and_excess_moves_up() {
        // One weight close to 1: that SBS takes the whole tier demand and
        // gets clipped at capacity; the rest flows to the MBS/HAPS split.
        let (tau, excess) = split_tier(8.0, &[0.999_999, 0.000_001], &[5.0, 5.0]);
        assert_eq!(tau[0], 5.0);
        assert!(excess > 2.99 && excess < 3.0);
    }

    #[test]
    fn conservation_up_to_overflow() {
        let topology = topology(10);
        let config = TrafficConfig::default();
        for slot in 0..200 {
            for demand in [5.0, 30.0, 60.0, 90.0, 120.0] {
                let snapshot =
                    generate_snapshot(&topology, &config, demand, 11, slot).unwrap();
                assert_relative_eq!(
                    snapshot.served_gbps() + snapshot.overflow_gbps,
                    demand,
                    max_relative = 1e-12
                );
                for (tau, sbs) in snapshot.tau_sbs_gbps.iter().zip(&topology.sbs) {
                    assert!(*tau >= 0.0 && *tau <= sbs.capacity_gbps);
                }
                assert!(snapshot.tau_mbs_gbps <= topology.mbs.capacity_gbps);
                assert!(snapshot.tau_haps_gbps <= topology.haps.capacity_gbps);
                // Even if the whole SBS tier spilled, a demand within the
                // MBS+HAPS capacity cannot overflow. Larger demands may,
                // because clipped SBS excess does not redistribute within
                // the tier.
                let shared = topology.mbs.capacity_gbps + topology.haps.capacity_gbps;
                if demand <= shared {
                    assert_eq!(snapshot.overflow_gbps, 0.0, "demand {demand}");
                }
            }
        }
    }

    #[test]
    fn identical_inputs_identical_snapshot() {
        let topology = topology(7);
        let config = TrafficConfig::default();
        let a = generate_snapshot(&topology, &config, 25.0, 3, 17).unwrap();
        let b = generate_snapshot(&topology, &config, 25.0, 3, 17).unwrap();
        assert_eq!(a, b);
        let c = generate_snapshot(&topology, &config, 25.0, 3, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_is_genuinely_random() {
        let topology = topology(2);
        let config = TrafficConfig::default();
        let mut shares = Vec::with_capacity(10_000);
        for slot in 0..10_000 {
            let snapshot = generate_snapshot(&topology, &config, 10.0, 5, slot).unwrap();
            let tier: f64 = snapshot.tau_sbs_gbps.iter().sum();
            shares.push(snapshot.tau_sbs_gbps[0] / tier);
        }
        let mean = shares.iter().sum::<f64>() / shares.len() as f64;
        let variance =
            shares.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / shares.len() as f64;
        assert!(variance > 0.0);
    }

    #[test]
    fn strict_mode_rejects_infeasible_demand() {
        let mut config = TrafficConfig::default();
        config.strict_demand = true;
        let err = generate_snapshot(&topology(2), &config, 100.0, 1, 0).unwrap_err();
        assert!(matches!(err, TrafficError::InfeasibleDemand { .. }));
        // The same offer is clipped, not refused, outside strict mode.
        config.strict_demand = false;
        let snapshot = generate_snapshot(&topology(2), &config, 100.0, 1, 0).unwrap();
        assert!(snapshot.overflow_gbps > 0.0);
    }

    #[test]
    fn load_factor_examples() {
        assert_eq!(load_factor(2.5, 5.0).unwrap().get(), 0.5);
        assert_eq!(load_factor(0.0, 5.0).unwrap().get(), 0.0);
        assert_eq!(load_factor(5.0, 5.0).unwrap().get(), 1.0);
        assert!(matches!(
            load_factor(5.1, 5.0),
            Err(TrafficError::OverCapacity { .. })
        ));
    }
}
