//! Network construction: one HAPS, one MBS, `s` SBSs, and the partition of
//! the SBSs into the HAPS-offloadable and MBS-offloadable sets.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, SimConfig};
use crate::power::{relative_capacity, ModelError, PowerProfile, RelativeCapacity};
use crate::rng::{derived_rng, DOMAIN_TOPOLOGY};

/// Where a given SBS sends its traffic when it is switched off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffloadTarget {
    Haps,
    Mbs,
}

/// How the SBSs are assigned their offload targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// A seed-shuffled `round(gamma * s)` of the SBSs target the HAPS.
    #[default]
    Ratio,
    /// SBSs get positions in the HAPS disk; those inside the macro cell
    /// target the MBS, the ring beyond it targets the HAPS.
    Geometric,
}

/// An always-on station (the HAPS or the MBS).
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub capacity_gbps: f64,
    pub profile: PowerProfile,
}

/// One small base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Sbs {
    pub id: u32,
    pub capacity_gbps: f64,
    pub profile: PowerProfile,
    pub offload_target: OffloadTarget,
    /// Present only in geometric mode; meters from the cell origin.
    pub position_m: Option<(f64, f64)>,
}

/// Coverage radii in meters: the HAPS disk, the macro cell, and one small
/// cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radii {
    pub haps_m: f64,
    pub mbs_m: f64,
    pub sbs_m: f64,
}

/// The fixed network a run simulates. Immutable after construction and
/// freely shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub haps: BaseStation,
    pub mbs: BaseStation,
    pub sbs: Vec<Sbs>,
    pub radii: Radii,
    pub gamma: f64,
}

impl Topology {
    pub fn sbs_count(&self) -> usize {
        self.sbs.len()
    }

    pub fn total_capacity_gbps(&self) -> f64 {
        self.haps.capacity_gbps
            + self.mbs.capacity_gbps
            + self.sbs.iter().map(|sbs| sbs.capacity_gbps).sum::<f64>()
    }

    pub fn target_station(&self, target: OffloadTarget) -> &BaseStation {
        match target {
            OffloadTarget::Haps => &self.haps,
            OffloadTarget::Mbs => &self.mbs,
        }
    }

    /// Relative capacity of SBS `index` toward an explicit target.
    pub fn phi_to(&self, index: usize, target: OffloadTarget) -> Result<RelativeCapacity, ModelError> {
        relative_capacity(
            self.sbs[index].capacity_gbps,
            self.target_station(target).capacity_gbps,
        )
    }

    /// Relative capacity of SBS `index` toward its own offload target.
    pub fn phi(&self, index: usize) -> Result<RelativeCapacity, ModelError> {
        self.phi_to(index, self.sbs[index].offload_target)
    }

    /// Disjoint, exhaustive split of SBS ids into (HAPS-offloadable,
    /// MBS-offloadable).
    pub fn partition_sets(&self) -> (Vec<u32>, Vec<u32>) {
        let mut haps_set = Vec::new();
        let mut mbs_set = Vec::new();
        for sbs in &self.sbs {
            match sbs.offload_target {
                OffloadTarget::Haps => haps_set.push(sbs.id),
                OffloadTarget::Mbs => mbs_set.push(sbs.id),
            }
        }
        (haps_set, mbs_set)
    }
}

/// Builds the network for one sweep point. Deterministic in
/// `(config, s, seed)`.
pub fn build_topology(config: &SimConfig, s: u32, seed: u64) -> Result<Topology, ConfigError> {
    config.validate()?;
    let mut rng = derived_rng(seed, DOMAIN_TOPOLOGY, u64::from(s));

    let mut targets: Vec<OffloadTarget> = Vec::with_capacity(s as usize);
    let mut positions: Vec<Option<(f64, f64)>> = Vec::with_capacity(s as usize);
    match config.partition_mode {
        PartitionMode::Ratio => {
            let mut ids: Vec<u32> = (0..s).collect();
            ids.shuffle(&mut rng);
            let haps_count = ((config.gamma * f64::from(s)).round() as usize).min(s as usize);
            let mut to_haps = vec![false; s as usize];
            for &id in &ids[..haps_count] {
                to_haps[id as usize] = true;
            }
            targets = to_haps
                .iter()
                .map(|&haps| if haps { OffloadTarget::Haps } else { OffloadTarget::Mbs })
                .collect();
            positions = vec![None; s as usize];
        }
        PartitionMode::Geometric => {
            // Cell centers are drawn so the whole small cell fits inside the
            // HAPS disk; the target is the MBS only when the small cell fits
            // inside the macro cell.
            let placement_radius = config.haps_radius_m - config.sbs_radius_m;
            let mbs_reach = config.mbs_radius_m - config.sbs_radius_m;
            for _ in 0..s {
                let radius = placement_radius * rng.gen::<f64>().sqrt();
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                positions.push(Some((radius * angle.cos(), radius * angle.sin())));
                targets.push(if radius <= mbs_reach {
                    OffloadTarget::Mbs
                } else {
                    OffloadTarget::Haps
                });
            }
        }
    }

    let mut sbs: Vec<Sbs> = (0..s)
        .map(|id| Sbs {
            id,
            capacity_gbps: config.sbs_capacity_gbps,
            profile: config.sbs_profile(),
            offload_target: targets[id as usize],
            position_m: positions[id as usize],
        })
        .collect();
    for (id, capacity) in config.parsed_capacity_overrides()? {
        if (id as usize) < sbs.len() {
            sbs[id as usize].capacity_gbps = capacity;
        }
    }
    for (id, profile) in config.parsed_profile_overrides()? {
        if (id as usize) < sbs.len() {
            sbs[id as usize].profile = profile;
        }
    }

    Ok(Topology {
        haps: BaseStation {
            capacity_gbps: config.haps_capacity_gbps,
            profile: config.haps_profile(),
        },
        mbs: BaseStation {
            capacity_gbps: config.mbs_capacity_gbps,
            profile: config.mbs_profile(),
        },
        sbs,
        radii: Radii {
            haps_m: config.haps_radius_m,
            mbs_m: config.mbs_radius_m,
            sbs_m: config.sbs_radius_m,
        },
        gamma: config.gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_partition_matches_gamma() {
        let config = SimConfig::default();
        let topology = build_topology(&config, 10, 1).unwrap();
        let (haps_set, mbs_set) = topology.partition_sets();
        assert_eq!(haps_set.len(), 7);
        assert_eq!(mbs_set.len(), 3);
    }

    #[test]
    fn empty_sbs_tier() {
        let config = SimConfig::default();
        let topology = build_topology(&config, 0, 1).unwrap();
        assert_eq!(topology.sbs_count(), 0);
        assert_eq!(topology.total_capacity_gbps(), 50.0);
    }

    #[test]
    fn gamma_zero_targets_mbs_only() {
        let mut config = SimConfig::default();
        config.gamma = 0.0;
        let topology = build_topology(&config, 20, 1).unwrap();
        let (haps_set, mbs_set) = topology.partition_sets();
        assert!(haps_set.is_empty());
        assert_eq!(mbs_set.len(), 20);
    }

    #[test]
    fn gamma_one_targets_haps_only() {
        let mut config = SimConfig::default();
        config.gamma = 1.0;
        let topology = build_topology(&config, 8, 1).unwrap();
        let (haps_set, mbs_set) = topology.partition_sets();
        assert_eq!(haps_set.len(), 8);
        assert!(mbs_set.is_empty());
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        let config = SimConfig::default();
        for s in [1u32, 5, 13, 32] {
            let topology = build_topology(&config, s, 9).unwrap();
            let (haps_set, mbs_set) = topology.partition_sets();
            let mut all: Vec<u32> = haps_set.iter().chain(&mbs_set).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..s).collect::<Vec<_>>());
        }
    }

    #[test]
    fn same_seed_same_partition() {
        let config = SimConfig::default();
        let a = build_topology(&config, 16, 123).unwrap();
        let b = build_topology(&config, 16, 123).unwrap();
        assert_eq!(a, b);
        let c = build_topology(&config, 16, 124).unwrap();
        assert_ne!(a.partition_sets(), c.partition_sets());
    }

    #[test]
    fn geometric_positions_respect_radii() {
        let mut config = SimConfig::default();
        config.partition_mode = PartitionMode::Geometric;
        let topology = build_topology(&config, 40, 7).unwrap();
        for sbs in &topology.sbs {
            let (x, y) = sbs.position_m.expect("geometric mode sets positions");
            let distance = (x * x + y * y).sqrt();
            assert!(distance <= config.haps_radius_m);
            match sbs.offload_target {
                OffloadTarget::Mbs => assert!(distance <= config.mbs_radius_m),
                // Anything past the macro cell's reach must lean on the HAPS.
                OffloadTarget::Haps => assert!(distance > config.mbs_radius_m - config.sbs_radius_m),
            }
            if distance > config.mbs_radius_m {
                assert_eq!(sbs.offload_target, OffloadTarget::Haps);
            }
        }
    }

    #[test]
    fn phi_uses_target_capacity() {
        let config = SimConfig::default();
        let topology = build_topology(&config, 10, 1).unwrap();
        for index in 0..topology.sbs_count() {
            let expected = match topology.sbs[index].offload_target {
                OffloadTarget::Haps => 0.125,
                OffloadTarget::Mbs => 0.5,
            };
            assert_eq!(topology.phi(index).unwrap().get(), expected);
        }
    }

    #[test]
    fn capacity_override_changes_phi() {
        let mut config = SimConfig::default();
        config.sbs_capacity_overrides = vec!["0:8.0".to_string()];
        let topology = build_topology(&config, 4, 1).unwrap();
        assert_eq!(topology.sbs[0].capacity_gbps, 8.0);
        assert_eq!(topology.phi_to(0, OffloadTarget::Haps).unwrap().get(), 0.2);
        assert_eq!(
            topology.total_capacity_gbps(),
            config.total_capacity_for(4).unwrap()
        );
    }
}
