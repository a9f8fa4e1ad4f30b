//! Switch-state transitions, feasibility, the greedy HAPS+MBS offloading
//! policy, and the benchmark policies (no offloading, MBS-only offloading,
//! exhaustive search).
//!
//! Every policy funnels its chosen OFF-set through one decision builder
//! that applies load transfers in a canonical order (ascending load, ties
//! by id). Identical OFF-sets therefore produce bit-identical powers, and
//! exhaustive search — which scores candidate state vectors with the same
//! arithmetic — can never report more power than a policy whose state
//! vector it also visited.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::{
    self, offload_threshold, LoadFactor, ModelError, RelativeCapacity,
};
use crate::topology::{OffloadTarget, Topology};
use crate::traffic::{load_factor, TrafficError, TrafficSnapshot};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("SBS {id} is already off")]
    AlreadyOff { id: usize },
    #[error("SBS {id} is already on")]
    AlreadyOn { id: usize },
    #[error("switching SBS {id} off would push the {target:?} load to {load}, above capacity")]
    TargetOverCapacity {
        id: usize,
        target: OffloadTarget,
        load: f64,
    },
    #[error("switching SBS {id} on would drive the {target:?} load negative ({load})")]
    TargetLoadNegative {
        id: usize,
        target: OffloadTarget,
        load: f64,
    },
    #[error(
        "exhaustive search over {s} SBSs needs 2^{s} state vectors, above the guard {max_s}; \
         raise `es_max_s` explicitly to allow it"
    )]
    ExhaustiveGuard { s: usize, max_s: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
}

/// A switching policy, named as it appears in result rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    NoOffloading,
    MbsOnly,
    HapsMbs,
    Exhaustive,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::NoOffloading,
        Policy::MbsOnly,
        Policy::HapsMbs,
        Policy::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::NoOffloading => "no_offloading",
            Policy::MbsOnly => "mbs_only",
            Policy::HapsMbs => "haps_mbs",
            Policy::Exhaustive => "exhaustive",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_offloading" => Ok(Policy::NoOffloading),
            "mbs_only" => Ok(Policy::MbsOnly),
            "haps_mbs" => Ok(Policy::HapsMbs),
            "exhaustive" => Ok(Policy::Exhaustive),
            other => Err(format!(
                "unknown policy `{other}` (expected no_offloading, mbs_only, haps_mbs or exhaustive)"
            )),
        }
    }
}

/// Which offloading phase the greedy policy runs first. The two phases load
/// disjoint targets, so this is an experiment knob, not a tuning knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseOrder {
    #[default]
    HapsFirst,
    MbsFirst,
}

/// Loads and on/off flags of the whole network for one slot.
///
/// The HAPS and MBS are always on; only the SBSs carry a state flag.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLoadState {
    pub lambda_haps: LoadFactor,
    pub lambda_mbs: LoadFactor,
    pub lambda_sbs: Vec<LoadFactor>,
    pub delta: Vec<bool>,
}

impl NetworkLoadState {
    /// All-on state straight from a traffic snapshot.
    pub fn from_snapshot(
        snapshot: &TrafficSnapshot,
        topology: &Topology,
    ) -> Result<Self, PolicyError> {
        let lambda_sbs = snapshot
            .tau_sbs_gbps
            .iter()
            .zip(&topology.sbs)
            .map(|(tau, sbs)| load_factor(*tau, sbs.capacity_gbps))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NetworkLoadState {
            lambda_haps: load_factor(snapshot.tau_haps_gbps, topology.haps.capacity_gbps)?,
            lambda_mbs: load_factor(snapshot.tau_mbs_gbps, topology.mbs.capacity_gbps)?,
            delta: vec![true; lambda_sbs.len()],
            lambda_sbs,
        })
    }

    pub fn active_sbs_count(&self) -> usize {
        self.delta.iter().filter(|&&on| on).count()
    }

    /// Traffic carried across the network in Gbps.
    pub fn served_gbps(&self, topology: &Topology) -> f64 {
        self.lambda_haps.get() * topology.haps.capacity_gbps
            + self.lambda_mbs.get() * topology.mbs.capacity_gbps
            + self
                .lambda_sbs
                .iter()
                .zip(&topology.sbs)
                .map(|(lambda, sbs)| lambda.get() * sbs.capacity_gbps)
                .sum::<f64>()
    }

    /// True iff no capacity is exceeded and every off SBS carries no load.
    pub fn is_feasible(&self) -> bool {
        self.lambda_haps.get() <= 1.0
            && self.lambda_mbs.get() <= 1.0
            && self
                .lambda_sbs
                .iter()
                .all(|lambda| (0.0..=1.0).contains(&lambda.get()))
            && self
                .delta
                .iter()
                .zip(&self.lambda_sbs)
                .all(|(&on, lambda)| on || lambda.is_zero())
    }
}

/// One policy's answer for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchDecision {
    pub policy: Policy,
    pub state: NetworkLoadState,
    pub total_power_w: f64,
    pub feasible: bool,
}

/// Moves one SBS's load onto its target and puts it to sleep.
pub fn apply_switch_off(
    state: &NetworkLoadState,
    sbs_index: usize,
    target: OffloadTarget,
    phi: RelativeCapacity,
) -> Result<NetworkLoadState, PolicyError> {
    if !state.delta[sbs_index] {
        return Err(PolicyError::AlreadyOff { id: sbs_index });
    }
    let moved = phi.get() * state.lambda_sbs[sbs_index].get();
    let mut next = state.clone();
    let raised = match target {
        OffloadTarget::Haps => &mut next.lambda_haps,
        OffloadTarget::Mbs => &mut next.lambda_mbs,
    };
    let new_load = raised.get() + moved;
    *raised = LoadFactor::new(new_load).map_err(|_| PolicyError::TargetOverCapacity {
        id: sbs_index,
        target,
        load: new_load,
    })?;
    next.lambda_sbs[sbs_index] = LoadFactor::ZERO;
    next.delta[sbs_index] = false;
    Ok(next)
}

/// Wakes one SBS up, pulling its traffic back off the target.
pub fn apply_switch_on(
    state: &NetworkLoadState,
    sbs_index: usize,
    tau_gbps: f64,
    sbs_capacity_gbps: f64,
    target: OffloadTarget,
    phi: RelativeCapacity,
) -> Result<NetworkLoadState, PolicyError> {
    if state.delta[sbs_index] {
        return Err(PolicyError::AlreadyOn { id: sbs_index });
    }
    let restored = load_factor(tau_gbps, sbs_capacity_gbps)?;
    let mut next = state.clone();
    let lowered = match target {
        OffloadTarget::Haps => &mut next.lambda_haps,
        OffloadTarget::Mbs => &mut next.lambda_mbs,
    };
    let mut new_load = lowered.get() - phi.get() * restored.get();
    // Tolerate sub-1e-12 float dust from the inverse of a switch-off.
    if new_load < 0.0 && new_load > -1e-12 {
        new_load = 0.0;
    }
    *lowered = LoadFactor::new(new_load).map_err(|_| PolicyError::TargetLoadNegative {
        id: sbs_index,
        target,
        load: new_load,
    })?;
    next.lambda_sbs[sbs_index] = restored;
    next.delta[sbs_index] = true;
    Ok(next)
}

/// Per-slot working set shared by every policy: base loads, effective
/// targets, conversion ratios, thresholds, and the canonical candidate
/// order (ascending load, ties by id).
struct TransferPlan<'t> {
    topology: &'t Topology,
    base: NetworkLoadState,
    targets: Vec<OffloadTarget>,
    phis: Vec<RelativeCapacity>,
    thresholds: Vec<f64>,
    order: Vec<usize>,
}

impl<'t> TransferPlan<'t> {
    fn new(
        topology: &'t Topology,
        snapshot: &TrafficSnapshot,
        target_override: Option<OffloadTarget>,
    ) -> Result<Self, PolicyError> {
        let base = NetworkLoadState::from_snapshot(snapshot, topology)?;
        let s = topology.sbs_count();
        let mut targets = Vec::with_capacity(s);
        let mut phis = Vec::with_capacity(s);
        let mut thresholds = Vec::with_capacity(s);
        for index in 0..s {
            let target = target_override.unwrap_or(topology.sbs[index].offload_target);
            let phi = topology.phi_to(index, target)?;
            let rho = offload_threshold(
                &topology.sbs[index].profile,
                &topology.target_station(target).profile,
                phi,
            )?;
            targets.push(target);
            phis.push(phi);
            thresholds.push(rho);
        }
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&a, &b| {
            base.lambda_sbs[a]
                .get()
                .total_cmp(&base.lambda_sbs[b].get())
                .then(a.cmp(&b))
        });
        Ok(TransferPlan {
            topology,
            base,
            targets,
            phis,
            thresholds,
            order,
        })
    }

    /// Target loads after switching off exactly the flagged SBSs, folded in
    /// canonical order. `None` when a target would exceed capacity.
    fn fold_targets(&self, off: impl Fn(usize) -> bool) -> Option<(f64, f64)> {
        let mut lambda_haps = self.base.lambda_haps.get();
        let mut lambda_mbs = self.base.lambda_mbs.get();
        for &index in &self.order {
            if off(index) {
                let moved = self.phis[index].get() * self.base.lambda_sbs[index].get();
                match self.targets[index] {
                    OffloadTarget::Haps => lambda_haps += moved,
                    OffloadTarget::Mbs => lambda_mbs += moved,
                }
            }
        }
        if lambda_haps > 1.0 || lambda_mbs > 1.0 {
            None
        } else {
            Some((lambda_haps, lambda_mbs))
        }
    }

    /// Network power of an OFF-set, using the exact arithmetic the decision
    /// builder uses. `None` when infeasible.
    fn power_of(&self, off: impl Fn(usize) -> bool + Copy) -> Option<f64> {
        let (lambda_haps, lambda_mbs) = self.fold_targets(off)?;
        let mut grid = self
            .topology
            .mbs
            .profile
            .active_power_w(LoadFactor::new(lambda_mbs).ok()?);
        for (index, sbs) in self.topology.sbs.iter().enumerate() {
            grid += if off(index) {
                sbs.profile.sleep_power_w
            } else {
                sbs.profile.active_power_w(self.base.lambda_sbs[index])
            };
        }
        Some(
            self.topology
                .haps
                .profile
                .active_power_w(LoadFactor::new(lambda_haps).ok()?)
                + grid,
        )
    }

    /// Materializes the decision for an OFF-set.
    fn decision(&self, policy: Policy, off: &[bool]) -> Result<SwitchDecision, PolicyError> {
        let mut state = self.base.clone();
        for &index in &self.order {
            if off[index] {
                state = apply_switch_off(&state, index, self.targets[index], self.phis[index])?;
            }
        }
        let total_power_w = power::network_power(
            (&self.topology.haps.profile, state.lambda_haps),
            (&self.topology.mbs.profile, state.lambda_mbs),
            self.topology
                .sbs
                .iter()
                .zip(state.lambda_sbs.iter().zip(&state.delta))
                .map(|(sbs, (&lambda, &on))| (&sbs.profile, lambda, on)),
        )?;
        let feasible = state.is_feasible();
        Ok(SwitchDecision {
            policy,
            state,
            total_power_w,
            feasible,
        })
    }

    /// One greedy pass over the candidates whose effective target is
    /// `target`: switch off while the load sits at or below the threshold
    /// and the target keeps headroom, and stop — not skip — at the first
    /// failure.
    fn greedy_phase(&self, target: OffloadTarget, off: &mut [bool]) {
        let mut target_load = match target {
            OffloadTarget::Haps => self.base.lambda_haps.get(),
            OffloadTarget::Mbs => self.base.lambda_mbs.get(),
        };
        for &index in &self.order {
            if self.targets[index] != target {
                continue;
            }
            let lambda = self.base.lambda_sbs[index].get();
            if lambda > self.thresholds[index] {
                break;
            }
            let raised = target_load + self.phis[index].get() * lambda;
            if raised > 1.0 {
                break;
            }
            target_load = raised;
            off[index] = true;
        }
    }
}

/// Benchmark: every SBS stays on; loads are the snapshot's own.
pub fn policy_no_offloading(
    snapshot: &TrafficSnapshot,
    topology: &Topology,
) -> Result<SwitchDecision, PolicyError> {
    let plan = TransferPlan::new(topology, snapshot, None)?;
    let off = vec![false; topology.sbs_count()];
    plan.decision(Policy::NoOffloading, &off)
}

/// Benchmark: every SBS is treated as MBS-offloadable (no HAPS help), then
/// greedily switched off in ascending load order while the MBS has room.
pub fn policy_mbs_only(
    snapshot: &TrafficSnapshot,
    topology: &Topology,
) -> Result<SwitchDecision, PolicyError> {
    let plan = TransferPlan::new(topology, snapshot, Some(OffloadTarget::Mbs))?;
    let mut off = vec![false; topology.sbs_count()];
    plan.greedy_phase(OffloadTarget::Mbs, &mut off);
    plan.decision(Policy::MbsOnly, &off)
}

/// The proposed policy: one greedy pass offloading the HAPS-eligible SBSs,
/// then one pass offloading the MBS-eligible ones. No iteration.
pub fn policy_haps_mbs(
    snapshot: &TrafficSnapshot,
    topology: &Topology,
) -> Result<SwitchDecision, PolicyError> {
    policy_haps_mbs_with_order(snapshot, topology, PhaseOrder::HapsFirst)
}

/// [`policy_haps_mbs`] with an explicit phase order.
pub fn policy_haps_mbs_with_order(
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    phase_order: PhaseOrder,
) -> Result<SwitchDecision, PolicyError> {
    let plan = TransferPlan::new(topology, snapshot, None)?;
    let mut off = vec![false; topology.sbs_count()];
    let phases = match phase_order {
        PhaseOrder::HapsFirst => [OffloadTarget::Haps, OffloadTarget::Mbs],
        PhaseOrder::MbsFirst => [OffloadTarget::Mbs, OffloadTarget::Haps],
    };
    for target in phases {
        plan.greedy_phase(target, &mut off);
    }
    plan.decision(Policy::HapsMbs, &off)
}

/// Optimality oracle: enumerates all `2^s` state vectors (each SBS bound to
/// its own offload target), discards infeasible ones, and returns the
/// minimum-power vector. Ties prefer more SBSs on, then the
/// lexicographically smallest state vector.
pub fn policy_exhaustive(
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    max_s: u32,
) -> Result<SwitchDecision, PolicyError> {
    let s = topology.sbs_count();
    if s as u64 > u64::from(max_s) || s >= 63 {
        return Err(PolicyError::ExhaustiveGuard { s, max_s });
    }
    let plan = TransferPlan::new(topology, snapshot, None)?;

    let mut best: Option<(f64, u64, u32)> = None; // (power, off_mask, on_count)
    for mask in 0u64..(1u64 << s) {
        let off = |index: usize| mask & (1 << index) != 0;
        let Some(power) = plan.power_of(off) else {
            continue;
        };
        let on_count = s as u32 - mask.count_ones();
        let better = match &best {
            None => true,
            Some((best_power, best_mask, best_on)) => {
                if power != *best_power {
                    power < *best_power
                } else if on_count != *best_on {
                    on_count > *best_on
                } else {
                    lex_smaller_delta(mask, *best_mask, s)
                }
            }
        };
        if better {
            best = Some((power, mask, on_count));
        }
    }

    // The all-on vector is always feasible, so a best mask exists.
    let (_, mask, _) = best.expect("all-on state vector is always feasible");
    let off: Vec<bool> = (0..s).map(|index| mask & (1 << index) != 0).collect();
    plan.decision(Policy::Exhaustive, &off)
}

/// Compares two OFF-masks by the lexicographic order of their state vectors
/// (`delta_i = !off_i`, read from SBS 0 upward).
fn lex_smaller_delta(candidate_off: u64, best_off: u64, s: usize) -> bool {
    for index in 0..s {
        let bit = 1u64 << index;
        let candidate_on = candidate_off & bit == 0;
        let best_on = best_off & bit == 0;
        if candidate_on != best_on {
            return best_on;
        }
    }
    false
}

/// Dispatches one slot to the named policy.
pub fn evaluate_policy(
    policy: Policy,
    snapshot: &TrafficSnapshot,
    topology: &Topology,
    es_max_s: u32,
    phase_order: PhaseOrder,
) -> Result<SwitchDecision, PolicyError> {
    match policy {
        Policy::NoOffloading => policy_no_offloading(snapshot, topology),
        Policy::MbsOnly => policy_mbs_only(snapshot, topology),
        Policy::HapsMbs => policy_haps_mbs_with_order(snapshot, topology, phase_order),
        Policy::Exhaustive => policy_exhaustive(snapshot, topology, es_max_s),
    }
}
