//! EARTH-style base-station power model: per-station power draw, network
//! aggregation, the switch-off power delta, and the closed-form offloading
//! thresholds.
//!
//! Units are watts and Gbps throughout; no conversion happens inside the
//! model. All functions here are pure and safe to call from any thread.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the power model and its domain types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("load factor {0} is outside [0, 1]")]
    LoadOutOfRange(f64),
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("sleep power {sleep_w} W must be below operational power {operational_w} W")]
    SleepNotBelowOperational { sleep_w: f64, operational_w: f64 },
    #[error(
        "offload threshold undefined for phi {phi}: denominator {denominator} is not positive; \
         raise the target-to-SBS capacity ratio or adjust the PA efficiencies"
    )]
    ThresholdDenominator { phi: f64, denominator: f64 },
    #[error("station {index} is asleep but carries load {load}")]
    AsleepWithLoad { index: usize, load: f64 },
}

/// Fraction of a station's capacity in use, always within `[0, 1]`.
///
/// Construction rejects anything outside that range, so downstream
/// arithmetic never sees an out-of-range load.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct LoadFactor(f64);

impl LoadFactor {
    pub const ZERO: LoadFactor = LoadFactor(0.0);
    pub const FULL: LoadFactor = LoadFactor(1.0);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&value) {
            Ok(LoadFactor(value))
        } else {
            Err(ModelError::LoadOutOfRange(value))
        }
    }

    /// Bypasses the range check; only for building deliberately invalid
    /// states in feasibility tests.
    #[cfg(test)]
    pub(crate) fn new_unchecked(value: f64) -> Self {
        LoadFactor(value)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

/// Capacity of an SBS relative to its offload target, `phi = C_i / C_k`.
///
/// Multiplying an SBS load factor by `phi` converts it onto the target's
/// load scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RelativeCapacity(f64);

impl RelativeCapacity {
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Ratio of an SBS capacity to its offload target's capacity.
pub fn relative_capacity(
    sbs_capacity_gbps: f64,
    target_capacity_gbps: f64,
) -> Result<RelativeCapacity, ModelError> {
    if !(sbs_capacity_gbps > 0.0) {
        return Err(ModelError::NonPositive {
            name: "sbs capacity",
            value: sbs_capacity_gbps,
        });
    }
    if !(target_capacity_gbps > 0.0) {
        return Err(ModelError::NonPositive {
            name: "target capacity",
            value: target_capacity_gbps,
        });
    }
    Ok(RelativeCapacity(sbs_capacity_gbps / target_capacity_gbps))
}

/// Per-class power constants of a base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    /// Power amplifier efficiency, the load-proportional slope factor.
    pub pa_efficiency: f64,
    /// Transmit power in watts.
    pub transmit_power_w: f64,
    /// Circuit power drawn whenever the station is active, loaded or not.
    pub operational_power_w: f64,
    /// Circuit power drawn while asleep.
    pub sleep_power_w: f64,
}

impl PowerProfile {
    pub fn new(
        pa_efficiency: f64,
        transmit_power_w: f64,
        operational_power_w: f64,
        sleep_power_w: f64,
    ) -> Result<Self, ModelError> {
        let profile = PowerProfile {
            pa_efficiency,
            transmit_power_w,
            operational_power_w,
            sleep_power_w,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("pa efficiency", self.pa_efficiency),
            ("transmit power", self.transmit_power_w),
            ("operational power", self.operational_power_w),
            ("sleep power", self.sleep_power_w),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        // A sleep draw at or above the operational draw would make the
        // switch-off threshold numerator non-positive.
        if self.sleep_power_w >= self.operational_power_w {
            return Err(ModelError::SleepNotBelowOperational {
                sleep_w: self.sleep_power_w,
                operational_w: self.operational_power_w,
            });
        }
        Ok(())
    }

    /// Active-mode draw at the given load: `P_O + eta * lambda * P_T`.
    pub fn active_power_w(&self, load: LoadFactor) -> f64 {
        self.operational_power_w + self.pa_efficiency * load.get() * self.transmit_power_w
    }
}

/// Power drawn by one station whose sleep state is implied by its load:
/// active draw for any positive load, sleep draw at exactly zero load.
///
/// The discontinuity at zero is intentional; an idle-but-awake station is
/// billed through [`network_power`] instead, which keys on the on/off state.
pub fn bs_power(profile: &PowerProfile, load: LoadFactor) -> f64 {
    if load.is_zero() {
        profile.sleep_power_w
    } else {
        profile.active_power_w(load)
    }
}

/// Power of everything fed from the grid: the always-on MBS at active
/// power plus each SBS by its on/off flag — active power when on, sleep
/// power when off. An off SBS still carrying load is rejected.
pub fn grid_power<'a, I>(
    mbs: (&PowerProfile, LoadFactor),
    sbs: I,
) -> Result<f64, ModelError>
where
    I: IntoIterator<Item = (&'a PowerProfile, LoadFactor, bool)>,
{
    let mut total = mbs.0.active_power_w(mbs.1);
    for (index, (profile, load, on)) in sbs.into_iter().enumerate() {
        if on {
            total += profile.active_power_w(load);
        } else {
            if !load.is_zero() {
                return Err(ModelError::AsleepWithLoad {
                    index,
                    load: load.get(),
                });
            }
            total += profile.sleep_power_w;
        }
    }
    Ok(total)
}

/// Instantaneous power of the whole network: the solar-fed HAPS — always
/// on, billed at active power even when idle — plus the grid-side sum.
///
/// Computed as exactly `haps + grid_power(...)`, so subtracting the HAPS
/// term recovers the grid power bit-for-bit.
pub fn network_power<'a, I>(
    haps: (&PowerProfile, LoadFactor),
    mbs: (&PowerProfile, LoadFactor),
    sbs: I,
) -> Result<f64, ModelError>
where
    I: IntoIterator<Item = (&'a PowerProfile, LoadFactor, bool)>,
{
    Ok(haps.0.active_power_w(haps.1) + grid_power(mbs, sbs)?)
}

/// Change in network power from switching one SBS off and moving its load,
/// scaled by `phi`, onto the target station:
///
/// `delta = eta_k * phi * lambda * P_T_k + P_S - P_O - eta * lambda * P_T`
///
/// Negative means the switch-off saves power; the root in `lambda` is the
/// offload threshold.
pub fn switch_off_delta(
    sbs_profile: &PowerProfile,
    sbs_load: LoadFactor,
    target_profile: &PowerProfile,
    phi: RelativeCapacity,
) -> f64 {
    target_profile.pa_efficiency * phi.get() * sbs_load.get() * target_profile.transmit_power_w
        + sbs_profile.sleep_power_w
        - sbs_profile.operational_power_w
        - sbs_profile.pa_efficiency * sbs_load.get() * sbs_profile.transmit_power_w
}

/// Load-factor threshold below which switching the SBS off saves power:
///
/// `rho = (P_O - P_S) / (phi * eta_k * P_T_k - eta * P_T)`
///
/// Errors when the denominator is not positive (the capacity ratio makes
/// offloading never pay). A threshold at or above 1 is clamped to 1 with a
/// logged warning: every feasible load then qualifies.
pub fn offload_threshold(
    sbs_profile: &PowerProfile,
    target_profile: &PowerProfile,
    phi: RelativeCapacity,
) -> Result<f64, ModelError> {
    let denominator = phi.get() * target_profile.pa_efficiency * target_profile.transmit_power_w
        - sbs_profile.pa_efficiency * sbs_profile.transmit_power_w;
    if denominator <= 0.0 {
        return Err(ModelError::ThresholdDenominator {
            phi: phi.get(),
            denominator,
        });
    }
    let rho = (sbs_profile.operational_power_w - sbs_profile.sleep_power_w) / denominator;
    if rho >= 1.0 {
        log::warn!(
            "offload threshold {rho:.4} >= 1 for phi {:.4}; clamping to 1 (every feasible load qualifies)",
            phi.get()
        );
        Ok(1.0)
    } else {
        Ok(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn haps() -> PowerProfile {
        PowerProfile::new(15.0, 20.0, 130.0, 75.0).unwrap()
    }

    fn mbs() -> PowerProfile {
        PowerProfile::new(4.7, 20.0, 130.0, 75.0).unwrap()
    }

    fn sbs() -> PowerProfile {
        PowerProfile::new(2.6, 6.3, 56.0, 39.0).unwrap()
    }

    fn lf(value: f64) -> LoadFactor {
        LoadFactor::new(value).unwrap()
    }

    #[test]
    fn load_factor_rejects_out_of_range() {
        assert!(LoadFactor::new(-0.001).is_err());
        assert!(LoadFactor::new(1.001).is_err());
        assert!(LoadFactor::new(f64::NAN).is_err());
        assert_eq!(LoadFactor::new(0.0).unwrap(), LoadFactor::ZERO);
        assert_eq!(LoadFactor::new(1.0).unwrap(), LoadFactor::FULL);
    }

    #[test]
    fn profile_invariants() {
        assert!(PowerProfile::new(0.0, 6.3, 56.0, 39.0).is_err());
        assert!(PowerProfile::new(2.6, 6.3, 56.0, 56.0).is_err());
        assert!(PowerProfile::new(2.6, 6.3, 56.0, 60.0).is_err());
        assert!(PowerProfile::new(2.6, -6.3, 56.0, 39.0).is_err());
    }

    #[test]
    fn bs_power_sleeps_at_zero_load() {
        assert_eq!(bs_power(&sbs(), LoadFactor::ZERO), 39.0);
    }

    #[test]
    fn bs_power_half_loaded_sbs() {
        assert_relative_eq!(bs_power(&sbs(), lf(0.5)), 64.19, max_relative = 1e-12);
    }

    #[test]
    fn bs_power_fully_loaded_haps() {
        assert_relative_eq!(bs_power(&haps(), LoadFactor::FULL), 430.0, max_relative = 1e-12);
    }

    #[test]
    fn bs_power_monotonic_in_load() {
        let profile = sbs();
        let mut previous = bs_power(&profile, lf(0.001));
        for step in 2..=1000 {
            let current = bs_power(&profile, lf(step as f64 / 1000.0));
            assert!(current > previous, "not increasing at step {step}");
            previous = current;
        }
        // Sleep draw sits strictly below every active draw.
        assert!(bs_power(&profile, LoadFactor::ZERO) < bs_power(&profile, lf(0.001)));
    }

    #[test]
    fn network_power_idle_haps_and_mbs_stay_operational() {
        let total = network_power((&haps(), LoadFactor::ZERO), (&mbs(), LoadFactor::ZERO), []).unwrap();
        assert_eq!(total, 260.0);
    }

    #[test]
    fn network_power_counts_sleeping_sbs() {
        let profile = sbs();
        let total = network_power(
            (&haps(), LoadFactor::ZERO),
            (&mbs(), LoadFactor::ZERO),
            [(&profile, LoadFactor::ZERO, false)],
        )
        .unwrap();
        assert_eq!(total, 299.0);
    }

    #[test]
    fn network_power_idle_but_on_sbs_draw_operational_power() {
        let profile = sbs();
        for s in [1usize, 4, 9] {
            let stations = vec![(&profile, LoadFactor::ZERO, true); s];
            let total =
                network_power((&haps(), LoadFactor::ZERO), (&mbs(), LoadFactor::ZERO), stations)
                    .unwrap();
            assert_eq!(total, 260.0 + 56.0 * s as f64);
        }
    }

    #[test]
    fn network_power_rejects_sleeping_station_with_load() {
        let profile = sbs();
        let err = network_power(
            (&haps(), LoadFactor::ZERO),
            (&mbs(), LoadFactor::ZERO),
            [(&profile, lf(0.2), false)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            ModelError::AsleepWithLoad {
                index: 0,
                load: 0.2
            }
        );
    }

    #[test]
    fn switch_off_delta_saves_power_below_threshold() {
        let phi = relative_capacity(5.0, 40.0).unwrap();
        let delta = switch_off_delta(&sbs(), lf(0.5), &haps(), phi);
        assert_relative_eq!(delta, -6.44, max_relative = 1e-12);
    }

    #[test]
    fn switch_off_delta_vanishes_at_threshold() {
        let phi = relative_capacity(5.0, 40.0).unwrap();
        let rho = offload_threshold(&sbs(), &haps(), phi).unwrap();
        let delta = switch_off_delta(&sbs(), lf(rho), &haps(), phi);
        assert!(delta.abs() <= 1e-9, "delta at threshold was {delta}");
    }

    #[test]
    fn switch_off_delta_costs_power_above_threshold() {
        let phi = relative_capacity(5.0, 40.0).unwrap();
        let delta = switch_off_delta(&sbs(), lf(0.9), &haps(), phi);
        assert_relative_eq!(delta, 2.008, max_relative = 1e-12);
    }

    #[test]
    fn offload_threshold_haps_target() {
        let phi = relative_capacity(5.0, 40.0).unwrap();
        let rho = offload_threshold(&sbs(), &haps(), phi).unwrap();
        assert_relative_eq!(rho, 17.0 / 21.12, max_relative = 1e-15);
        assert!((rho - 0.80492).abs() < 1e-4);
    }

    #[test]
    fn offload_threshold_mbs_target() {
        let phi = relative_capacity(5.0, 10.0).unwrap();
        let rho = offload_threshold(&sbs(), &mbs(), phi).unwrap();
        assert_relative_eq!(rho, 17.0 / 30.62, max_relative = 1e-15);
        assert!((rho - 0.55519).abs() < 1e-4);
    }

    #[test]
    fn offload_threshold_zero_when_sleep_equals_operational_gap_closes() {
        // P_O == P_S is rejected by the profile invariant, so approach it:
        // a vanishing gap drives the threshold to zero.
        let nearly_flat = PowerProfile::new(2.6, 6.3, 56.0, 56.0 - 1e-9).unwrap();
        let phi = relative_capacity(5.0, 40.0).unwrap();
        let rho = offload_threshold(&nearly_flat, &haps(), phi).unwrap();
        assert!(rho > 0.0 && rho < 1e-9);
    }

    #[test]
    fn offload_threshold_rejects_non_positive_denominator() {
        // phi so small that the target slope cannot beat the SBS slope.
        let phi = relative_capacity(1.0, 100.0).unwrap();
        let err = offload_threshold(&sbs(), &haps(), phi).unwrap_err();
        assert!(matches!(err, ModelError::ThresholdDenominator { .. }));
    }

    #[test]
    fn offload_threshold_clamps_to_one() {
        // Huge operational/sleep gap pushes the raw threshold above 1.
        let greedy_sleeper = PowerProfile::new(2.6, 6.3, 500.0, 39.0).unwrap();
        let phi = relative_capacity(5.0, 40.0).unwrap();
        let rho = offload_threshold(&greedy_sleeper, &haps(), phi).unwrap();
        assert_eq!(rho, 1.0);
    }

    #[test]
    fn relative_capacity_table_values() {
        assert_relative_eq!(relative_capacity(5.0, 40.0).unwrap().get(), 0.125);
        assert_relative_eq!(relative_capacity(5.0, 10.0).unwrap().get(), 0.5);
        assert_relative_eq!(relative_capacity(7.5, 7.5).unwrap().get(), 1.0);
        assert!(relative_capacity(0.0, 10.0).is_err());
        assert!(relative_capacity(5.0, -1.0).is_err());
    }
}
