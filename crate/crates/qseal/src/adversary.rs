//! Attack models against the monitored fiber.
//!
//! Four threat archetypes, each a transformation of the window's photon
//! state and/or the active channel:
//!
//! - `InterceptResend`: measure-and-resend of the active photon. Arrival
//!   timing and rates are preserved, but cloning destroys the joint
//!   coherence, so the pair's effective visibility drops to zero.
//! - `PassiveTap`: an eavesdropping coupler that only bleeds power —
//!   extra loss on the active channel, state untouched.
//! - `CutFiber`: the active photon simply never arrives.
//! - `ClassicalSpoof`: the active photon is blocked and the attacker
//!   injects replica pulses timed to the window epochs with a Gaussian
//!   timing error. Replicas produce clicks but only accidental
//!   coincidences.
//!
//! Attacks apply only to the monitored fiber; the reference path is
//! assumed physically protected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::FiberChannel;
use crate::optics::{apply_decoherence, JointPhotonState, PairKind};

/// Errors from validating attack plans.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("tap loss {0} dB must be positive and finite")]
    TapLossInvalid(f64),
    #[error("spoof pulse rate {0} /s must be non-negative and finite")]
    SpoofRateInvalid(f64),
    #[error("spoof timing error sigma {0} ps must be non-negative and finite")]
    SpoofSigmaInvalid(f64),
    #[error("attack window range inverted: start {start} > end {end}")]
    InvertedRange { start: u64, end: u64 },
    #[error("attack plans overlap around window {window}")]
    OverlappingPlans { window: u64 },
}

/// The attack mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttackKind {
    InterceptResend,
    PassiveTap { added_loss_db: f64 },
    CutFiber,
    ClassicalSpoof {
        pulse_rate_hz: f64,
        timing_error_sigma_ps: f64,
    },
}

impl AttackKind {
    fn validate(&self) -> Result<(), AdversaryError> {
        match *self {
            AttackKind::InterceptResend | AttackKind::CutFiber => Ok(()),
            AttackKind::PassiveTap { added_loss_db } => {
                if !added_loss_db.is_finite() || added_loss_db <= 0.0 {
                    Err(AdversaryError::TapLossInvalid(added_loss_db))
                } else {
                    Ok(())
                }
            }
            AttackKind::ClassicalSpoof {
                pulse_rate_hz,
                timing_error_sigma_ps,
            } => {
                if !pulse_rate_hz.is_finite() || pulse_rate_hz < 0.0 {
                    return Err(AdversaryError::SpoofRateInvalid(pulse_rate_hz));
                }
                if !timing_error_sigma_ps.is_finite() || timing_error_sigma_ps < 0.0 {
                    return Err(AdversaryError::SpoofSigmaInvalid(timing_error_sigma_ps));
                }
                Ok(())
            }
        }
    }

    /// Whether this attack removes the genuine active photon from the
    /// fiber entirely.
    pub fn blocks_active_photon(&self) -> bool {
        matches!(self, AttackKind::CutFiber | AttackKind::ClassicalSpoof { .. })
    }
}

/// One attack, in force over the half-open window range
/// `start_window <= w < end_window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub kind: AttackKind,
    pub start_window: u64,
    pub end_window: u64,
}

impl AttackPlan {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        if self.start_window > self.end_window {
            return Err(AdversaryError::InvertedRange {
                start: self.start_window,
                end: self.end_window,
            });
        }
        self.kind.validate()
    }

    pub fn covers(&self, window_index: u64) -> bool {
        self.start_window <= window_index && window_index < self.end_window
    }
}

/// A validated, non-overlapping set of attack plans, sorted by start
/// window. At most one attack is in force at any window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttackSchedule {
    plans: Vec<AttackPlan>,
}

impl AttackSchedule {
    pub fn new(mut plans: Vec<AttackPlan>) -> Result<Self, AdversaryError> {
        for plan in &plans {
            plan.validate()?;
        }
        plans.sort_by_key(|p| (p.start_window, p.end_window));
        for pair in plans.windows(2) {
            // Half-open ranges: a plan ending exactly where the next
            // starts does not overlap.
            if pair[1].start_window < pair[0].end_window {
                return Err(AdversaryError::OverlappingPlans {
                    window: pair[1].start_window,
                });
            }
        }
        Ok(Self { plans })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn plans(&self) -> &[AttackPlan] {
        &self.plans
    }

    /// The unique plan covering `window_index`, if any.
    pub fn attack_in_force(&self, window_index: u64) -> Option<&AttackPlan> {
        // Plans are sorted and disjoint: find the last plan starting at
        // or before the window and check coverage.
        let idx = self
            .plans
            .partition_point(|p| p.start_window <= window_index);
        if idx == 0 {
            return None;
        }
        let plan = &self.plans[idx - 1];
        plan.covers(window_index).then_some(plan)
    }
}

/// Rewrite the window's photon state under an active attack.
///
/// `InterceptResend` collapses the pair's visibility to zero while
/// keeping both photons in flight (timing and rates preserved);
/// `CutFiber` and `ClassicalSpoof` remove the active-arm photon;
/// `PassiveTap` leaves the state alone (its effect is channel loss).
pub fn transform_state(kind: &AttackKind, state: JointPhotonState) -> JointPhotonState {
    match kind {
        AttackKind::InterceptResend => {
            apply_decoherence(state, 0.0).expect("factor 0 is always in range")
        }
        AttackKind::PassiveTap { .. } => state,
        AttackKind::CutFiber | AttackKind::ClassicalSpoof { .. } => match state.kind {
            PairKind::EntangledPair { .. } => JointPhotonState::reference_only(state.pump_frequency),
            PairKind::ReferenceOnly => state,
            // Light that lives only on the active fiber is removed outright.
            PairKind::ClassicalReplica => JointPhotonState::vacuum(state.pump_frequency),
            PairKind::Vacuum => state,
        },
    }
}

/// Rewrite the active channel under an attack: a tap adds its coupling
/// loss, every other kind leaves the fiber parameters unchanged.
pub fn transform_channel(kind: &AttackKind, channel: FiberChannel) -> FiberChannel {
    match kind {
        AttackKind::PassiveTap { added_loss_db } => channel
            .with_added_loss(*added_loss_db)
            .expect("validated tap loss is positive and finite"),
        _ => channel,
    }
}
