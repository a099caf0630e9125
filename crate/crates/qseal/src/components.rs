//! Device models for a sealed link: pair source, fibers, receivers,
//! detectors, and the detection-event record they produce.
//!
//! Each model is a small validated parameter struct plus sampling methods
//! that draw from a caller-supplied RNG. Nothing here owns randomness or
//! time; the simulator decides which windows exist and which substream
//! drives each draw, so the same physics can be sampled densely or
//! sparsely with identical statistics.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::JointPhotonState;

/// Hard cap on the source brightness. Above this, multi-pair emission in
/// one window stops being negligible and the at-most-one-pair emission
/// model (and the accidental-coincidence budget built on it) breaks down.
pub const MAX_MEAN_PAIRS_PER_WINDOW: f64 = 0.2;

/// Errors from constructing or sampling device models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComponentError {
    #[error("mean pairs per window {0} out of range (0, {MAX_MEAN_PAIRS_PER_WINDOW}]")]
    MeanPairsOutOfRange(f64),
    #[error("mean photons per pulse {0} out of range (0, 1)")]
    MeanPhotonsOutOfRange(f64),
    #[error("source visibility {0} not in [0, 1]")]
    VisibilityOutOfRange(f64),
    #[error("pump frequency {0} must be positive and finite")]
    PumpFrequencyInvalid(f64),
    #[error("fiber loss {0} dB must be non-negative and finite")]
    LossInvalid(f64),
    #[error("propagation delay {0} ps must be non-negative")]
    DelayInvalid(i64),
    #[error("decoherence factor {0} not in [0, 1]")]
    DecoherenceOutOfRange(f64),
    #[error("receiver delay imbalance {0} ps must be positive")]
    ImbalanceInvalid(i64),
    #[error("phase {0} mrad outside [0, {TAU_MRAD})")]
    PhaseOutOfRange(i32),
    #[error("detector efficiency {0} out of range (0, 1]")]
    EfficiencyOutOfRange(f64),
    #[error("dark count rate {0} /s must be non-negative and finite")]
    DarkRateInvalid(f64),
    #[error("timing jitter sigma {0} ps must be non-negative and finite")]
    JitterInvalid(f64),
    #[error("phase set is empty")]
    EmptyPhaseSet,
}

/// Spontaneous parametric down-conversion pair source.
///
/// Pumped continuously; per analysis window it emits at most one
/// entangled pair, with probability equal to the configured mean. The
/// brightness cap keeps the neglected multi-pair tail below half a
/// percent of emissions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpdcSource {
    mean_pairs_per_window: f64,
    source_visibility: f64,
    pump_frequency: f64,
}

impl SpdcSource {
    pub fn new(
        mean_pairs_per_window: f64,
        source_visibility: f64,
        pump_frequency: f64,
    ) -> Result<Self, ComponentError> {
        if !mean_pairs_per_window.is_finite()
            || mean_pairs_per_window <= 0.0
            || mean_pairs_per_window > MAX_MEAN_PAIRS_PER_WINDOW
        {
            return Err(ComponentError::MeanPairsOutOfRange(mean_pairs_per_window));
        }
        if !(0.0..=1.0).contains(&source_visibility) {
            return Err(ComponentError::VisibilityOutOfRange(source_visibility));
        }
        if !pump_frequency.is_finite() || pump_frequency <= 0.0 {
            return Err(ComponentError::PumpFrequencyInvalid(pump_frequency));
        }
        Ok(Self {
            mean_pairs_per_window,
            source_visibility,
            pump_frequency,
        })
    }

    pub fn mean_pairs_per_window(&self) -> f64 {
        self.mean_pairs_per_window
    }

    pub fn source_visibility(&self) -> f64 {
        self.source_visibility
    }

    pub fn pump_frequency(&self) -> f64 {
        self.pump_frequency
    }

    /// Sample one window's emission: an entangled pair with probability
    /// `mean_pairs_per_window`, vacuum otherwise.
    pub fn emit_window<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<JointPhotonState> {
        if rng.random_bool(self.mean_pairs_per_window) {
            Some(
                JointPhotonState::entangled(self.source_visibility, self.pump_frequency)
                    .expect("visibility validated at construction"),
            )
        } else {
            None
        }
    }
}

/// Attenuated laser source emitting phase-randomized weak coherent
/// pulses. Not part of the sealed-link pipeline (its light carries no
/// joint coherence to certify), but useful as a classical baseline: its
/// photon-number statistics are exactly what a replica attack injects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakPulseSource {
    mean_photons_per_pulse: f64,
}

impl WeakPulseSource {
    /// Mean photon number must lie in `(0, 1)`: above one photon per
    /// pulse the "weak" single-photon approximation is meaningless.
    pub fn new(mean_photons_per_pulse: f64) -> Result<Self, ComponentError> {
        if !mean_photons_per_pulse.is_finite()
            || mean_photons_per_pulse <= 0.0
            || mean_photons_per_pulse >= 1.0
        {
            return Err(ComponentError::MeanPhotonsOutOfRange(mean_photons_per_pulse));
        }
        Ok(Self {
            mean_photons_per_pulse,
        })
    }

    pub fn mean_photons_per_pulse(&self) -> f64 {
        self.mean_photons_per_pulse
    }

    /// Sample the photon number of one pulse (Poissonian, as for any
    /// coherent state).
    pub fn emit_pulse<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let poisson =
            Poisson::new(self.mean_photons_per_pulse).expect("mean validated at construction");
        poisson.sample(rng) as u32
    }
}

/// Passive fiber span with flat loss, fixed propagation delay, and a
/// multiplicative penalty on pair visibility (dispersion etc.).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberChannel {
    loss_db: f64,
    propagation_delay_ps: i64,
    decoherence_factor: f64,
}

impl FiberChannel {
    pub fn new(
        loss_db: f64,
        propagation_delay_ps: i64,
        decoherence_factor: f64,
    ) -> Result<Self, ComponentError> {
        if !loss_db.is_finite() || loss_db < 0.0 {
            return Err(ComponentError::LossInvalid(loss_db));
        }
        if propagation_delay_ps < 0 {
            return Err(ComponentError::DelayInvalid(propagation_delay_ps));
        }
        if !(0.0..=1.0).contains(&decoherence_factor) {
            return Err(ComponentError::DecoherenceOutOfRange(decoherence_factor));
        }
        Ok(Self {
            loss_db,
            propagation_delay_ps,
            decoherence_factor,
        })
    }

    pub fn loss_db(&self) -> f64 {
        self.loss_db
    }

    pub fn propagation_delay_ps(&self) -> i64 {
        self.propagation_delay_ps
    }

    pub fn decoherence_factor(&self) -> f64 {
        self.decoherence_factor
    }

    /// Power transmission `10^(-loss_db / 10)`.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }

    /// Return a copy with `extra_db` of added loss (tap coupling, bend).
    pub fn with_added_loss(&self, extra_db: f64) -> Result<Self, ComponentError> {
        Self::new(
            self.loss_db + extra_db,
            self.propagation_delay_ps,
            self.decoherence_factor,
        )
    }

    /// Sample whether one photon survives the span.
    pub fn survives<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random_bool(self.transmission())
    }
}

/// One full turn in integer milliradians (`round(2000*pi)`). Phases are
/// carried as integer mrad end to end so that log round-trips and
/// phase-sum classification are exact; the ≤ 0.5 mrad quantization error
/// is far below any statistical tolerance in this crate.
pub const TAU_MRAD: i32 = 6283;

/// Convert radians to canonical integer milliradians in `[0, TAU_MRAD)`.
pub fn rad_to_mrad(rad: f64) -> i32 {
    ((rad * 1000.0).round() as i64).rem_euclid(i64::from(TAU_MRAD)) as i32
}

/// Convert integer milliradians back to radians.
pub fn mrad_to_rad(mrad: i32) -> f64 {
    f64::from(mrad) / 1000.0
}

/// Unbalanced Mach-Zehnder receiver. The long arm exceeds the short arm
/// by `delay_imbalance_ps`, which sets the spacing of the coincidence
/// peaks; the long arm carries a phase modulator switched once per window
/// to a value drawn from `phase_set_mrad`. Clicks are registered by the
/// attached detector on one monitored output port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MziReceiver {
    delay_imbalance_ps: i64,
    phase_set_mrad: Vec<i32>,
    detector: DetectorModel,
}

impl MziReceiver {
    pub fn new(
        delay_imbalance_ps: i64,
        phase_set_mrad: Vec<i32>,
        detector: DetectorModel,
    ) -> Result<Self, ComponentError> {
        if delay_imbalance_ps <= 0 {
            return Err(ComponentError::ImbalanceInvalid(delay_imbalance_ps));
        }
        if phase_set_mrad.is_empty() {
            return Err(ComponentError::EmptyPhaseSet);
        }
        for &p in &phase_set_mrad {
            if !(0..TAU_MRAD).contains(&p) {
                return Err(ComponentError::PhaseOutOfRange(p));
            }
        }
        Ok(Self {
            delay_imbalance_ps,
            phase_set_mrad,
            detector,
        })
    }

    pub fn delay_imbalance_ps(&self) -> i64 {
        self.delay_imbalance_ps
    }

    pub fn phase_set_mrad(&self) -> &[i32] {
        &self.phase_set_mrad
    }

    pub fn detector(&self) -> &DetectorModel {
        &self.detector
    }

    /// Draw this window's modulator setting.
    pub fn draw_phase<R: Rng + ?Sized>(&self, rng: &mut R) -> i32 {
        draw_phase(&self.phase_set_mrad, rng).expect("phase set validated non-empty")
    }
}

/// Single-photon detector: quantum efficiency, dark counts, Gaussian
/// timing jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    efficiency: f64,
    dark_count_rate_hz: f64,
    jitter_sigma_ps: f64,
}

impl DetectorModel {
    pub fn new(
        efficiency: f64,
        dark_count_rate_hz: f64,
        jitter_sigma_ps: f64,
    ) -> Result<Self, ComponentError> {
        if !efficiency.is_finite() || efficiency <= 0.0 || efficiency > 1.0 {
            return Err(ComponentError::EfficiencyOutOfRange(efficiency));
        }
        if !dark_count_rate_hz.is_finite() || dark_count_rate_hz < 0.0 {
            return Err(ComponentError::DarkRateInvalid(dark_count_rate_hz));
        }
        if !jitter_sigma_ps.is_finite() || jitter_sigma_ps < 0.0 {
            return Err(ComponentError::JitterInvalid(jitter_sigma_ps));
        }
        Ok(Self {
            efficiency,
            dark_count_rate_hz,
            jitter_sigma_ps,
        })
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_count_rate_hz(&self) -> f64 {
        self.dark_count_rate_hz
    }

    pub fn jitter_sigma_ps(&self) -> f64 {
        self.jitter_sigma_ps
    }

    /// Sample whether an arriving photon registers.
    pub fn registers<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random_bool(self.efficiency)
    }

    /// Expected dark counts in a span of `duration_ps` picoseconds.
    pub fn expected_dark_counts(&self, duration_ps: i64) -> f64 {
        self.dark_count_rate_hz * duration_ps.max(0) as f64 * 1e-12
    }

    /// Sample a timing-jitter offset in integer picoseconds.
    pub fn sample_jitter_ps<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        if self.jitter_sigma_ps == 0.0 {
            return 0;
        }
        let normal = Normal::new(0.0, self.jitter_sigma_ps).expect("sigma validated");
        normal.sample(rng).round() as i64
    }
}

/// Which end of the sealed link registered the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Receiver {
    /// Monitored fiber under seal.
    Active,
    /// Protected reference path.
    Reference,
}

impl Receiver {
    pub fn label(&self) -> &'static str {
        match self {
            Receiver::Active => "A",
            Receiver::Reference => "R",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "A" => Some(Receiver::Active),
            "R" => Some(Receiver::Reference),
            _ => None,
        }
    }
}

/// What physically caused a click. Carried through the pipeline for
/// diagnostics; the analytics never reads it (a real receiver cannot).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventOrigin {
    /// Photon from the pair source.
    Photon,
    /// Detector dark count.
    DarkCount,
    /// Attacker-injected replica light.
    Spoof,
}

impl EventOrigin {
    pub fn label(&self) -> &'static str {
        match self {
            EventOrigin::Photon => "photon",
            EventOrigin::DarkCount => "dark",
            EventOrigin::Spoof => "spoof",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "photon" => Some(EventOrigin::Photon),
            "dark" => Some(EventOrigin::DarkCount),
            "spoof" => Some(EventOrigin::Spoof),
            _ => None,
        }
    }
}

/// One detector click. Times are absolute integer picoseconds from the
/// start of the run; the phase is the local modulator setting for the
/// event's window in integer milliradians. Integer fields end to end make
/// log round-trips lossless: analytics re-run from a parsed log must
/// reproduce the original report exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub window_index: u64,
    pub receiver: Receiver,
    pub time_tag_ps: i64,
    pub phase_mrad: i32,
    pub origin: EventOrigin,
}

impl DetectionEvent {
    /// Canonical ordering for logs: by window, then receiver (active
    /// first), then time tag, then phase.
    pub fn sort_key(&self) -> (u64, Receiver, i64, i32) {
        (self.window_index, self.receiver, self.time_tag_ps, self.phase_mrad)
    }
}

/// Draw one modulator setting uniformly from the configured phase set
/// (values in integer milliradians).
pub fn draw_phase<R: Rng + ?Sized>(set: &[i32], rng: &mut R) -> Result<i32, ComponentError> {
    if set.is_empty() {
        return Err(ComponentError::EmptyPhaseSet);
    }
    Ok(set[rng.random_range(0..set.len())])
}
