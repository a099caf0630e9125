//! Interference statistics for the entangled-pair seal.
//!
//! Pure, deterministic probability math that everything else samples from:
//! single-qubit measurement statistics and the two-photon interference of a
//! pair of unbalanced Mach-Zehnder receivers fed by a frequency-entangled
//! source. The pair state is parameterized by a single visibility `V`; all
//! observables used by the seal (coincidence modulation, peak structure,
//! attack-induced collapse to `V = 0`) are functions of it.
//!
//! Conventions:
//! - The modulation argument is the phase sum `phi = phi_a + phi_b` of the
//!   two long-path modulators. Fixed interferometer offsets are taken to be
//!   calibrated away.
//! - Each receiver monitors one output port of its recombining beam
//!   splitter; the other port is a flat factor-of-two amplitude loss.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the probability-model operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("angle out of range: {name} = {value} not in {range}")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("operation requires an entangled pair, got {kind}")]
    UnsupportedState { kind: &'static str },
    #[error("decoherence factor {0} not in [0, 1]")]
    FactorOutOfRange(f64),
    #[error("visibility {0} not in [0, 1]")]
    VisibilityOutOfRange(f64),
    #[error("fringe visibility undefined: both counts are zero")]
    UndefinedVisibility,
    #[error("fringe counts out of order: c_max = {c_max} < c_min = {c_min}")]
    ArgumentOrder { c_max: f64, c_min: f64 },
    #[error("count must be finite and non-negative, got {0}")]
    NegativeCount(f64),
}

/// Orientation of a single qubit on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitAngles {
    theta: f64,
    phi: f64,
}

impl QubitAngles {
    /// `theta` must lie in `[0, pi]`, `phi` in `[0, 2*pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self, OpticsError> {
        if !(0.0..=PI).contains(&theta) {
            return Err(OpticsError::AngleOutOfRange {
                name: "theta",
                value: theta,
                range: "[0, pi]",
            });
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(OpticsError::AngleOutOfRange {
                name: "phi",
                value: phi,
                range: "[0, 2*pi)",
            });
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Polar-basis measurement probabilities `(p0, p1)` for a qubit with
/// amplitudes `cos(theta)` and `sin(theta)`.
///
/// The azimuthal angle never enters: it only rotates the superposition
/// phase, which a polar-basis detector cannot see.
pub fn qubit_measure_probs(angles: &QubitAngles) -> (f64, f64) {
    let c = angles.theta.cos();
    let s = angles.theta.sin();
    (c * c, s * s)
}

/// What one emission window carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairKind {
    /// Frequency-entangled pair with the given interference visibility.
    EntangledPair { source_visibility: f64 },
    /// Only the protected reference photon remains; its twin was removed
    /// from the monitored fiber (cut, or swallowed by a spoofing tap).
    ReferenceOnly,
    /// Classical replica light injected by an attacker; interferes with
    /// nothing, so its joint statistics are those of `V = 0`.
    ClassicalReplica,
    /// Nothing emitted this window.
    Vacuum,
}

impl PairKind {
    fn name(&self) -> &'static str {
        match self {
            PairKind::EntangledPair { .. } => "entangled pair",
            PairKind::ReferenceOnly => "reference-only",
            PairKind::ClassicalReplica => "classical replica",
            PairKind::Vacuum => "vacuum",
        }
    }
}

/// The two-photon state of one emission window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPhotonState {
    pub kind: PairKind,
    /// Pump angular frequency in rad/s. Descriptive metadata; the signal
    /// and idler frequencies sum to it but no implemented statistic
    /// depends on the value.
    pub pump_frequency: f64,
}

impl JointPhotonState {
    pub fn entangled(source_visibility: f64, pump_frequency: f64) -> Result<Self, OpticsError> {
        if !(0.0..=1.0).contains(&source_visibility) {
            return Err(OpticsError::VisibilityOutOfRange(source_visibility));
        }
        Ok(Self {
            kind: PairKind::EntangledPair { source_visibility },
            pump_frequency,
        })
    }

    pub fn vacuum(pump_frequency: f64) -> Self {
        Self {
            kind: PairKind::Vacuum,
            pump_frequency,
        }
    }

    pub fn reference_only(pump_frequency: f64) -> Self {
        Self {
            kind: PairKind::ReferenceOnly,
            pump_frequency,
        }
    }

    pub fn classical_replica(pump_frequency: f64) -> Self {
        Self {
            kind: PairKind::ClassicalReplica,
            pump_frequency,
        }
    }

    pub fn visibility(&self) -> Option<f64> {
        match self.kind {
            PairKind::EntangledPair { source_visibility } => Some(source_visibility),
            _ => None,
        }
    }
}

/// Long-path modulator settings in force at the two receivers for one
/// window: `phi_a` at the active receiver, `phi_b` at the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub phi_a: f64,
    pub phi_b: f64,
}

impl PhasePair {
    pub fn new(phi_a: f64, phi_b: f64) -> Self {
        Self { phi_a, phi_b }
    }

    /// The modulation argument `phi_a + phi_b`, reduced mod `2*pi`.
    pub fn sum(&self) -> f64 {
        (self.phi_a + self.phi_b).rem_euclid(TAU)
    }
}

/// Which interferometer path a detected photon took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathPair {
    ShortShort,
    ShortLong,
    LongShort,
    LongLong,
}

impl PathPair {
    pub const ALL: [PathPair; 4] = [
        PathPair::ShortShort,
        PathPair::ShortLong,
        PathPair::LongShort,
        PathPair::LongLong,
    ];
}

/// Joint path distribution over `{SS, SL, LS, LL}`, conditional on both
/// photons producing clicks at the monitored detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOutcomeDistribution {
    p_short_short: f64,
    p_short_long: f64,
    p_long_short: f64,
    p_long_long: f64,
}

impl JointOutcomeDistribution {
    pub fn probability(&self, outcome: PathPair) -> f64 {
        match outcome {
            PathPair::ShortShort => self.p_short_short,
            PathPair::ShortLong => self.p_short_long,
            PathPair::LongShort => self.p_long_short,
            PathPair::LongLong => self.p_long_long,
        }
    }

    pub fn probabilities(&self) -> [f64; 4] {
        [
            self.p_short_short,
            self.p_short_long,
            self.p_long_short,
            self.p_long_long,
        ]
    }

    /// Draw one path combination.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathPair {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for outcome in PathPair::ALL {
            acc += self.probability(outcome);
            if u < acc {
                return outcome;
            }
        }
        PathPair::LongLong
    }
}

/// Exit of one photon from its receiver: toward the monitored detector via
/// the short or long path, or out the unmonitored port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortOutcome {
    ShortDetected,
    LongDetected,
    Unmonitored,
}

/// Marginal exit probabilities for a single photon: each path reaches the
/// monitored detector with 1/4, the unmonitored port takes 1/2. Independent
/// of both phases and of the source visibility, which is what makes the
/// singles rates blind to an intercept-resend attack.
pub const SINGLE_PHOTON_MARGINAL: [(PortOutcome, f64); 3] = [
    (PortOutcome::ShortDetected, 0.25),
    (PortOutcome::LongDetected, 0.25),
    (PortOutcome::Unmonitored, 0.5),
];

/// Draw the exit of a lone photon (its partner lost or absent).
pub fn sample_single_port<R: Rng + ?Sized>(rng: &mut R) -> PortOutcome {
    let u: f64 = rng.random();
    if u < 0.25 {
        PortOutcome::ShortDetected
    } else if u < 0.5 {
        PortOutcome::LongDetected
    } else {
        PortOutcome::Unmonitored
    }
}

/// Full joint exit distribution for a pair over the nine
/// `(active port, reference port)` combinations.
///
/// The monitored-monitored cells carry the interference: `SS` and `LL` are
/// indistinguishable in time and share the modulated weight
/// `(1/8)(1 + V cos phi)` equally, while `SL`/`LS` sit at a flat `1/16`.
/// The remaining cells are fixed by the flat single-photon marginals, which
/// puts the complementary (anti-fringe) modulation on the unmonitored
/// ports. All cells are non-negative for `V` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortPathDistribution {
    modulation: f64, // V * cos(phi)
}

impl PortPathDistribution {
    pub fn new(state: &JointPhotonState, phases: &PhasePair) -> Result<Self, OpticsError> {
        let modulation = match state.kind {
            PairKind::EntangledPair { source_visibility } => {
                source_visibility * phases.sum().cos()
            }
            // Replica light has no joint coherence: flat statistics.
            PairKind::ClassicalReplica => 0.0,
            PairKind::Vacuum | PairKind::ReferenceOnly => {
                return Err(OpticsError::UnsupportedState {
                    kind: state.kind.name(),
                })
            }
        };
        Ok(Self { modulation })
    }

    /// Probability of each joint exit, ordered
    /// `(S,S) (S,L) (S,X) (L,S) (L,L) (L,X) (X,S) (X,L) (X,X)`
    /// with `X` the unmonitored port.
    pub fn cells(&self) -> [((PortOutcome, PortOutcome), f64); 9] {
        use PortOutcome::*;
        let m = self.modulation;
        let interfering = (1.0 + m) / 16.0;
        let mixed = 1.0 / 16.0;
        let one_out = 0.125 - m / 16.0;
        let both_out = 0.25 + m / 8.0;
        [
            ((ShortDetected, ShortDetected), interfering),
            ((ShortDetected, LongDetected), mixed),
            ((ShortDetected, Unmonitored), one_out),
            ((LongDetected, ShortDetected), mixed),
            ((LongDetected, LongDetected), interfering),
            ((LongDetected, Unmonitored), one_out),
            ((Unmonitored, ShortDetected), one_out),
            ((Unmonitored, LongDetected), one_out),
            ((Unmonitored, Unmonitored), both_out),
        ]
    }

    /// Draw one joint exit.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (PortOutcome, PortOutcome) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let cells = self.cells();
        for (outcome, p) in cells {
            acc += p;
            if u < acc {
                return outcome;
            }
        }
        cells[8].0
    }
}

/// Joint path distribution conditional on a coincidence (both photons
/// detected at the monitored ports).
pub fn joint_path_distribution(
    state: &JointPhotonState,
    phases: &PhasePair,
) -> Result<JointOutcomeDistribution, OpticsError> {
    match state.kind {
        PairKind::EntangledPair { .. } => {}
        _ => {
            return Err(OpticsError::UnsupportedState {
                kind: state.kind.name(),
            })
        }
    }
    let ports = PortPathDistribution::new(state, phases)?;
    let m = ports.modulation;
    // Raw detected-pair weights: SS = LL = (1/16)(1 + m), SL = LS = 1/16.
    let norm = (2.0 + m) / 8.0;
    Ok(JointOutcomeDistribution {
        p_short_short: (1.0 + m) / 16.0 / norm,
        p_short_long: 1.0 / 16.0 / norm,
        p_long_short: 1.0 / 16.0 / norm,
        p_long_long: (1.0 + m) / 16.0 / norm,
    })
}

/// Probability, per pair reaching both receivers, that both photons click
/// at the monitored detectors with the indistinguishable central-peak time
/// signature: `(1/8)(1 + V cos phi)`.
pub fn central_peak_probability(
    state: &JointPhotonState,
    phases: &PhasePair,
) -> Result<f64, OpticsError> {
    match state.kind {
        PairKind::EntangledPair { source_visibility } => {
            Ok((1.0 + source_visibility * phases.sum().cos()) / 8.0)
        }
        _ => Err(OpticsError::UnsupportedState {
            kind: state.kind.name(),
        }),
    }
}

/// Scale an entangled pair's visibility by `factor`; replica and vacuum
/// states pass through unchanged.
pub fn apply_decoherence(
    state: JointPhotonState,
    factor: f64,
) -> Result<JointPhotonState, OpticsError> {
    if !(0.0..=1.0).contains(&factor) {
        return Err(OpticsError::FactorOutOfRange(factor));
    }
    match state.kind {
        PairKind::EntangledPair { source_visibility } => Ok(JointPhotonState {
            kind: PairKind::EntangledPair {
                source_visibility: source_visibility * factor,
            },
            ..state
        }),
        _ => Ok(state),
    }
}

/// Fringe visibility `(c_max - c_min) / (c_max + c_min)`.
///
/// Counts are accepted as floats so the identity
/// `fringe_visibility(central(V, 0), central(V, pi)) = V` can be evaluated
/// on probabilities as well as on tallies.
pub fn fringe_visibility(c_max: f64, c_min: f64) -> Result<f64, OpticsError> {
    if !c_min.is_finite() || c_min < 0.0 {
        return Err(OpticsError::NegativeCount(c_min));
    }
    if !c_max.is_finite() || c_max < 0.0 {
        return Err(OpticsError::NegativeCount(c_max));
    }
    if c_min > c_max {
        return Err(OpticsError::ArgumentOrder { c_max, c_min });
    }
    if c_max + c_min == 0.0 {
        return Err(OpticsError::UndefinedVisibility);
    }
    Ok((c_max - c_min) / (c_max + c_min))
}
