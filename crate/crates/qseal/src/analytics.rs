//! From raw clicks to a seal verdict.
//!
//! The processing chain per analysis batch:
//!
//! 1. [`match_coincidences`]: pair up active/reference clicks within each
//!    window (greedy nearest in time) and classify each pair into the
//!    central or side peaks of the arrival-time-difference histogram.
//! 2. [`estimate_visibility`]: from central-peak counts grouped by the
//!    phase-sum class, estimate the fringe visibility `v = (C0 - Cpi) /
//!    (C0 + Cpi)` with a Poisson-propagated standard error.
//! 3. [`bell_threshold_test`]: compare the estimate against the classical
//!    correlation bound `1/sqrt(2)` at a configured significance.
//! 4. [`rate_monitor`]: separately compare singles/coincidence rates to a
//!    calibrated baseline, distinguishing plain loss from signal absence.
//! 5. [`update_seal_state`]: fold both verdicts into the four-state seal
//!    status with hysteresis (fail-fast into `Compromised`).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::components::{DetectionEvent, Receiver, TAU_MRAD};

/// Classical correlation bound on two-photon fringe visibility: above
/// this value the correlations cannot be produced by an intercept-resend
/// channel.
pub const CLASSICAL_VISIBILITY_BOUND: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Errors from the analytics chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("{receiver:?} events not sorted by time tag at index {index}")]
    UnsortedEvents { receiver: Receiver, index: usize },
    #[error("insufficient fringe counts: C0 + Cpi = {available} below floor {floor}")]
    InsufficientData { available: u64, floor: u64 },
    #[error("baseline rate {name} = {value} must be positive and finite")]
    BaselineRateInvalid { name: &'static str, value: f64 },
    #[error("accidental floor {0} must be non-negative and finite")]
    FloorInvalid(f64),
    #[error("rate tolerance {0} must lie in (0, 1)")]
    ToleranceInvalid(f64),
}

/// Position of a coincidence in the arrival-time-difference histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeakClass {
    /// Indistinguishable short-short / long-long: the interfering peak.
    Central,
    /// Active photon early by one path delay (active short, reference long).
    EarlySide,
    /// Active photon late by one path delay (active long, reference short).
    LateSide,
    /// Background: not consistent with any peak.
    Outside,
}

/// One matched click pair. `delta_t_ps` is active minus reference arrival
/// time after removing the fixed differential propagation delay;
/// `phase_sum_mrad` is the sum of the two windows' modulator settings,
/// reduced into `[0, TAU_MRAD)`. Both are integers, so records round-trip
/// exactly through logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    pub window_index: u64,
    pub delta_t_ps: i64,
    pub peak_class: PeakClass,
    pub phase_sum_mrad: i32,
}

/// Timing constants the matcher needs: the receivers' path delay, the
/// coincidence window, and the fixed active-minus-reference propagation
/// offset to subtract from raw tag differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoincidenceTiming {
    pub path_delay_ps: i64,
    pub coincidence_window_ps: i64,
    pub delay_offset_ps: i64,
}

/// Classify a corrected time difference against the three-peak template.
/// The setup invariant `path_delay > 3 * tau_c` makes the three intervals
/// disjoint; everything else is `Outside`.
pub fn classify_peak(delta_t_ps: i64, path_delay_ps: i64, coincidence_window_ps: i64) -> PeakClass {
    if delta_t_ps.abs() <= coincidence_window_ps {
        PeakClass::Central
    } else if (delta_t_ps + path_delay_ps).abs() <= coincidence_window_ps {
        PeakClass::EarlySide
    } else if (delta_t_ps - path_delay_ps).abs() <= coincidence_window_ps {
        PeakClass::LateSide
    } else {
        PeakClass::Outside
    }
}

fn check_sorted(events: &[DetectionEvent], receiver: Receiver) -> Result<(), AnalyticsError> {
    for (index, pair) in events.windows(2).enumerate() {
        if pair[1].time_tag_ps < pair[0].time_tag_ps
            || pair[1].window_index < pair[0].window_index
        {
            return Err(AnalyticsError::UnsortedEvents {
                receiver,
                index: index + 1,
            });
        }
    }
    Ok(())
}

/// Pair active and reference clicks window by window, greedily taking the
/// pair with the smallest corrected |delta_t| until one side runs out.
/// Each event is used at most once. Every matched pair yields a record;
/// pairs far from all peaks classify as `Outside`.
pub fn match_coincidences(
    active: &[DetectionEvent],
    reference: &[DetectionEvent],
    timing: &CoincidenceTiming,
) -> Result<Vec<CoincidenceRecord>, AnalyticsError> {
    check_sorted(active, Receiver::Active)?;
    check_sorted(reference, Receiver::Reference)?;

    let mut records = Vec::new();
    let mut ai = 0usize;
    let mut ri = 0usize;
    while ai < active.len() && ri < reference.len() {
        let window = active[ai].window_index.max(reference[ri].window_index);
        // Skip clicks from windows where the other side has nothing.
        while ai < active.len() && active[ai].window_index < window {
            ai += 1;
        }
        while ri < reference.len() && reference[ri].window_index < window {
            ri += 1;
        }
        if ai >= active.len() || ri >= reference.len() {
            break;
        }
        if active[ai].window_index != window || reference[ri].window_index != window {
            continue;
        }
        let a_end = active[ai..]
            .iter()
            .position(|e| e.window_index != window)
            .map_or(active.len(), |p| ai + p);
        let r_end = reference[ri..]
            .iter()
            .position(|e| e.window_index != window)
            .map_or(reference.len(), |p| ri + p);
        match_window(
            &active[ai..a_end],
            &reference[ri..r_end],
            timing,
            &mut records,
        );
        ai = a_end;
        ri = r_end;
    }
    Ok(records)
}

/// Greedy pairing inside one window (event counts here are tiny).
fn match_window(
    active: &[DetectionEvent],
    reference: &[DetectionEvent],
    timing: &CoincidenceTiming,
    records: &mut Vec<CoincidenceRecord>,
) {
    let mut a_used = vec![false; active.len()];
    let mut r_used = vec![false; reference.len()];
    let pairs = active.len().min(reference.len());
    for _ in 0..pairs {
        let mut best: Option<(usize, usize, i64)> = None;
        for (i, a) in active.iter().enumerate() {
            if a_used[i] {
                continue;
            }
            for (j, r) in reference.iter().enumerate() {
                if r_used[j] {
                    continue;
                }
                let delta = (a.time_tag_ps - r.time_tag_ps) - timing.delay_offset_ps;
                // Strict < keeps the first (index-ordered) pair on ties.
                if best.is_none_or(|(_, _, d)| delta.abs() < d.abs()) {
                    best = Some((i, j, delta));
                }
            }
        }
        let (i, j, delta) = best.expect("at least one unused pair remains");
        a_used[i] = true;
        r_used[j] = true;
        records.push(CoincidenceRecord {
            window_index: active[i].window_index,
            delta_t_ps: delta,
            peak_class: classify_peak(delta, timing.path_delay_ps, timing.coincidence_window_ps),
            phase_sum_mrad: (active[i].phase_mrad + reference[j].phase_mrad)
                .rem_euclid(TAU_MRAD),
        });
    }
}

/// The four phase-sum classes the estimator understands, i.e. sums of the
/// standard quadrature modulator set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    /// Phase sum 0: fringe maximum.
    Zero,
    /// Phase sum pi/2: half-way, used as a consistency check.
    Quarter,
    /// Phase sum pi: fringe minimum.
    Half,
    /// Phase sum 3*pi/2: the other half-way point.
    ThreeQuarter,
}

/// Snap an integer-mrad phase sum onto a quadrature class. Sums built
/// from the quadrature set land within 2 mrad of a class center; anything
/// farther than 5 mrad is not a quadrature operation point.
pub fn quadrature_class(phase_sum_mrad: i32) -> Option<Quadrature> {
    const TOLERANCE: i32 = 5;
    let wrapped = phase_sum_mrad.rem_euclid(TAU_MRAD);
    for (center, class) in [
        (0, Quadrature::Zero),
        (1571, Quadrature::Quarter),
        (3142, Quadrature::Half),
        (4712, Quadrature::ThreeQuarter),
        (TAU_MRAD, Quadrature::Zero),
    ] {
        if (wrapped - center).abs() <= TOLERANCE {
            return Some(class);
        }
    }
    None
}

/// Central-peak coincidence counts bucketed by phase-sum class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhaseBinnedCounts {
    pub c_zero: u64,
    pub c_quarter: u64,
    pub c_half: u64,
    pub c_three_quarter: u64,
    /// Central coincidences whose phase sum is not a quadrature point
    /// (possible only with non-standard modulator sets); excluded from
    /// the estimate.
    pub c_other: u64,
}

impl PhaseBinnedCounts {
    /// Bucket the `Central`-class records of a batch.
    pub fn from_records(records: &[CoincidenceRecord]) -> Self {
        let mut counts = Self::default();
        for record in records {
            if record.peak_class != PeakClass::Central {
                continue;
            }
            match quadrature_class(record.phase_sum_mrad) {
                Some(Quadrature::Zero) => counts.c_zero += 1,
                Some(Quadrature::Quarter) => counts.c_quarter += 1,
                Some(Quadrature::Half) => counts.c_half += 1,
                Some(Quadrature::ThreeQuarter) => counts.c_three_quarter += 1,
                None => counts.c_other += 1,
            }
        }
        counts
    }

    /// Total central-peak coincidences.
    pub fn total(&self) -> u64 {
        self.c_zero + self.c_quarter + self.c_half + self.c_three_quarter + self.c_other
    }

    pub fn add(&mut self, other: &Self) {
        self.c_zero += other.c_zero;
        self.c_quarter += other.c_quarter;
        self.c_half += other.c_half;
        self.c_three_quarter += other.c_three_quarter;
        self.c_other += other.c_other;
    }
}

/// A fringe-visibility estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub v_hat: f64,
    pub std_err: f64,
    /// Total central-peak coincidences in the batch (all phase classes).
    pub n_central: u64,
    /// First and last window of the contributing span.
    pub window_span: (u64, u64),
    /// Whether the quarter-turn classes sit within 4 sigma of the fringe
    /// midpoint, as the cosine model requires. Meaningful only under
    /// quadrature modulation.
    pub quadrature_consistent: bool,
}

/// Estimate visibility from phase-binned central counts.
///
/// `v_hat = (C0 - Cpi) / (C0 + Cpi)`; the standard error propagates
/// Poisson fluctuations to first order, `2*sqrt(C0*Cpi)/(C0+Cpi)^1.5`,
/// with zero counts replaced by one inside the error formula only (the
/// point estimate keeps the raw counts).
pub fn estimate_visibility(
    counts: &PhaseBinnedCounts,
    window_span: (u64, u64),
    min_counts: u64,
) -> Result<VisibilityEstimate, AnalyticsError> {
    let c0 = counts.c_zero;
    let cpi = counts.c_half;
    let fringe_total = c0 + cpi;
    if fringe_total < min_counts.max(1) {
        return Err(AnalyticsError::InsufficientData {
            available: fringe_total,
            floor: min_counts,
        });
    }
    let v_hat = (c0 as f64 - cpi as f64) / fringe_total as f64;
    let e0 = c0.max(1) as f64;
    let epi = cpi.max(1) as f64;
    let std_err = 2.0 * (e0 * epi).sqrt() / (e0 + epi).powf(1.5);

    let midpoint = fringe_total as f64 / 2.0;
    let band = 4.0 * midpoint.sqrt();
    let quadrature_consistent = (counts.c_quarter as f64 - midpoint).abs() <= band
        && (counts.c_three_quarter as f64 - midpoint).abs() <= band;

    Ok(VisibilityEstimate {
        v_hat,
        std_err,
        n_central: counts.total(),
        window_span,
        quadrature_consistent,
    })
}

/// Outcome of comparing an estimate against the classical bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellVerdict {
    /// Lower confidence bound above threshold: non-classical correlations
    /// confirmed.
    Pass,
    /// Upper confidence bound below threshold: non-classicality excluded.
    Fail,
    /// Confidence interval straddles the threshold.
    Inconclusive,
}

impl BellVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            BellVerdict::Pass => "pass",
            BellVerdict::Fail => "fail",
            BellVerdict::Inconclusive => "inconclusive",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "pass" => Some(BellVerdict::Pass),
            "fail" => Some(BellVerdict::Fail),
            "inconclusive" => Some(BellVerdict::Inconclusive),
            _ => None,
        }
    }
}

/// Two-sided confidence comparison of `v_hat` against `threshold` at
/// significance `alpha` (z is the `1 - alpha` normal quantile).
pub fn bell_threshold_test(
    estimate: &VisibilityEstimate,
    threshold: f64,
    alpha: f64,
) -> BellVerdict {
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(1.0 - alpha);
    if estimate.v_hat + z * estimate.std_err < threshold {
        BellVerdict::Fail
    } else if estimate.v_hat - z * estimate.std_err > threshold {
        BellVerdict::Pass
    } else {
        BellVerdict::Inconclusive
    }
}

/// Expected per-window rates learned in calibration, with the loss-alarm
/// tolerance and the accidental-coincidence floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBaseline {
    active_singles_per_window: f64,
    reference_singles_per_window: f64,
    coincidences_per_window: f64,
    accidental_floor_per_window: f64,
    tolerance: f64,
}

impl RateBaseline {
    pub fn new(
        active_singles_per_window: f64,
        reference_singles_per_window: f64,
        coincidences_per_window: f64,
        accidental_floor_per_window: f64,
        tolerance: f64,
    ) -> Result<Self, AnalyticsError> {
        for (name, value) in [
            ("active_singles", active_singles_per_window),
            ("reference_singles", reference_singles_per_window),
            ("coincidences", coincidences_per_window),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(AnalyticsError::BaselineRateInvalid { name, value });
            }
        }
        if !accidental_floor_per_window.is_finite() || accidental_floor_per_window < 0.0 {
            return Err(AnalyticsError::FloorInvalid(accidental_floor_per_window));
        }
        if !tolerance.is_finite() || tolerance <= 0.0 || tolerance >= 1.0 {
            return Err(AnalyticsError::ToleranceInvalid(tolerance));
        }
        Ok(Self {
            active_singles_per_window,
            reference_singles_per_window,
            coincidences_per_window,
            accidental_floor_per_window,
            tolerance,
        })
    }

    pub fn active_singles_per_window(&self) -> f64 {
        self.active_singles_per_window
    }

    pub fn reference_singles_per_window(&self) -> f64 {
        self.reference_singles_per_window
    }

    pub fn coincidences_per_window(&self) -> f64 {
        self.coincidences_per_window
    }

    pub fn accidental_floor_per_window(&self) -> f64 {
        self.accidental_floor_per_window
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// Estimated accidental central coincidences per window from uncorrelated
/// clicks landing within the coincidence window of each other.
pub fn accidental_floor_per_window(
    active_singles_per_window: f64,
    reference_singles_per_window: f64,
    coincidence_window_ps: i64,
    window_length_ps: i64,
) -> f64 {
    let acceptance = (2 * coincidence_window_ps + 1) as f64 / window_length_ps as f64;
    active_singles_per_window * reference_singles_per_window * acceptance
}

/// Observed counts for one monitored batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedRates {
    pub n_windows: u64,
    pub active_singles: u64,
    pub reference_singles: u64,
    pub central_coincidences: u64,
}

/// Rate-monitor verdict, orthogonal to the interference verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateVerdict {
    Nominal,
    /// At least one rate departed from baseline beyond tolerance and
    /// statistical significance.
    LossAnomaly,
    /// Coincidences indistinguishable from the accidental floor.
    NoSignal,
}

impl RateVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            RateVerdict::Nominal => "nominal",
            RateVerdict::LossAnomaly => "loss_anomaly",
            RateVerdict::NoSignal => "no_signal",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "nominal" => Some(RateVerdict::Nominal),
            "loss_anomaly" => Some(RateVerdict::LossAnomaly),
            "no_signal" => Some(RateVerdict::NoSignal),
            _ => None,
        }
    }
}

/// Compare a batch's observed counts against the calibrated baseline. A
/// deviation alarms only when it exceeds both the relative tolerance and
/// a 4-sigma Poisson band, so small batches do not flap.
pub fn rate_monitor(observed: &ObservedRates, baseline: &RateBaseline) -> RateVerdict {
    let nw = observed.n_windows as f64;
    let floor = baseline.accidental_floor_per_window * nw;
    if (observed.central_coincidences as f64) <= floor + 4.0 * floor.sqrt() {
        return RateVerdict::NoSignal;
    }
    let checks = [
        (
            observed.active_singles as f64,
            baseline.active_singles_per_window * nw,
        ),
        (
            observed.reference_singles as f64,
            baseline.reference_singles_per_window * nw,
        ),
        (
            observed.central_coincidences as f64,
            baseline.coincidences_per_window * nw,
        ),
    ];
    for (obs, expect) in checks {
        let deviation = (obs - expect).abs();
        if deviation > (baseline.tolerance * expect).max(4.0 * expect.sqrt()) {
            return RateVerdict::LossAnomaly;
        }
    }
    RateVerdict::Nominal
}

/// The four operational states of a seal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SealState {
    Normal,
    Degraded,
    Compromised,
    Offline,
}

impl SealState {
    pub fn label(&self) -> &'static str {
        match self {
            SealState::Normal => "normal",
            SealState::Degraded => "degraded",
            SealState::Compromised => "compromised",
            SealState::Offline => "offline",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(SealState::Normal),
            "degraded" => Some(SealState::Degraded),
            "compromised" => Some(SealState::Compromised),
            "offline" => Some(SealState::Offline),
            _ => None,
        }
    }
}

/// Everything one batch contributes to the state machine. `verdict` is
/// `None` when the batch had too few fringe counts to test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub window_span: (u64, u64),
    pub estimate: Option<VisibilityEstimate>,
    pub verdict: Option<BellVerdict>,
    pub rate: RateVerdict,
}

/// Current seal state plus the hysteresis bookkeeping and last evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SealStatus {
    pub state: SealState,
    /// First window of the batch whose evaluation put us in this state.
    pub since_window: u64,
    /// Most recent batch folded in.
    pub evidence: Option<BatchOutcome>,
    pending: Option<PendingTransition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PendingTransition {
    target: SealState,
    streak: u32,
}

impl SealStatus {
    /// Seals start `Offline`: no data has been seen yet.
    pub fn initial() -> Self {
        Self {
            state: SealState::Offline,
            since_window: 0,
            evidence: None,
            pending: None,
        }
    }
}

/// The state a batch argues for, before hysteresis.
fn target_state(outcome: &BatchOutcome) -> SealState {
    match (outcome.verdict, outcome.rate) {
        // No measurable fringe: the seal is not producing data.
        (None, _) => SealState::Offline,
        // A Fail verdict is affirmative evidence of tampering and beats
        // everything, including a simultaneous signal loss.
        (Some(BellVerdict::Fail), _) => SealState::Compromised,
        (_, RateVerdict::NoSignal) => SealState::Offline,
        (Some(BellVerdict::Pass), RateVerdict::Nominal) => SealState::Normal,
        (Some(BellVerdict::Pass), RateVerdict::LossAnomaly) => SealState::Degraded,
        (Some(BellVerdict::Inconclusive), _) => SealState::Degraded,
    }
}

/// Fold one batch into the seal status.
///
/// A state change requires `hysteresis_k` consecutive batches agreeing on
/// the same target state, with two exceptions: transitions into
/// `Compromised` take effect after a single batch (the costly error is a
/// missed attack), and leaving `Compromised` additionally requires every
/// batch of the streak to carry a `Pass` verdict.
pub fn update_seal_state(
    status: &SealStatus,
    outcome: &BatchOutcome,
    hysteresis_k: u32,
) -> SealStatus {
    let k = hysteresis_k.max(1);
    let target = target_state(outcome);
    let mut next = *status;
    next.evidence = Some(*outcome);

    if target == status.state {
        next.pending = None;
        return next;
    }
    if target == SealState::Compromised {
        next.state = SealState::Compromised;
        next.since_window = outcome.window_span.0;
        next.pending = None;
        return next;
    }
    if status.state == SealState::Compromised && outcome.verdict != Some(BellVerdict::Pass) {
        // Compromised is absorbing except for a run of passing batches.
        next.pending = None;
        return next;
    }
    let streak = match status.pending {
        Some(p) if p.target == target => p.streak + 1,
        _ => 1,
    };
    if streak >= k {
        next.state = target;
        next.since_window = outcome.window_span.0;
        next.pending = None;
    } else {
        next.pending = Some(PendingTransition { target, streak });
    }
    next
}
