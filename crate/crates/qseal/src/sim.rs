//! Windowed Monte Carlo over one sealed link.
//!
//! Time is divided into fixed analysis windows. Each window independently
//! may carry one entangled pair; attacks, channel loss, receiver
//! port/path statistics, detector efficiency, jitter, dark counts, and
//! spoofed replica pulses all act window-locally. Two sampling paths
//! produce the same statistics:
//!
//! - [`simulate_window`]: the reference implementation — everything for
//!   one window from one RNG. Use for contract tests and small studies.
//! - [`Simulator::simulate_range`]: the production path. Window ranges
//!   are cut on a fixed 65536-window grid; per grid part, the number of
//!   emitting windows is drawn binomially and dark/spoof counts are drawn
//!   Poisson-aggregated, then only the touched windows are expanded.
//!   Every expanded window uses RNG substreams keyed by its absolute
//!   window index, so a window's phases and pair physics do not depend on
//!   which range invocation reached it.
//!
//! Determinism: for a fixed setup, master seed, and sequence of
//! `simulate_range` calls, the returned events are byte-identical across
//! runs. Events are returned in canonical order (window, receiver, time
//! tag, phase).

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use std::collections::BTreeSet;
use thiserror::Error;

use crate::adversary::{transform_channel, transform_state, AttackKind, AttackPlan, AttackSchedule};
use crate::components::{
    mrad_to_rad, DetectionEvent, DetectorModel, EventOrigin, FiberChannel, MziReceiver, Receiver,
    SpdcSource,
};
use crate::optics::{
    apply_decoherence, sample_single_port, JointPhotonState, PairKind, PhasePair, PortOutcome,
    PortPathDistribution,
};
use crate::rng::{substream, StreamKind};

/// Grid pitch (in windows) for aggregated sampling in `simulate_range`.
pub const SIM_CHUNK: u64 = 65_536;

/// Errors from assembling a sealed-link setup.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("window length {0} ps must be positive")]
    WindowLengthInvalid(i64),
    #[error("coincidence window {0} ps must be positive")]
    CoincidenceWindowInvalid(i64),
    #[error(
        "path delay {path_delay_ps} ps must exceed 3x the coincidence window \
         {coincidence_window_ps} ps for the peaks to be separable"
    )]
    PeaksNotSeparable {
        path_delay_ps: i64,
        coincidence_window_ps: i64,
    },
    #[error("receiver path delays differ ({active_ps} vs {reference_ps} ps); the central peak requires matched interferometers")]
    MismatchedPathDelay { active_ps: i64, reference_ps: i64 },
    #[error(
        "window length {window_length_ps} ps too short: propagation delay + path delay + jitter \
         margin need {required_ps} ps to keep time tags inside their window"
    )]
    WindowTooShort {
        required_ps: i64,
        window_length_ps: i64,
    },
    #[error("window range inverted: start {start} > end {end}")]
    RangeInverted { start: u64, end: u64 },
}

/// Immutable description of one sealed link: source, both channels, both
/// receivers, timing constants, and the attack schedule. All cross-field
/// invariants are checked here, never mid-run.
#[derive(Debug, Clone, PartialEq)]
pub struct SealSetup {
    source: SpdcSource,
    active_channel: FiberChannel,
    reference_channel: FiberChannel,
    active_receiver: MziReceiver,
    reference_receiver: MziReceiver,
    window_length_ps: i64,
    coincidence_window_ps: i64,
    attacks: AttackSchedule,
}

impl SealSetup {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        source: SpdcSource,
        active_channel: FiberChannel,
        reference_channel: FiberChannel,
        active_receiver: MziReceiver,
        reference_receiver: MziReceiver,
        window_length_ps: i64,
        coincidence_window_ps: i64,
        attacks: AttackSchedule,
    ) -> Result<Self, SimError> {
        if window_length_ps <= 0 {
            return Err(SimError::WindowLengthInvalid(window_length_ps));
        }
        if coincidence_window_ps <= 0 {
            return Err(SimError::CoincidenceWindowInvalid(coincidence_window_ps));
        }
        if active_receiver.delay_imbalance_ps() != reference_receiver.delay_imbalance_ps() {
            return Err(SimError::MismatchedPathDelay {
                active_ps: active_receiver.delay_imbalance_ps(),
                reference_ps: reference_receiver.delay_imbalance_ps(),
            });
        }
        let path_delay = active_receiver.delay_imbalance_ps();
        if path_delay <= 3 * coincidence_window_ps {
            return Err(SimError::PeaksNotSeparable {
                path_delay_ps: path_delay,
                coincidence_window_ps,
            });
        }
        for (channel, receiver) in [
            (&active_channel, &active_receiver),
            (&reference_channel, &reference_receiver),
        ] {
            // 10 sigma of jitter margin keeps essentially every tag
            // inside its window (stragglers are clamped).
            let margin = (receiver.detector().jitter_sigma_ps() * 10.0).ceil() as i64;
            let required = channel.propagation_delay_ps() + path_delay + margin;
            if required > window_length_ps {
                return Err(SimError::WindowTooShort {
                    required_ps: required,
                    window_length_ps,
                });
            }
        }
        Ok(Self {
            source,
            active_channel,
            reference_channel,
            active_receiver,
            reference_receiver,
            window_length_ps,
            coincidence_window_ps,
            attacks,
        })
    }

    pub fn source(&self) -> &SpdcSource {
        &self.source
    }

    pub fn active_channel(&self) -> &FiberChannel {
        &self.active_channel
    }

    pub fn reference_channel(&self) -> &FiberChannel {
        &self.reference_channel
    }

    pub fn active_receiver(&self) -> &MziReceiver {
        &self.active_receiver
    }

    pub fn reference_receiver(&self) -> &MziReceiver {
        &self.reference_receiver
    }

    pub fn window_length_ps(&self) -> i64 {
        self.window_length_ps
    }

    pub fn coincidence_window_ps(&self) -> i64 {
        self.coincidence_window_ps
    }

    pub fn attacks(&self) -> &AttackSchedule {
        &self.attacks
    }

    /// Shared long-minus-short path delay of the (matched) receivers.
    pub fn path_delay_ps(&self) -> i64 {
        self.active_receiver.delay_imbalance_ps()
    }

    /// Fixed arrival-time offset between the two receivers
    /// (active minus reference propagation delay); the coincidence
    /// matcher subtracts this before classifying.
    pub fn differential_delay_ps(&self) -> i64 {
        self.active_channel.propagation_delay_ps() - self.reference_channel.propagation_delay_ps()
    }

    /// Absolute start time of a window in picoseconds.
    pub fn epoch_ps(&self, window_index: u64) -> i64 {
        window_index as i64 * self.window_length_ps
    }

    fn receiver_parts(&self, receiver: Receiver) -> (&FiberChannel, &MziReceiver) {
        match receiver {
            Receiver::Active => (&self.active_channel, &self.active_receiver),
            Receiver::Reference => (&self.reference_channel, &self.reference_receiver),
        }
    }
}

/// Whether `simulate_range` honors the setup's attack schedule. The
/// calibration phase runs `Suppressed` to learn clean baselines over the
/// warmup span regardless of configured plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    Live,
    Suppressed,
}

/// Deterministic windowed sampler over a sealed link.
#[derive(Debug, Clone)]
pub struct Simulator {
    setup: SealSetup,
    master_seed: u64,
}

impl Simulator {
    pub fn new(setup: SealSetup, master_seed: u64) -> Self {
        Self { setup, master_seed }
    }

    pub fn setup(&self) -> &SealSetup {
        &self.setup
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Both receivers' modulator settings for a window, in mrad. Keyed by
    /// absolute window index so every sampling path that touches the
    /// window (pair, dark count, spoof pulse) sees the same phases.
    pub fn window_phases(&self, window_index: u64) -> (i32, i32) {
        let mut rng = substream(self.master_seed, StreamKind::Phase, window_index);
        let phase_a = self.setup.active_receiver.draw_phase(&mut rng);
        let phase_b = self.setup.reference_receiver.draw_phase(&mut rng);
        (phase_a, phase_b)
    }

    /// Simulate the half-open window range `[start_window, end_window)`,
    /// returning events in canonical order.
    pub fn simulate_range(
        &self,
        start_window: u64,
        end_window: u64,
        mode: AttackMode,
    ) -> Result<Vec<DetectionEvent>, SimError> {
        if start_window > end_window {
            return Err(SimError::RangeInverted {
                start: start_window,
                end: end_window,
            });
        }
        let mut events = Vec::new();
        let mut part_start = start_window;
        while part_start < end_window {
            let grid_next = (part_start / SIM_CHUNK + 1) * SIM_CHUNK;
            let part_end = grid_next.min(end_window);
            self.simulate_part(part_start, part_end, mode, &mut events);
            part_start = part_end;
        }
        events.sort_by_key(DetectionEvent::sort_key);
        Ok(events)
    }

    /// One grid part: aggregate draws decide which windows are touched,
    /// then each touched window is expanded with its own substreams.
    fn simulate_part(
        &self,
        start: u64,
        end: u64,
        mode: AttackMode,
        out: &mut Vec<DetectionEvent>,
    ) {
        let n = end - start;
        debug_assert!(n > 0 && n <= SIM_CHUNK);

        // Pair-emitting windows: Binomial count, then distinct indices.
        let mut rng_emit = substream(self.master_seed, StreamKind::Emission, start);
        let mu = self.setup.source.mean_pairs_per_window();
        let emitted = Binomial::new(n, mu)
            .expect("validated emission probability")
            .sample(&mut rng_emit);
        for &window in &distinct_windows(&mut rng_emit, start, end, emitted) {
            let state = JointPhotonState::entangled(
                self.setup.source.source_visibility(),
                self.setup.source.pump_frequency(),
            )
            .expect("validated source visibility");
            let attack = match mode {
                AttackMode::Live => self.setup.attacks.attack_in_force(window),
                AttackMode::Suppressed => None,
            };
            let phases = self.window_phases(window);
            let mut rng_pair = substream(self.master_seed, StreamKind::Pair, window);
            pair_physics(
                &self.setup,
                state,
                attack.map(|p| &p.kind),
                window,
                phases,
                &mut rng_pair,
                out,
            );
        }

        // Dark counts, one aggregated Poisson draw per receiver.
        for (stream, receiver) in [
            (StreamKind::DarkActive, Receiver::Active),
            (StreamKind::DarkReference, Receiver::Reference),
        ] {
            let (_, rx) = self.setup.receiver_parts(receiver);
            let mean = rx.detector().expected_dark_counts(self.setup.window_length_ps) * n as f64;
            let mut rng_dark = substream(self.master_seed, stream, start);
            let count = sample_poisson(&mut rng_dark, mean);
            for _ in 0..count {
                let window = start + rng_dark.random_range(0..n);
                let phases = self.window_phases(window);
                let phase = match receiver {
                    Receiver::Active => phases.0,
                    Receiver::Reference => phases.1,
                };
                out.push(dark_event(&self.setup, window, receiver, phase, &mut rng_dark));
            }
        }

        // Spoofed replica pulses over any overlapping spoof plan.
        if mode == AttackMode::Live {
            let mut rng_spoof = substream(self.master_seed, StreamKind::Spoof, start);
            for plan in self.setup.attacks.plans() {
                let AttackKind::ClassicalSpoof {
                    pulse_rate_hz,
                    timing_error_sigma_ps,
                } = plan.kind
                else {
                    continue;
                };
                let lo = plan.start_window.max(start);
                let hi = plan.end_window.min(end);
                if lo >= hi {
                    continue;
                }
                let span_s = (hi - lo) as f64 * self.setup.window_length_ps as f64 * 1e-12;
                let count = sample_poisson(&mut rng_spoof, pulse_rate_hz * span_s);
                for _ in 0..count {
                    let window = lo + rng_spoof.random_range(0..hi - lo);
                    let (phase_a, _) = self.window_phases(window);
                    if let Some(event) = spoof_pulse(
                        &self.setup,
                        window,
                        phase_a,
                        timing_error_sigma_ps,
                        &mut rng_spoof,
                    ) {
                        out.push(event);
                    }
                }
            }
        }
    }
}

/// Reference implementation of one full window from a single RNG:
/// emission, attack transformation, channel loss, joint port/path
/// statistics, detection, dark counts, and spoof pulses. `attack` is the
/// plan in force for this window, if any (the caller resolves the
/// schedule).
pub fn simulate_window<R: Rng + ?Sized>(
    setup: &SealSetup,
    attack: Option<&AttackPlan>,
    window_index: u64,
    rng: &mut R,
) -> Vec<DetectionEvent> {
    let mut out = Vec::new();
    let emitted = setup.source.emit_window(rng);
    let phase_a = setup.active_receiver.draw_phase(rng);
    let phase_b = setup.reference_receiver.draw_phase(rng);

    if let Some(state) = emitted {
        pair_physics(
            setup,
            state,
            attack.map(|p| &p.kind),
            window_index,
            (phase_a, phase_b),
            rng,
            &mut out,
        );
    }

    for receiver in [Receiver::Active, Receiver::Reference] {
        let (_, rx) = setup.receiver_parts(receiver);
        let mean = rx.detector().expected_dark_counts(setup.window_length_ps);
        let count = sample_poisson(rng, mean);
        let phase = match receiver {
            Receiver::Active => phase_a,
            Receiver::Reference => phase_b,
        };
        for _ in 0..count {
            out.push(dark_event(setup, window_index, receiver, phase, rng));
        }
    }

    if let Some(plan) = attack {
        if let AttackKind::ClassicalSpoof {
            pulse_rate_hz,
            timing_error_sigma_ps,
        } = plan.kind
        {
            let span_s = setup.window_length_ps as f64 * 1e-12;
            let count = sample_poisson(rng, pulse_rate_hz * span_s);
            for _ in 0..count {
                if let Some(event) =
                    spoof_pulse(setup, window_index, phase_a, timing_error_sigma_ps, rng)
                {
                    out.push(event);
                }
            }
        }
    }

    out.sort_by_key(DetectionEvent::sort_key);
    out
}

/// Physics of one emitted pair: attack transformation, channel loss and
/// decoherence, joint or marginal port/path sampling, detection.
fn pair_physics<R: Rng + ?Sized>(
    setup: &SealSetup,
    state: JointPhotonState,
    attack: Option<&AttackKind>,
    window_index: u64,
    (phase_a, phase_b): (i32, i32),
    rng: &mut R,
    out: &mut Vec<DetectionEvent>,
) {
    let mut active_channel = *setup.active_channel();
    let state = match attack {
        Some(kind) => {
            active_channel = transform_channel(kind, active_channel);
            transform_state(kind, state)
        }
        None => state,
    };
    // Fiber decoherence degrades the joint visibility multiplicatively.
    let state = apply_decoherence(
        state,
        active_channel.decoherence_factor() * setup.reference_channel.decoherence_factor(),
    )
    .expect("decoherence factors validated in [0, 1]");

    let has_active = matches!(state.kind, PairKind::EntangledPair { .. });
    let has_reference = matches!(
        state.kind,
        PairKind::EntangledPair { .. } | PairKind::ReferenceOnly
    );
    let active_survives = has_active && active_channel.survives(rng);
    let reference_survives = has_reference && setup.reference_channel.survives(rng);

    let (port_a, port_b) = match (active_survives, reference_survives) {
        (true, true) => {
            let phases = PhasePair::new(mrad_to_rad(phase_a), mrad_to_rad(phase_b));
            let joint = PortPathDistribution::new(&state, &phases)
                .expect("surviving pair is entangled");
            joint.sample(rng)
        }
        (true, false) => (sample_single_port(rng), PortOutcome::Unmonitored),
        (false, true) => (PortOutcome::Unmonitored, sample_single_port(rng)),
        (false, false) => return,
    };

    for (receiver, port, phase) in [
        (Receiver::Active, port_a, phase_a),
        (Receiver::Reference, port_b, phase_b),
    ] {
        let offset = match port {
            PortOutcome::ShortDetected => 0,
            PortOutcome::LongDetected => setup.path_delay_ps(),
            PortOutcome::Unmonitored => continue,
        };
        let (channel, rx) = setup.receiver_parts(receiver);
        if let Some(event) = registered_click(
            setup,
            window_index,
            receiver,
            rx.detector(),
            channel.propagation_delay_ps() + offset,
            phase,
            EventOrigin::Photon,
            rng,
        ) {
            out.push(event);
        }
    }
}

/// One attacker replica pulse at the active receiver: it traverses the
/// remaining fiber span, picks up the receiver's path/port statistics,
/// and lands with the attacker's timing error on top of detector jitter.
fn spoof_pulse<R: Rng + ?Sized>(
    setup: &SealSetup,
    window_index: u64,
    phase_a: i32,
    timing_error_sigma_ps: f64,
    rng: &mut R,
) -> Option<DetectionEvent> {
    if !setup.active_channel.survives(rng) {
        return None;
    }
    let offset = match sample_single_port(rng) {
        PortOutcome::ShortDetected => 0,
        PortOutcome::LongDetected => setup.path_delay_ps(),
        PortOutcome::Unmonitored => return None,
    };
    let timing_error = gaussian_ps(rng, timing_error_sigma_ps);
    registered_click(
        setup,
        window_index,
        Receiver::Active,
        setup.active_receiver.detector(),
        setup.active_channel.propagation_delay_ps() + offset + timing_error,
        phase_a,
        EventOrigin::Spoof,
        rng,
    )
}

/// Run one arriving photon (or replica) through detection: efficiency
/// thinning, jitter, and clamping of the tag into its window.
#[allow(clippy::too_many_arguments)]
fn registered_click<R: Rng + ?Sized>(
    setup: &SealSetup,
    window_index: u64,
    receiver: Receiver,
    detector: &DetectorModel,
    arrival_offset_ps: i64,
    phase_mrad: i32,
    origin: EventOrigin,
    rng: &mut R,
) -> Option<DetectionEvent> {
    if !detector.registers(rng) {
        return None;
    }
    let jitter = detector.sample_jitter_ps(rng);
    let epoch = setup.epoch_ps(window_index);
    let time_tag_ps =
        (epoch + arrival_offset_ps + jitter).clamp(epoch, epoch + setup.window_length_ps - 1);
    Some(DetectionEvent {
        window_index,
        receiver,
        time_tag_ps,
        phase_mrad,
        origin,
    })
}

/// A dark count at a uniform time inside the window.
fn dark_event<R: Rng + ?Sized>(
    setup: &SealSetup,
    window_index: u64,
    receiver: Receiver,
    phase_mrad: i32,
    rng: &mut R,
) -> DetectionEvent {
    let epoch = setup.epoch_ps(window_index);
    DetectionEvent {
        window_index,
        receiver,
        time_tag_ps: epoch + rng.random_range(0..setup.window_length_ps),
        phase_mrad,
        origin: EventOrigin::DarkCount,
    }
}

/// `count` distinct window indices uniform over `[start, end)`, sorted.
fn distinct_windows<R: Rng + ?Sized>(
    rng: &mut R,
    start: u64,
    end: u64,
    count: u64,
) -> BTreeSet<u64> {
    let n = end - start;
    debug_assert!(count <= n);
    let mut picked = BTreeSet::new();
    while (picked.len() as u64) < count {
        picked.insert(start + rng.random_range(0..n));
    }
    picked
}

/// Poisson draw that tolerates a zero mean.
fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("positive finite Poisson mean");
    poisson.sample(rng) as u64
}

/// Gaussian offset in integer picoseconds (zero sigma yields zero).
fn gaussian_ps<R: Rng + ?Sized>(rng: &mut R, sigma_ps: f64) -> i64 {
    if sigma_ps <= 0.0 {
        return 0;
    }
    let normal = Normal::new(0.0, sigma_ps).expect("positive finite sigma");
    normal.sample(rng).round() as i64
}
