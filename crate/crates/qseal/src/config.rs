//! Scenario files: TOML in, validated run plan out.
//!
//! [`ScenarioConfig`] mirrors the TOML layout with serde defaults, so a
//! minimal file needs only `total_windows`. [`ScenarioConfig::validate`]
//! performs every cross-field check up front and produces a
//! [`ValidatedScenario`] — a ready [`SealSetup`] plus typed analytics,
//! network, and output parameters — so nothing can fail mid-run for
//! configuration reasons. Unknown keys anywhere are rejected.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::adversary::{AdversaryError, AttackKind, AttackPlan, AttackSchedule};
use crate::analytics::{SealState, CLASSICAL_VISIBILITY_BOUND};
use crate::components::{
    rad_to_mrad, ComponentError, DetectorModel, FiberChannel, MziReceiver, SpdcSource,
};
use crate::network::{NetworkError, NetworkGraph, RoutePolicy};
use crate::sim::{SealSetup, SimError};

/// Highest spoof pulse rate a scenario may request; beyond this the
/// per-window pulse counts stop being physically sensible.
pub const MAX_SPOOF_RATE_HZ: f64 = 1e9;

/// Errors surfaced by parsing or validating a scenario file.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario file is not valid TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("total_windows must be at least 1")]
    TotalWindowsZero,
    #[error("analytics.batch_windows must be at least 1")]
    BatchWindowsZero,
    #[error("analytics.alpha {0} must lie in (0, 0.5)")]
    AlphaOutOfRange(f64),
    #[error("analytics.visibility_threshold {0} must lie in (0, 1)")]
    ThresholdOutOfRange(f64),
    #[error("analytics.hysteresis_k must be at least 1")]
    HysteresisZero,
    #[error("analytics.min_counts must be at least 1")]
    MinCountsZero,
    #[error("analytics.rate_tolerance {0} must lie in (0, 1)")]
    RateToleranceOutOfRange(f64),
    #[error("analytics.calibration_fraction {0} must lie in (0, 0.5]")]
    CalibrationFractionOutOfRange(f64),
    #[error(
        "calibration span works out to {calibration} of {total} windows; both the calibration \
         and the monitored span need at least one window"
    )]
    CalibrationTooShort { calibration: u64, total: u64 },
    #[error(
        "receivers.phase_set_rad must be the four quadrature settings 0, pi/2, pi, 3pi/2 \
         (in any order); got mrad values {0:?}"
    )]
    QuadratureSetRequired(Vec<i32>),
    #[error("unknown attack kind {0:?} (expected intercept_resend, passive_tap, cut_fiber, or classical_spoof)")]
    UnknownAttackKind(String),
    #[error("attack kind {kind:?} does not take field {field}")]
    AttackFieldUnexpected { kind: String, field: &'static str },
    #[error("attack kind {kind:?} requires field {field}")]
    AttackFieldMissing { kind: String, field: &'static str },
    #[error("classical_spoof pulse_rate_hz {0} exceeds the maximum {MAX_SPOOF_RATE_HZ}")]
    SpoofRateTooHigh(f64),
    #[error("unknown routing policy {0:?} (expected require_normal_seals, avoid_compromised, or cost_penalty)")]
    UnknownPolicy(String),
    #[error("routing policy cost_penalty requires network.penalty_factor")]
    PenaltyFactorMissing,
    #[error("unknown seal state {0:?} (expected normal, degraded, compromised, or offline)")]
    UnknownState(String),
    #[error(
        "network.monitored_link is required unless the graph has exactly one sealed link"
    )]
    MonitoredLinkAmbiguous,
    #[error("network.monitored_link {0:?} is not a sealed link of the graph")]
    MonitoredLinkNotSealed(String),
    #[error("output.histogram_bin_ps {0} must be at least 1")]
    HistogramBinInvalid(i64),
    #[error("output.{0} must not be empty")]
    OutputNameEmpty(&'static str),
}

fn default_master_seed() -> u64 {
    7
}
fn default_window_length_ps() -> i64 {
    1_000_000
}
fn default_coincidence_window_ps() -> i64 {
    100
}

/// Top-level scenario file. Only `total_windows` is required.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    pub total_windows: u64,
    #[serde(default = "default_window_length_ps")]
    pub window_length_ps: i64,
    #[serde(default = "default_coincidence_window_ps")]
    pub coincidence_window_ps: i64,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub channels: ChannelsConfig,
    #[serde(default)]
    pub receivers: ReceiversConfig,
    #[serde(default)]
    pub detectors: DetectorConfig,
    #[serde(default)]
    pub attacks: Vec<AttackConfig>,
    #[serde(default)]
    pub analytics: AnalyticsConfig,
    #[serde(default)]
    pub network: Option<NetworkConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_mean_pairs() -> f64 {
    0.05
}
fn default_visibility() -> f64 {
    0.98
}
fn default_pump_frequency_hz() -> f64 {
    2.43e15
}

/// `[source]`: the entangled-pair source.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default = "default_mean_pairs")]
    pub mean_pairs_per_window: f64,
    #[serde(default = "default_visibility")]
    pub visibility: f64,
    #[serde(default = "default_pump_frequency_hz")]
    pub pump_frequency_hz: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            mean_pairs_per_window: default_mean_pairs(),
            visibility: default_visibility(),
            pump_frequency_hz: default_pump_frequency_hz(),
        }
    }
}

fn default_active_channel() -> ChannelConfig {
    ChannelConfig {
        loss_db: 3.0,
        propagation_delay_ps: default_propagation_delay_ps(),
        decoherence_factor: default_decoherence_factor(),
    }
}
fn default_reference_channel() -> ChannelConfig {
    ChannelConfig {
        loss_db: 1.0,
        propagation_delay_ps: default_propagation_delay_ps(),
        decoherence_factor: default_decoherence_factor(),
    }
}
fn default_propagation_delay_ps() -> i64 {
    50_000
}
fn default_decoherence_factor() -> f64 {
    1.0
}

/// `[channels]`: the two fibers from the source.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsConfig {
    #[serde(default = "default_active_channel")]
    pub active: ChannelConfig,
    #[serde(default = "default_reference_channel")]
    pub reference: ChannelConfig,
}

impl Default for ChannelsConfig {
    fn default() -> Self {
        Self {
            active: default_active_channel(),
            reference: default_reference_channel(),
        }
    }
}

/// One fiber. `loss_db` is required whenever the table is written out,
/// so overriding a channel always states its headline number.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub loss_db: f64,
    #[serde(default = "default_propagation_delay_ps")]
    pub propagation_delay_ps: i64,
    #[serde(default = "default_decoherence_factor")]
    pub decoherence_factor: f64,
}

fn default_path_delay_ps() -> i64 {
    1_000
}
fn default_phase_set_rad() -> Vec<f64> {
    vec![
        0.0,
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::PI,
        3.0 * std::f64::consts::FRAC_PI_2,
    ]
}

/// `[receivers]`: both interferometers share the path-delay imbalance
/// (they must, for the interfering alternatives to overlap) and the
/// modulator phase set.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiversConfig {
    #[serde(default = "default_path_delay_ps")]
    pub path_delay_ps: i64,
    #[serde(default = "default_phase_set_rad")]
    pub phase_set_rad: Vec<f64>,
}

impl Default for ReceiversConfig {
    fn default() -> Self {
        Self {
            path_delay_ps: default_path_delay_ps(),
            phase_set_rad: default_phase_set_rad(),
        }
    }
}

fn default_efficiency() -> f64 {
    0.8
}
fn default_dark_rate_hz() -> f64 {
    100.0
}
fn default_jitter_sigma_ps() -> f64 {
    30.0
}

/// `[detectors]`: one detector model shared by both receivers.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    #[serde(default = "default_dark_rate_hz")]
    pub dark_count_rate_hz: f64,
    #[serde(default = "default_jitter_sigma_ps")]
    pub jitter_sigma_ps: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: default_efficiency(),
            dark_count_rate_hz: default_dark_rate_hz(),
            jitter_sigma_ps: default_jitter_sigma_ps(),
        }
    }
}

/// `[[attacks]]`: one scheduled attack. `kind` selects which of the
/// optional fields are meaningful; stray fields for the wrong kind are
/// rejected in validation.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: String,
    pub start_window: u64,
    pub end_window: u64,
    pub added_loss_db: Option<f64>,
    pub pulse_rate_hz: Option<f64>,
    pub timing_error_sigma_ps: Option<f64>,
}

impl AttackConfig {
    fn reject(&self, field: &'static str, value: Option<f64>) -> Result<(), ConfigError> {
        if value.is_some() {
            return Err(ConfigError::AttackFieldUnexpected {
                kind: self.kind.clone(),
                field,
            });
        }
        Ok(())
    }

    fn to_plan(&self) -> Result<AttackPlan, ConfigError> {
        let kind = match self.kind.as_str() {
            "intercept_resend" | "cut_fiber" => {
                self.reject("added_loss_db", self.added_loss_db)?;
                self.reject("pulse_rate_hz", self.pulse_rate_hz)?;
                self.reject("timing_error_sigma_ps", self.timing_error_sigma_ps)?;
                if self.kind == "intercept_resend" {
                    AttackKind::InterceptResend
                } else {
                    AttackKind::CutFiber
                }
            }
            "passive_tap" => {
                self.reject("pulse_rate_hz", self.pulse_rate_hz)?;
                self.reject("timing_error_sigma_ps", self.timing_error_sigma_ps)?;
                let added_loss_db =
                    self.added_loss_db
                        .ok_or_else(|| ConfigError::AttackFieldMissing {
                            kind: self.kind.clone(),
                            field: "added_loss_db",
                        })?;
                AttackKind::PassiveTap { added_loss_db }
            }
            "classical_spoof" => {
                self.reject("added_loss_db", self.added_loss_db)?;
                let pulse_rate_hz =
                    self.pulse_rate_hz
                        .ok_or_else(|| ConfigError::AttackFieldMissing {
                            kind: self.kind.clone(),
                            field: "pulse_rate_hz",
                        })?;
                if pulse_rate_hz > MAX_SPOOF_RATE_HZ {
                    return Err(ConfigError::SpoofRateTooHigh(pulse_rate_hz));
                }
                AttackKind::ClassicalSpoof {
                    pulse_rate_hz,
                    timing_error_sigma_ps: self.timing_error_sigma_ps.unwrap_or(0.0),
                }
            }
            other => return Err(ConfigError::UnknownAttackKind(other.to_string())),
        };
        let plan = AttackPlan {
            kind,
            start_window: self.start_window,
            end_window: self.end_window,
        };
        plan.validate()?;
        Ok(plan)
    }
}

fn default_batch_windows() -> u64 {
    10_000
}
fn default_alpha() -> f64 {
    0.001
}
fn default_threshold() -> f64 {
    CLASSICAL_VISIBILITY_BOUND
}
fn default_hysteresis_k() -> u32 {
    3
}
fn default_min_counts() -> u64 {
    100
}
fn default_rate_tolerance() -> f64 {
    0.2
}
fn default_calibration_fraction() -> f64 {
    0.1
}

/// `[analytics]`: batching, the statistical test, and the rate monitor.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticsConfig {
    #[serde(default = "default_batch_windows")]
    pub batch_windows: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_threshold")]
    pub visibility_threshold: f64,
    #[serde(default = "default_hysteresis_k")]
    pub hysteresis_k: u32,
    #[serde(default = "default_min_counts")]
    pub min_counts: u64,
    #[serde(default = "default_rate_tolerance")]
    pub rate_tolerance: f64,
    #[serde(default = "default_calibration_fraction")]
    pub calibration_fraction: f64,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self {
            batch_windows: default_batch_windows(),
            alpha: default_alpha(),
            visibility_threshold: default_threshold(),
            hysteresis_k: default_hysteresis_k(),
            min_counts: default_min_counts(),
            rate_tolerance: default_rate_tolerance(),
            calibration_fraction: default_calibration_fraction(),
        }
    }
}

fn default_policy() -> String {
    "avoid_compromised".to_string()
}

/// `[network]`: optional routing overlay. The monitored link is the one
/// whose seal this run's pipeline drives.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
    #[serde(default = "default_policy")]
    pub policy: String,
    pub penalty_factor: Option<f64>,
    pub monitored_link: Option<[String; 2]>,
}

fn default_initial_state() -> String {
    "normal".to_string()
}

/// `[[network.links]]`: one undirected link.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: String,
    pub b: String,
    pub cost: f64,
    #[serde(default)]
    pub sealed: bool,
    #[serde(default = "default_initial_state")]
    pub initial_state: String,
}

fn default_directory() -> String {
    "out".to_string()
}
fn default_events_file() -> String {
    "events.log".to_string()
}
fn default_histogram_file() -> String {
    "histogram.csv".to_string()
}
fn default_report_file() -> String {
    "report.txt".to_string()
}
fn default_link_reports_file() -> String {
    "link_reports.csv".to_string()
}
fn default_histogram_bin_ps() -> i64 {
    10
}

/// `[output]`: artifact locations, all relative to the output directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_events_file")]
    pub events_file: String,
    #[serde(default = "default_histogram_file")]
    pub histogram_file: String,
    #[serde(default = "default_report_file")]
    pub report_file: String,
    #[serde(default = "default_link_reports_file")]
    pub link_reports_file: String,
    #[serde(default = "default_histogram_bin_ps")]
    pub histogram_bin_ps: i64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            events_file: default_events_file(),
            histogram_file: default_histogram_file(),
            report_file: default_report_file(),
            link_reports_file: default_link_reports_file(),
            histogram_bin_ps: default_histogram_bin_ps(),
        }
    }
}

/// Typed analytics parameters after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticsParams {
    pub batch_windows: u64,
    pub alpha: f64,
    pub visibility_threshold: f64,
    pub hysteresis_k: u32,
    pub min_counts: u64,
    pub rate_tolerance: f64,
    /// First `calibration_windows` windows run attack-suppressed to learn
    /// the rate baseline; the rest are monitored.
    pub calibration_windows: u64,
}

/// Typed network plan after validation.
#[derive(Debug, Clone)]
pub struct NetworkPlan {
    pub graph: NetworkGraph,
    pub policy: RoutePolicy,
    /// Canonical id of the sealed link driven by this run's seal.
    pub monitored_link_id: String,
}

/// Typed output locations after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputParams {
    pub directory: String,
    pub events_file: String,
    pub histogram_file: String,
    pub report_file: String,
    pub link_reports_file: String,
    pub histogram_bin_ps: i64,
}

/// Everything a run needs, with all invariants already enforced.
#[derive(Debug, Clone)]
pub struct ValidatedScenario {
    pub master_seed: u64,
    pub total_windows: u64,
    pub setup: SealSetup,
    pub analytics: AnalyticsParams,
    pub network: Option<NetworkPlan>,
    pub output: OutputParams,
}

fn parse_state(label: &str) -> Result<SealState, ConfigError> {
    SealState::from_label(label).ok_or_else(|| ConfigError::UnknownState(label.to_string()))
}

impl ScenarioConfig {
    /// Parse a scenario from TOML text (no validation beyond the schema).
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Read and parse a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Run every cross-field check and assemble the run plan.
    pub fn validate(&self) -> Result<ValidatedScenario, ConfigError> {
        if self.total_windows == 0 {
            return Err(ConfigError::TotalWindowsZero);
        }

        let source = SpdcSource::new(
            self.source.mean_pairs_per_window,
            self.source.visibility,
            self.source.pump_frequency_hz,
        )?;
        let active_channel = FiberChannel::new(
            self.channels.active.loss_db,
            self.channels.active.propagation_delay_ps,
            self.channels.active.decoherence_factor,
        )?;
        let reference_channel = FiberChannel::new(
            self.channels.reference.loss_db,
            self.channels.reference.propagation_delay_ps,
            self.channels.reference.decoherence_factor,
        )?;

        // The estimator needs fringe maxima and minima plus the two
        // consistency points, so the modulator set must be exactly the
        // four quadratures.
        let mut phase_set_mrad: Vec<i32> = self
            .receivers
            .phase_set_rad
            .iter()
            .map(|&rad| rad_to_mrad(rad))
            .collect();
        let mut sorted = phase_set_mrad.clone();
        sorted.sort_unstable();
        if sorted != [0, 1571, 3142, 4712] {
            return Err(ConfigError::QuadratureSetRequired(sorted));
        }
        phase_set_mrad.sort_unstable();

        let detector = DetectorModel::new(
            self.detectors.efficiency,
            self.detectors.dark_count_rate_hz,
            self.detectors.jitter_sigma_ps,
        )?;
        let active_receiver = MziReceiver::new(
            self.receivers.path_delay_ps,
            phase_set_mrad.clone(),
            detector,
        )?;
        let reference_receiver =
            MziReceiver::new(self.receivers.path_delay_ps, phase_set_mrad, detector)?;

        let plans = self
            .attacks
            .iter()
            .map(AttackConfig::to_plan)
            .collect::<Result<Vec<_>, _>>()?;
        let attacks = AttackSchedule::new(plans)?;

        let setup = SealSetup::new(
            source,
            active_channel,
            reference_channel,
            active_receiver,
            reference_receiver,
            self.window_length_ps,
            self.coincidence_window_ps,
            attacks,
        )?;

        let a = &self.analytics;
        if a.batch_windows == 0 {
            return Err(ConfigError::BatchWindowsZero);
        }
        if !a.alpha.is_finite() || a.alpha <= 0.0 || a.alpha >= 0.5 {
            return Err(ConfigError::AlphaOutOfRange(a.alpha));
        }
        if !a.visibility_threshold.is_finite()
            || a.visibility_threshold <= 0.0
            || a.visibility_threshold >= 1.0
        {
            return Err(ConfigError::ThresholdOutOfRange(a.visibility_threshold));
        }
        if a.hysteresis_k == 0 {
            return Err(ConfigError::HysteresisZero);
        }
        if a.min_counts == 0 {
            return Err(ConfigError::MinCountsZero);
        }
        if !a.rate_tolerance.is_finite() || a.rate_tolerance <= 0.0 || a.rate_tolerance >= 1.0 {
            return Err(ConfigError::RateToleranceOutOfRange(a.rate_tolerance));
        }
        if !a.calibration_fraction.is_finite()
            || a.calibration_fraction <= 0.0
            || a.calibration_fraction > 0.5
        {
            return Err(ConfigError::CalibrationFractionOutOfRange(
                a.calibration_fraction,
            ));
        }
        let calibration_windows =
            (self.total_windows as f64 * a.calibration_fraction).floor() as u64;
        if calibration_windows == 0 || calibration_windows >= self.total_windows {
            return Err(ConfigError::CalibrationTooShort {
                calibration: calibration_windows,
                total: self.total_windows,
            });
        }
        let analytics = AnalyticsParams {
            batch_windows: a.batch_windows,
            alpha: a.alpha,
            visibility_threshold: a.visibility_threshold,
            hysteresis_k: a.hysteresis_k,
            min_counts: a.min_counts,
            rate_tolerance: a.rate_tolerance,
            calibration_windows,
        };

        let network = self.network.as_ref().map(|n| self.build_network(n)).transpose()?;

        let o = &self.output;
        for (name, value) in [
            ("directory", &o.directory),
            ("events_file", &o.events_file),
            ("histogram_file", &o.histogram_file),
            ("report_file", &o.report_file),
            ("link_reports_file", &o.link_reports_file),
        ] {
            if value.is_empty() {
                return Err(ConfigError::OutputNameEmpty(name));
            }
        }
        if o.histogram_bin_ps < 1 {
            return Err(ConfigError::HistogramBinInvalid(o.histogram_bin_ps));
        }
        let output = OutputParams {
            directory: o.directory.clone(),
            events_file: o.events_file.clone(),
            histogram_file: o.histogram_file.clone(),
            report_file: o.report_file.clone(),
            link_reports_file: o.link_reports_file.clone(),
            histogram_bin_ps: o.histogram_bin_ps,
        };

        Ok(ValidatedScenario {
            master_seed: self.master_seed,
            total_windows: self.total_windows,
            setup,
            analytics,
            network,
            output,
        })
    }

    fn build_network(&self, n: &NetworkConfig) -> Result<NetworkPlan, ConfigError> {
        let mut graph = NetworkGraph::new();
        for node in &n.nodes {
            graph.add_node(node.clone())?;
        }
        let mut sealed_ids = Vec::new();
        for link in &n.links {
            let state = parse_state(&link.initial_state)?;
            let id = graph.add_link(&link.a, &link.b, link.cost, link.sealed, state)?;
            if link.sealed {
                sealed_ids.push(id);
            }
        }
        let policy = match n.policy.as_str() {
            "require_normal_seals" => RoutePolicy::RequireNormalSeals,
            "avoid_compromised" => RoutePolicy::AvoidCompromised,
            "cost_penalty" => {
                let factor = n.penalty_factor.ok_or(ConfigError::PenaltyFactorMissing)?;
                RoutePolicy::CostPenalty { factor }
            }
            other => return Err(ConfigError::UnknownPolicy(other.to_string())),
        };
        if let RoutePolicy::CostPenalty { factor } = policy {
            if !factor.is_finite() || factor <= 1.0 {
                return Err(ConfigError::Network(NetworkError::PenaltyInvalid(factor)));
            }
        }
        let monitored_link_id = match &n.monitored_link {
            Some([a, b]) => {
                let id = crate::network::link_id(a, b);
                if !sealed_ids.contains(&id) {
                    return Err(ConfigError::MonitoredLinkNotSealed(id));
                }
                id
            }
            None => {
                if sealed_ids.len() != 1 {
                    return Err(ConfigError::MonitoredLinkAmbiguous);
                }
                sealed_ids.remove(0)
            }
        };
        Ok(NetworkPlan {
            graph,
            policy,
            monitored_link_id,
        })
    }
}
