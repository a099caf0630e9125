//! Whole-run orchestration: calibrate, simulate, analyze, report.
//!
//! [`execute`] drives a validated scenario end to end in memory: an
//! attack-suppressed calibration span learns the rate baseline, then the
//! monitored span runs batch by batch through coincidence matching,
//! visibility estimation, the threshold test, the rate monitor, and the
//! seal state machine. [`write_artifacts`] serializes the results — event
//! log, coincidence histogram, run report, link reports — and
//! [`route_demo`] replays link reports into a network graph and routes
//! across it.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytics::{
    accidental_floor_per_window, bell_threshold_test, estimate_visibility, match_coincidences,
    rate_monitor, update_seal_state, AnalyticsError, BatchOutcome, CoincidenceRecord,
    CoincidenceTiming, ObservedRates, PeakClass, PhaseBinnedCounts, RateBaseline, SealState,
    SealStatus, VisibilityEstimate,
};
use crate::components::{DetectionEvent, Receiver};
use crate::config::{NetworkPlan, OutputParams, ValidatedScenario};
use crate::logfmt::{
    write_event_log, write_link_reports, write_report, Histogram, LogError, ReportBatchRow,
    ReportDocument,
};
use crate::network::{
    LinkHealthReport, NetworkError, NodeId, ResponseAction, TransmissionGate,
};
use crate::sim::{AttackMode, SimError, Simulator};

/// Link id used in reports when the scenario defines no network graph.
pub const DEFAULT_LINK_ID: &str = "seal-link";

/// Errors from executing a run or writing its artifacts.
#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
    #[error(
        "calibration span produced no {what}; lengthen calibration_fraction or raise the \
         source brightness"
    )]
    CalibrationTooThin { what: &'static str },
}

/// One monitored batch: its raw tallies, the decision inputs, and the
/// seal status after folding it in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRecord {
    pub index: u64,
    /// First and last window of the batch (inclusive).
    pub window_span: (u64, u64),
    pub counts: PhaseBinnedCounts,
    pub active_singles: u64,
    pub reference_singles: u64,
    pub outcome: BatchOutcome,
    pub status_after: SealStatus,
}

/// Everything a run computed, before any serialization.
#[derive(Debug, Clone)]
pub struct RunExecution {
    pub seed: u64,
    pub total_windows: u64,
    pub calibration_windows: u64,
    /// All detection events, calibration included, in canonical order.
    pub events: Vec<DetectionEvent>,
    pub baseline: RateBaseline,
    pub batches: Vec<BatchRecord>,
    pub final_status: SealStatus,
    /// Phase-binned central counts over the whole monitored span.
    pub run_counts: PhaseBinnedCounts,
    pub run_active_singles: u64,
    pub run_reference_singles: u64,
    /// Run-level estimate over all monitored batches combined.
    pub run_estimate: Option<VisibilityEstimate>,
    /// Time-difference histogram of monitored coincidences.
    pub histogram: Histogram,
    pub link_reports: Vec<LinkHealthReport>,
    pub monitored_link_id: String,
}

fn split_by_receiver(events: &[DetectionEvent]) -> (Vec<DetectionEvent>, Vec<DetectionEvent>) {
    let mut active = Vec::new();
    let mut reference = Vec::new();
    for e in events {
        match e.receiver {
            Receiver::Active => active.push(*e),
            Receiver::Reference => reference.push(*e),
        }
    }
    (active, reference)
}

fn central_count(records: &[CoincidenceRecord]) -> u64 {
    records
        .iter()
        .filter(|r| r.peak_class == PeakClass::Central)
        .count() as u64
}

/// Histogram reach: covers the three peaks with their full coincidence
/// windows plus margin; farther pairs are background.
fn histogram_reach(plan: &ValidatedScenario) -> i64 {
    plan.setup.path_delay_ps() + 3 * plan.setup.coincidence_window_ps()
}

/// Rebuild the monitored-span histogram from a full event log, exactly
/// as [`execute`] builds it during a run: calibration windows are
/// excluded, and matching is per window, so the result is byte-identical
/// to the run's histogram artifact.
pub fn rebuild_histogram(
    plan: &ValidatedScenario,
    events: &[DetectionEvent],
) -> Result<Histogram, RunnerError> {
    let setup = &plan.setup;
    let timing = CoincidenceTiming {
        path_delay_ps: setup.path_delay_ps(),
        coincidence_window_ps: setup.coincidence_window_ps(),
        delay_offset_ps: setup.differential_delay_ps(),
    };
    let monitored: Vec<DetectionEvent> = events
        .iter()
        .filter(|e| e.window_index >= plan.analytics.calibration_windows)
        .copied()
        .collect();
    let (active, reference) = split_by_receiver(&monitored);
    let records = match_coincidences(&active, &reference, &timing)?;
    let mut histogram = Histogram::new(plan.output.histogram_bin_ps, histogram_reach(plan))?;
    for r in &records {
        histogram.add(r.delta_t_ps);
    }
    Ok(histogram)
}

/// Run a scenario start to finish in memory.
pub fn execute(
    plan: &ValidatedScenario,
    seed_override: Option<u64>,
) -> Result<RunExecution, RunnerError> {
    let seed = seed_override.unwrap_or(plan.master_seed);
    let sim = Simulator::new(plan.setup.clone(), seed);
    let setup = &plan.setup;
    let timing = CoincidenceTiming {
        path_delay_ps: setup.path_delay_ps(),
        coincidence_window_ps: setup.coincidence_window_ps(),
        delay_offset_ps: setup.differential_delay_ps(),
    };
    let a = &plan.analytics;
    let cal_end = a.calibration_windows;

    // Calibration: attacks suppressed, so the baseline reflects the
    // undisturbed link even when an attack is scheduled from window 0.
    let cal_events = sim.simulate_range(0, cal_end, AttackMode::Suppressed)?;
    let (cal_active, cal_reference) = split_by_receiver(&cal_events);
    let cal_records = match_coincidences(&cal_active, &cal_reference, &timing)?;
    let cal_central = central_count(&cal_records);
    if cal_active.is_empty() {
        return Err(RunnerError::CalibrationTooThin {
            what: "active-receiver clicks",
        });
    }
    if cal_reference.is_empty() {
        return Err(RunnerError::CalibrationTooThin {
            what: "reference-receiver clicks",
        });
    }
    if cal_central == 0 {
        return Err(RunnerError::CalibrationTooThin {
            what: "central coincidences",
        });
    }
    let n_cal = cal_end as f64;
    let active_rate = cal_active.len() as f64 / n_cal;
    let reference_rate = cal_reference.len() as f64 / n_cal;
    let floor = accidental_floor_per_window(
        active_rate,
        reference_rate,
        setup.coincidence_window_ps(),
        setup.window_length_ps(),
    );
    let baseline = RateBaseline::new(
        active_rate,
        reference_rate,
        cal_central as f64 / n_cal,
        floor,
        a.rate_tolerance,
    )?;

    let monitored_link_id = plan
        .network
        .as_ref()
        .map_or_else(|| DEFAULT_LINK_ID.to_string(), |n| n.monitored_link_id.clone());

    let mut histogram = Histogram::new(plan.output.histogram_bin_ps, histogram_reach(plan))?;

    let mut events = cal_events;
    let mut batches = Vec::new();
    let mut link_reports = Vec::new();
    let mut status = SealStatus::initial();
    let mut run_counts = PhaseBinnedCounts::default();
    let mut run_active_singles = 0u64;
    let mut run_reference_singles = 0u64;

    let mut start = cal_end;
    let mut index = 0u64;
    while start < plan.total_windows {
        let end = (start + a.batch_windows).min(plan.total_windows);
        let batch_events = sim.simulate_range(start, end, AttackMode::Live)?;
        let (active, reference) = split_by_receiver(&batch_events);
        let records = match_coincidences(&active, &reference, &timing)?;
        for r in &records {
            histogram.add(r.delta_t_ps);
        }
        let counts = PhaseBinnedCounts::from_records(&records);
        let observed = ObservedRates {
            n_windows: end - start,
            active_singles: active.len() as u64,
            reference_singles: reference.len() as u64,
            central_coincidences: counts.total(),
        };
        let rate = rate_monitor(&observed, &baseline);
        let span = (start, end - 1);
        let (estimate, verdict) = match estimate_visibility(&counts, span, a.min_counts) {
            Ok(est) => {
                let verdict = bell_threshold_test(&est, a.visibility_threshold, a.alpha);
                (Some(est), Some(verdict))
            }
            Err(AnalyticsError::InsufficientData { .. }) => (None, None),
            Err(other) => return Err(other.into()),
        };
        let outcome = BatchOutcome {
            window_span: span,
            estimate,
            verdict,
            rate,
        };
        status = update_seal_state(&status, &outcome, a.hysteresis_k);
        batches.push(BatchRecord {
            index,
            window_span: span,
            counts,
            active_singles: observed.active_singles,
            reference_singles: observed.reference_singles,
            outcome,
            status_after: status,
        });
        // Reports without an estimate carry zeros; consumers gate on the
        // state, which NoSignal/insufficient batches drive to Offline.
        link_reports.push(LinkHealthReport {
            timestamp_ps: setup.epoch_ps(end),
            link_id: monitored_link_id.clone(),
            state: status.state,
            v_hat: estimate.map_or(0.0, |e| e.v_hat),
            std_err: estimate.map_or(0.0, |e| e.std_err),
            n_central: counts.total(),
        });
        run_counts.add(&counts);
        run_active_singles += observed.active_singles;
        run_reference_singles += observed.reference_singles;
        events.extend(batch_events);
        start = end;
        index += 1;
    }

    let run_estimate = match estimate_visibility(
        &run_counts,
        (cal_end, plan.total_windows - 1),
        a.min_counts,
    ) {
        Ok(est) => Some(est),
        Err(AnalyticsError::InsufficientData { .. }) => None,
        Err(other) => return Err(other.into()),
    };

    Ok(RunExecution {
        seed,
        total_windows: plan.total_windows,
        calibration_windows: cal_end,
        events,
        baseline,
        batches,
        final_status: status,
        run_counts,
        run_active_singles,
        run_reference_singles,
        run_estimate,
        histogram,
        link_reports,
        monitored_link_id,
    })
}

/// Assemble the report document for an execution.
pub fn build_report(execution: &RunExecution) -> ReportDocument {
    ReportDocument {
        batches: execution
            .batches
            .iter()
            .map(|b| ReportBatchRow {
                batch_index: b.index,
                start_window: b.window_span.0,
                end_window: b.window_span.1,
                counts: b.counts,
                active_singles: b.active_singles,
                reference_singles: b.reference_singles,
                v_hat: b.outcome.estimate.map(|e| e.v_hat),
                std_err: b.outcome.estimate.map(|e| e.std_err),
                verdict: b.outcome.verdict,
                rate: b.outcome.rate,
                state: b.status_after.state,
            })
            .collect(),
        final_state: execution.final_status.state,
        run_windows: execution.total_windows,
        run_v_hat: execution.run_estimate.map(|e| e.v_hat),
        run_std_err: execution.run_estimate.map(|e| e.std_err),
        run_central: execution.run_counts.total(),
    }
}

/// Paths of the four files a run writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub events: PathBuf,
    pub histogram: PathBuf,
    pub report: PathBuf,
    pub link_reports: PathBuf,
}

/// Write all artifacts into the output directory (creating it), honoring
/// an optional directory override from the command line.
pub fn write_artifacts(
    execution: &RunExecution,
    output: &OutputParams,
    directory_override: Option<&Path>,
    debug_origins: bool,
) -> Result<ArtifactPaths, RunnerError> {
    let dir = directory_override
        .map_or_else(|| PathBuf::from(&output.directory), Path::to_path_buf);
    std::fs::create_dir_all(&dir)?;
    let paths = ArtifactPaths {
        events: dir.join(&output.events_file),
        histogram: dir.join(&output.histogram_file),
        report: dir.join(&output.report_file),
        link_reports: dir.join(&output.link_reports_file),
    };

    let mut events = Vec::new();
    write_event_log(&mut events, &execution.events, debug_origins)?;
    std::fs::write(&paths.events, events)?;

    let mut histogram = Vec::new();
    execution.histogram.write_csv(&mut histogram)?;
    std::fs::write(&paths.histogram, histogram)?;

    let mut report = Vec::new();
    write_report(&mut report, &build_report(execution))?;
    std::fs::write(&paths.report, report)?;

    let mut links = Vec::new();
    write_link_reports(&mut links, &execution.link_reports)?;
    std::fs::write(&paths.link_reports, links)?;

    Ok(paths)
}

/// What a route demo observed after replaying reports into the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteDemoOutcome {
    pub applied: usize,
    pub rejected_stale: usize,
    /// Monitored-link state after ingestion.
    pub link_state: SealState,
    pub gate: TransmissionGate,
    pub response: ResponseAction,
    pub route: Option<Vec<NodeId>>,
}

/// Replay link reports into (a copy of) the configured graph, then route
/// from `src` to `dst` under the configured policy.
pub fn route_demo(
    plan: &NetworkPlan,
    reports: &[LinkHealthReport],
    src: &str,
    dst: &str,
) -> Result<RouteDemoOutcome, RunnerError> {
    let mut graph = plan.graph.clone();
    let mut applied = 0;
    let mut rejected_stale = 0;
    for report in reports {
        match graph.ingest_report(report)? {
            crate::network::IngestOutcome::Applied => applied += 1,
            crate::network::IngestOutcome::RejectedStale => rejected_stale += 1,
        }
    }
    let link_state = graph.link_state(&plan.monitored_link_id)?;
    let gate = graph.gate_transmission(&plan.monitored_link_id)?;
    let route = graph.route(src, dst, &plan.policy)?;
    Ok(RouteDemoOutcome {
        applied,
        rejected_stale,
        link_state,
        gate,
        response: crate::network::escalate_policy(link_state),
        route,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{BellVerdict, RateVerdict};
    use crate::config::ScenarioConfig;
    use crate::logfmt::{parse_event_log, parse_link_reports, parse_report};

    /// Bright, low-loss scenario that settles into Normal quickly.
    /// Sized so every batch clears the 100-count fringe floor: the
    /// fringe classes collect about mu * T^2 * eta^2 / 16 counts per
    /// window, about 195 per 30000-window batch here.
    fn healthy_scenario() -> ValidatedScenario {
        let text = r#"
master_seed = 11
total_windows = 100000

[source]
mean_pairs_per_window = 0.2
visibility = 0.98

[channels.active]
loss_db = 0.5

[channels.reference]
loss_db = 0.5

[detectors]
efficiency = 0.9

[analytics]
batch_windows = 30000
calibration_fraction = 0.1
"#;
        ScenarioConfig::from_toml_str(text).unwrap().validate().unwrap()
    }

    #[test]
    fn healthy_run_settles_normal_and_matches_source_visibility() {
        let plan = healthy_scenario();
        let run = execute(&plan, None).unwrap();

        assert_eq!(run.calibration_windows, 10_000);
        assert_eq!(run.batches.len(), 3);
        assert_eq!(run.batches[0].window_span, (10_000, 39_999));
        assert_eq!(run.batches[2].window_span, (70_000, 99_999));

        for b in &run.batches {
            assert_eq!(b.outcome.verdict, Some(BellVerdict::Pass));
            assert_eq!(b.outcome.rate, RateVerdict::Nominal);
        }
        // Offline -> Normal after the k = 3 pass streak.
        assert_eq!(run.batches[1].status_after.state, SealState::Offline);
        assert_eq!(run.final_status.state, SealState::Normal);

        let est = run.run_estimate.expect("plenty of counts");
        assert!(
            (est.v_hat - 0.98).abs() < 4.0 * est.std_err,
            "v_hat = {} +- {}",
            est.v_hat,
            est.std_err
        );
        assert!(est.quadrature_consistent);

        // Link reports: one per batch, timestamps at batch-end epochs.
        assert_eq!(run.link_reports.len(), 3);
        assert_eq!(run.monitored_link_id, DEFAULT_LINK_ID);
        assert_eq!(run.link_reports[0].timestamp_ps, 40_000 * 1_000_000);
        assert_eq!(run.link_reports[2].state, SealState::Normal);

        // Histogram: central and side peaks populated, valley empty.
        assert!(run.histogram.mass_around(0, 100) > 500);
        assert!(run.histogram.mass_around(1000, 100) > 200);
        assert!(run.histogram.mass_around(500, 150) < 10);
    }

    #[test]
    fn cut_fiber_drives_offline() {
        let text = r#"
master_seed = 3
total_windows = 30000

[source]
mean_pairs_per_window = 0.2

[channels.active]
loss_db = 0.5

[channels.reference]
loss_db = 0.5

[detectors]
efficiency = 0.9

[analytics]
batch_windows = 9000
calibration_fraction = 0.1

[[attacks]]
kind = "cut_fiber"
start_window = 0
end_window = 30000
"#;
        let plan = ScenarioConfig::from_toml_str(text).unwrap().validate().unwrap();
        let run = execute(&plan, None).unwrap();
        // Calibration is suppressed, so the baseline still forms.
        assert_eq!(run.batches.len(), 3);
        for b in &run.batches {
            assert_eq!(b.outcome.rate, RateVerdict::NoSignal);
        }
        assert_eq!(run.final_status.state, SealState::Offline);
        // With the pair photons gone, the central peak is accidentals only.
        assert!(run.run_counts.total() < 10);
    }

    #[test]
    fn execution_is_deterministic_and_seed_sensitive() {
        let plan = healthy_scenario();
        let a = execute(&plan, None).unwrap();
        let b = execute(&plan, None).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(build_report(&a), build_report(&b));
        assert_eq!(a.link_reports, b.link_reports);
        assert_eq!(a.histogram, b.histogram);

        let c = execute(&plan, Some(999)).unwrap();
        assert_ne!(a.events, c.events);

        // The histogram rebuilt from the event log equals the run's own.
        assert_eq!(rebuild_histogram(&plan, &a.events).unwrap(), a.histogram);
    }

    #[test]
    fn artifacts_round_trip_and_are_reproducible() {
        let plan = healthy_scenario();
        let run = execute(&plan, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let paths = write_artifacts(&run, &plan.output, Some(dir.path()), true).unwrap();
        let paths2 = write_artifacts(&run, &plan.output, Some(dir2.path()), true).unwrap();

        for p in [&paths.events, &paths.histogram, &paths.report, &paths.link_reports] {
            assert!(p.exists(), "{p:?} missing");
        }
        // Byte-identical across directories.
        for (x, y) in [
            (&paths.events, &paths2.events),
            (&paths.histogram, &paths2.histogram),
            (&paths.report, &paths2.report),
            (&paths.link_reports, &paths2.link_reports),
        ] {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }

        let events = parse_event_log(&std::fs::read_to_string(&paths.events).unwrap()).unwrap();
        assert!(events.has_origins);
        assert_eq!(events.events, run.events);

        let report = parse_report(&std::fs::read_to_string(&paths.report).unwrap()).unwrap();
        assert_eq!(report, build_report(&run));
        assert_eq!(report.final_state, SealState::Normal);

        let links =
            parse_link_reports(&std::fs::read_to_string(&paths.link_reports).unwrap()).unwrap();
        assert_eq!(links, run.link_reports);
    }

    #[test]
    fn route_demo_replays_reports_and_detours() {
        let text = r#"
total_windows = 1000

[network]
nodes = ["A", "B", "C", "D"]
policy = "avoid_compromised"

[[network.links]]
a = "A"
b = "B"
cost = 1.0

[[network.links]]
a = "B"
b = "C"
cost = 1.0
sealed = true

[[network.links]]
a = "C"
b = "D"
cost = 1.0

[[network.links]]
a = "D"
b = "A"
cost = 1.0
"#;
        let plan = ScenarioConfig::from_toml_str(text).unwrap().validate().unwrap();
        let net = plan.network.as_ref().unwrap();
        assert_eq!(net.monitored_link_id, "B-C");

        let report = |ts: i64, state: SealState| LinkHealthReport {
            timestamp_ps: ts,
            link_id: "B-C".to_string(),
            state,
            v_hat: 0.5,
            std_err: 0.01,
            n_central: 400,
        };

        // Healthy reports: direct route.
        let outcome = route_demo(
            net,
            &[report(1, SealState::Normal), report(2, SealState::Normal)],
            "A",
            "C",
        )
        .unwrap();
        assert_eq!(outcome.applied, 2);
        assert_eq!(outcome.route, Some(vec!["A".into(), "B".into(), "C".into()]));
        assert_eq!(outcome.gate, TransmissionGate::Allow);
        assert_eq!(outcome.response, ResponseAction::Standard);

        // Compromise arrives last (with one stale replay in the stream).
        let outcome = route_demo(
            net,
            &[
                report(1, SealState::Normal),
                report(5, SealState::Compromised),
                report(3, SealState::Normal),
            ],
            "A",
            "C",
        )
        .unwrap();
        assert_eq!(outcome.applied, 2);
        assert_eq!(outcome.rejected_stale, 1);
        assert_eq!(outcome.link_state, SealState::Compromised);
        assert_eq!(outcome.route, Some(vec!["A".into(), "D".into(), "C".into()]));
        assert_eq!(outcome.gate, TransmissionGate::Block(SealState::Compromised));
        assert_eq!(outcome.response, ResponseAction::SuspendTraffic);

        // Reports for unknown links are an error, not silently skipped.
        let foreign = LinkHealthReport {
            link_id: "X-Y".to_string(),
            ..report(9, SealState::Normal)
        };
        assert!(route_demo(net, &[foreign], "A", "C").is_err());
    }
}
