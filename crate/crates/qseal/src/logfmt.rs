//! On-disk formats: event log, link-report CSV, run report, histogram.
//!
//! All formats are line-oriented text. Numbers use Rust's shortest
//! round-trip float formatting and plain integers, so write-then-parse
//! reproduces values exactly and repeated runs diff byte-for-byte.
//! Parsers are strict — wrong header, wrong field count, wrong label, or
//! a non-finite float is an error with the offending line number — since
//! these files cross trust boundaries between pipeline stages.

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::analytics::{BellVerdict, PhaseBinnedCounts, RateVerdict, SealState};
use crate::components::{DetectionEvent, EventOrigin, Receiver};
use crate::network::LinkHealthReport;

/// First line of every event log.
pub const EVENT_LOG_HEADER: &str = "# seal events v1";
/// Column header of the link-report CSV.
pub const LINK_REPORT_HEADER: &str = "timestamp_ps,link_id,state,v_hat,std_err,n_central";
/// First line of every run report.
pub const REPORT_HEADER: &str = "# seal run report v1";
/// Column header of the histogram CSV.
pub const HISTOGRAM_HEADER: &str = "bin_center_ps,count";

/// Errors from writing or parsing any of the formats.
#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line 1: expected header {expected:?}")]
    BadHeader { expected: &'static str },
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: field {field} has invalid integer {value:?}")]
    IntField {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: field {field} has invalid float {value:?}")]
    FloatField {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: field {field} has unknown label {value:?}")]
    BadLabel {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("missing trailer line {key:?}")]
    TrailerMissing { key: &'static str },
    #[error("line {line}: unexpected content after trailer")]
    AfterTrailer { line: usize },
    #[error("identifier {0:?} cannot be written: it contains a comma or line break")]
    IdUnwritable(String),
    #[error("histogram bin width {0} must be at least 1")]
    BinWidthInvalid(i64),
    #[error("histogram range {limit} must cover at least one bin of width {bin}")]
    RangeInvalid { limit: i64, bin: i64 },
}

fn parse_i64(line: usize, field: &'static str, value: &str) -> Result<i64, LogError> {
    value.parse().map_err(|_| LogError::IntField {
        line,
        field,
        value: value.to_string(),
    })
}

fn parse_u64(line: usize, field: &'static str, value: &str) -> Result<u64, LogError> {
    value.parse().map_err(|_| LogError::IntField {
        line,
        field,
        value: value.to_string(),
    })
}

fn parse_i32(line: usize, field: &'static str, value: &str) -> Result<i32, LogError> {
    value.parse().map_err(|_| LogError::IntField {
        line,
        field,
        value: value.to_string(),
    })
}

fn parse_f64(line: usize, field: &'static str, value: &str) -> Result<f64, LogError> {
    let parsed: f64 = value.parse().map_err(|_| LogError::FloatField {
        line,
        field,
        value: value.to_string(),
    })?;
    if !parsed.is_finite() {
        return Err(LogError::FloatField {
            line,
            field,
            value: value.to_string(),
        });
    }
    Ok(parsed)
}

fn check_id_writable(id: &str) -> Result<(), LogError> {
    if id.is_empty() || id.contains(',') || id.contains('\n') || id.contains('\r') {
        return Err(LogError::IdUnwritable(id.to_string()));
    }
    Ok(())
}

/// A parsed event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<DetectionEvent>,
    /// Whether the file carried the debug origin column. Without it,
    /// parsed events get `EventOrigin::Photon` as a placeholder.
    pub has_origins: bool,
}

/// Write the detection event log. With `debug_origins` each row carries
/// a fifth column naming what produced the click; production logs omit
/// it (real hardware cannot know).
pub fn write_event_log<W: Write>(
    w: &mut W,
    events: &[DetectionEvent],
    debug_origins: bool,
) -> Result<(), LogError> {
    writeln!(w, "{EVENT_LOG_HEADER}")?;
    if debug_origins {
        writeln!(w, "# columns: window,receiver,time_tag_ps,phase_mrad,origin")?;
    } else {
        writeln!(w, "# columns: window,receiver,time_tag_ps,phase_mrad")?;
    }
    for e in events {
        if debug_origins {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.window_index,
                e.receiver.label(),
                e.time_tag_ps,
                e.phase_mrad,
                e.origin.label()
            )?;
        } else {
            writeln!(
                w,
                "{},{},{},{}",
                e.window_index,
                e.receiver.label(),
                e.time_tag_ps,
                e.phase_mrad
            )?;
        }
    }
    Ok(())
}

/// Parse an event log. The first data row fixes the field count (4 plain,
/// 5 debug); every later row must match it.
pub fn parse_event_log(text: &str) -> Result<EventLog, LogError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == EVENT_LOG_HEADER => {}
        _ => {
            return Err(LogError::BadHeader {
                expected: EVENT_LOG_HEADER,
            })
        }
    }
    let mut events = Vec::new();
    let mut has_origins = None;
    for (index, line) in lines {
        let line_no = index + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = *has_origins.get_or_insert(fields.len() == 5);
        let expected_count = if expected { 5 } else { 4 };
        if fields.len() != expected_count {
            return Err(LogError::FieldCount {
                line: line_no,
                expected: expected_count,
                got: fields.len(),
            });
        }
        let receiver = Receiver::from_label(fields[1]).ok_or_else(|| LogError::BadLabel {
            line: line_no,
            field: "receiver",
            value: fields[1].to_string(),
        })?;
        let origin = if expected {
            EventOrigin::from_label(fields[4]).ok_or_else(|| LogError::BadLabel {
                line: line_no,
                field: "origin",
                value: fields[4].to_string(),
            })?
        } else {
            EventOrigin::Photon
        };
        events.push(DetectionEvent {
            window_index: parse_u64(line_no, "window", fields[0])?,
            receiver,
            time_tag_ps: parse_i64(line_no, "time_tag_ps", fields[2])?,
            phase_mrad: parse_i32(line_no, "phase_mrad", fields[3])?,
            origin,
        });
    }
    Ok(EventLog {
        events,
        has_origins: has_origins.unwrap_or(false),
    })
}

/// Write the link-report CSV consumed by the routing layer.
pub fn write_link_reports<W: Write>(
    w: &mut W,
    reports: &[LinkHealthReport],
) -> Result<(), LogError> {
    writeln!(w, "{LINK_REPORT_HEADER}")?;
    for r in reports {
        check_id_writable(&r.link_id)?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.timestamp_ps,
            r.link_id,
            r.state.label(),
            r.v_hat,
            r.std_err,
            r.n_central
        )?;
    }
    Ok(())
}

/// Parse a link-report CSV.
pub fn parse_link_reports(text: &str) -> Result<Vec<LinkHealthReport>, LogError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == LINK_REPORT_HEADER => {}
        _ => {
            return Err(LogError::BadHeader {
                expected: LINK_REPORT_HEADER,
            })
        }
    }
    let mut reports = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(LogError::FieldCount {
                line: line_no,
                expected: 6,
                got: fields.len(),
            });
        }
        let state = SealState::from_label(fields[2]).ok_or_else(|| LogError::BadLabel {
            line: line_no,
            field: "state",
            value: fields[2].to_string(),
        })?;
        reports.push(LinkHealthReport {
            timestamp_ps: parse_i64(line_no, "timestamp_ps", fields[0])?,
            link_id: fields[1].to_string(),
            state,
            v_hat: parse_f64(line_no, "v_hat", fields[3])?,
            std_err: parse_f64(line_no, "std_err", fields[4])?,
            n_central: parse_u64(line_no, "n_central", fields[5])?,
        });
    }
    Ok(reports)
}

/// Fixed-width histogram of coincidence time differences, centered on
/// zero: bin `k` covers time differences rounding to `k * bin_ps`.
/// Values beyond `limit_ps` are dropped (the plot covers the peak
/// region, not the whole window).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bin_ps: i64,
    limit_ps: i64,
    counts: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn new(bin_ps: i64, limit_ps: i64) -> Result<Self, LogError> {
        if bin_ps < 1 {
            return Err(LogError::BinWidthInvalid(bin_ps));
        }
        if limit_ps < bin_ps {
            return Err(LogError::RangeInvalid {
                limit: limit_ps,
                bin: bin_ps,
            });
        }
        Ok(Self {
            bin_ps,
            limit_ps,
            counts: BTreeMap::new(),
        })
    }

    /// Count one time difference; silently ignores values beyond the
    /// configured range.
    pub fn add(&mut self, delta_t_ps: i64) {
        if delta_t_ps.abs() > self.limit_ps {
            return;
        }
        // Round to nearest bin center (ties toward +inf), in integers.
        let index = (delta_t_ps + self.bin_ps.div_euclid(2)).div_euclid(self.bin_ps);
        *self.counts.entry(index).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Count in the bin whose center is nearest `delta_t_ps`.
    pub fn count_near(&self, delta_t_ps: i64) -> u64 {
        let index = (delta_t_ps + self.bin_ps.div_euclid(2)).div_euclid(self.bin_ps);
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// Sum of counts in bins whose centers lie within `half_span_ps` of
    /// `center_ps`.
    pub fn mass_around(&self, center_ps: i64, half_span_ps: i64) -> u64 {
        self.counts
            .iter()
            .filter(|(&idx, _)| (idx * self.bin_ps - center_ps).abs() <= half_span_ps)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Write the zero-filled CSV covering the full configured range.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<(), LogError> {
        writeln!(w, "{HISTOGRAM_HEADER}")?;
        let reach = self.limit_ps.div_euclid(self.bin_ps);
        for index in -reach..=reach {
            let count = self.counts.get(&index).copied().unwrap_or(0);
            writeln!(w, "{},{}", index * self.bin_ps, count)?;
        }
        Ok(())
    }
}

/// One batch row of the run report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportBatchRow {
    pub batch_index: u64,
    pub start_window: u64,
    pub end_window: u64,
    pub counts: PhaseBinnedCounts,
    pub active_singles: u64,
    pub reference_singles: u64,
    /// `None` when the batch had too few fringe counts to estimate.
    pub v_hat: Option<f64>,
    pub std_err: Option<f64>,
    pub verdict: Option<BellVerdict>,
    pub rate: RateVerdict,
    pub state: SealState,
}

/// A whole run report: batch rows plus the run-level trailer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub batches: Vec<ReportBatchRow>,
    pub final_state: SealState,
    pub run_windows: u64,
    /// Run-level estimate over all monitored batches combined, absent
    /// when even the whole run lacked fringe counts.
    pub run_v_hat: Option<f64>,
    pub run_std_err: Option<f64>,
    pub run_central: u64,
}

const REPORT_COLUMNS: &str = "batch,start_window,end_window,c_zero,c_quarter,c_half,\
                              c_three_quarter,c_other,active_singles,reference_singles,\
                              v_hat,std_err,verdict,rate,state";

fn fmt_opt_f64(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "-".to_string(),
    }
}

/// Write a run report.
pub fn write_report<W: Write>(w: &mut W, doc: &ReportDocument) -> Result<(), LogError> {
    writeln!(w, "{REPORT_HEADER}")?;
    writeln!(w, "# columns: {REPORT_COLUMNS}")?;
    for b in &doc.batches {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            b.batch_index,
            b.start_window,
            b.end_window,
            b.counts.c_zero,
            b.counts.c_quarter,
            b.counts.c_half,
            b.counts.c_three_quarter,
            b.counts.c_other,
            b.active_singles,
            b.reference_singles,
            fmt_opt_f64(b.v_hat),
            fmt_opt_f64(b.std_err),
            b.verdict.map_or("-", |v| v.label()),
            b.rate.label(),
            b.state.label()
        )?;
    }
    writeln!(w, "# run_windows: {}", doc.run_windows)?;
    writeln!(w, "# run_central: {}", doc.run_central)?;
    writeln!(w, "# run_v_hat: {}", fmt_opt_f64(doc.run_v_hat))?;
    writeln!(w, "# run_std_err: {}", fmt_opt_f64(doc.run_std_err))?;
    writeln!(w, "# final_state: {}", doc.final_state.label())?;
    Ok(())
}

fn parse_opt_f64(line: usize, field: &'static str, value: &str) -> Result<Option<f64>, LogError> {
    if value == "-" {
        Ok(None)
    } else {
        parse_f64(line, field, value).map(Some)
    }
}

/// Parse a run report.
pub fn parse_report(text: &str) -> Result<ReportDocument, LogError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == REPORT_HEADER => {}
        _ => {
            return Err(LogError::BadHeader {
                expected: REPORT_HEADER,
            })
        }
    }
    let mut batches = Vec::new();
    let mut final_state = None;
    let mut run_windows = None;
    let mut run_v_hat = None;
    let mut run_std_err = None;
    let mut run_central = None;
    for (index, line) in lines {
        let line_no = index + 1;
        if final_state.is_some() {
            // final_state is the closing line; nothing may follow.
            return Err(LogError::AfterTrailer { line: line_no });
        }
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            if let Some(v) = rest.strip_prefix("run_windows: ") {
                run_windows = Some(parse_u64(line_no, "run_windows", v)?);
            } else if let Some(v) = rest.strip_prefix("run_central: ") {
                run_central = Some(parse_u64(line_no, "run_central", v)?);
            } else if let Some(v) = rest.strip_prefix("run_v_hat: ") {
                run_v_hat = parse_opt_f64(line_no, "run_v_hat", v)?;
            } else if let Some(v) = rest.strip_prefix("run_std_err: ") {
                run_std_err = parse_opt_f64(line_no, "run_std_err", v)?;
            } else if let Some(v) = rest.strip_prefix("final_state: ") {
                final_state = Some(SealState::from_label(v).ok_or_else(|| {
                    LogError::BadLabel {
                        line: line_no,
                        field: "final_state",
                        value: v.to_string(),
                    }
                })?);
            }
            // Other comment lines (e.g. the column legend) are ignored.
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(LogError::FieldCount {
                line: line_no,
                expected: 15,
                got: fields.len(),
            });
        }
        let verdict = if fields[12] == "-" {
            None
        } else {
            Some(
                BellVerdict::from_label(fields[12]).ok_or_else(|| LogError::BadLabel {
                    line: line_no,
                    field: "verdict",
                    value: fields[12].to_string(),
                })?,
            )
        };
        let rate = RateVerdict::from_label(fields[13]).ok_or_else(|| LogError::BadLabel {
            line: line_no,
            field: "rate",
            value: fields[13].to_string(),
        })?;
        let state = SealState::from_label(fields[14]).ok_or_else(|| LogError::BadLabel {
            line: line_no,
            field: "state",
            value: fields[14].to_string(),
        })?;
        batches.push(ReportBatchRow {
            batch_index: parse_u64(line_no, "batch", fields[0])?,
            start_window: parse_u64(line_no, "start_window", fields[1])?,
            end_window: parse_u64(line_no, "end_window", fields[2])?,
            counts: PhaseBinnedCounts {
                c_zero: parse_u64(line_no, "c_zero", fields[3])?,
                c_quarter: parse_u64(line_no, "c_quarter", fields[4])?,
                c_half: parse_u64(line_no, "c_half", fields[5])?,
                c_three_quarter: parse_u64(line_no, "c_three_quarter", fields[6])?,
                c_other: parse_u64(line_no, "c_other", fields[7])?,
            },
            active_singles: parse_u64(line_no, "active_singles", fields[8])?,
            reference_singles: parse_u64(line_no, "reference_singles", fields[9])?,
            v_hat: parse_opt_f64(line_no, "v_hat", fields[10])?,
            std_err: parse_opt_f64(line_no, "std_err", fields[11])?,
            verdict,
            rate,
            state,
        });
    }
    Ok(ReportDocument {
        batches,
        final_state: final_state.ok_or(LogError::TrailerMissing { key: "final_state" })?,
        run_windows: run_windows.ok_or(LogError::TrailerMissing { key: "run_windows" })?,
        run_v_hat,
        run_std_err,
        run_central: run_central.ok_or(LogError::TrailerMissing { key: "run_central" })?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_events() -> Vec<DetectionEvent> {
        vec![
            DetectionEvent {
                window_index: 0,
                receiver: Receiver::Active,
                time_tag_ps: 50_123,
                phase_mrad: 1571,
                origin: EventOrigin::Photon,
            },
            DetectionEvent {
                window_index: 0,
                receiver: Receiver::Reference,
                time_tag_ps: 51_001,
                phase_mrad: 0,
                origin: EventOrigin::DarkCount,
            },
            DetectionEvent {
                window_index: 3,
                receiver: Receiver::Active,
                time_tag_ps: 3_049_800,
                phase_mrad: 4712,
                origin: EventOrigin::Spoof,
            },
        ]
    }

    #[test]
    fn event_log_debug_round_trip_is_exact() {
        let events = sample_events();
        let mut buf = Vec::new();
        write_event_log(&mut buf, &events, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed = parse_event_log(&text).unwrap();
        assert!(parsed.has_origins);
        assert_eq!(parsed.events, events);
    }

    #[test]
    fn event_log_plain_drops_origins() {
        let events = sample_events();
        let mut buf = Vec::new();
        write_event_log(&mut buf, &events, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("spoof"));
        let parsed = parse_event_log(&text).unwrap();
        assert!(!parsed.has_origins);
        assert!(parsed
            .events
            .iter()
            .all(|e| e.origin == EventOrigin::Photon));
        assert_eq!(parsed.events.len(), events.len());
        assert_eq!(parsed.events[2].time_tag_ps, 3_049_800);
    }

    #[test]
    fn event_log_rejects_malformed_input() {
        assert!(matches!(
            parse_event_log("not a header\n"),
            Err(LogError::BadHeader { .. })
        ));
        let bad_count = format!("{EVENT_LOG_HEADER}\n0,A,1,2,photon\n1,R,5,0\n");
        assert!(matches!(
            parse_event_log(&bad_count),
            Err(LogError::FieldCount { line: 3, .. })
        ));
        let bad_receiver = format!("{EVENT_LOG_HEADER}\n0,Q,1,2\n");
        assert!(matches!(
            parse_event_log(&bad_receiver),
            Err(LogError::BadLabel { field: "receiver", .. })
        ));
        let bad_int = format!("{EVENT_LOG_HEADER}\n0,A,1.5,2\n");
        assert!(matches!(
            parse_event_log(&bad_int),
            Err(LogError::IntField { field: "time_tag_ps", .. })
        ));
        // Empty log (header only) is valid.
        assert!(parse_event_log(&format!("{EVENT_LOG_HEADER}\n"))
            .unwrap()
            .events
            .is_empty());
    }

    #[test]
    fn link_reports_round_trip_and_validation() {
        let reports = vec![
            LinkHealthReport {
                timestamp_ps: 10_000_000_000,
                link_id: "hub-plant".to_string(),
                state: SealState::Normal,
                v_hat: 0.971_234_567_890_123_4,
                std_err: 0.012_3,
                n_central: 4812,
            },
            LinkHealthReport {
                timestamp_ps: 20_000_000_000,
                link_id: "hub-plant".to_string(),
                state: SealState::Compromised,
                v_hat: 0.031,
                std_err: 0.044,
                n_central: 3921,
            },
        ];
        let mut buf = Vec::new();
        write_link_reports(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(parse_link_reports(&text).unwrap(), reports);

        let with_comma = vec![LinkHealthReport {
            link_id: "a,b".to_string(),
            ..reports[0].clone()
        }];
        assert!(matches!(
            write_link_reports(&mut Vec::new(), &with_comma),
            Err(LogError::IdUnwritable(_))
        ));

        let nan_row = format!("{LINK_REPORT_HEADER}\n1,x-y,normal,NaN,0.1,5\n");
        assert!(matches!(
            parse_link_reports(&nan_row),
            Err(LogError::FloatField { field: "v_hat", .. })
        ));
        let bad_state = format!("{LINK_REPORT_HEADER}\n1,x-y,melted,0.5,0.1,5\n");
        assert!(matches!(
            parse_link_reports(&bad_state),
            Err(LogError::BadLabel { field: "state", .. })
        ));
    }

    #[test]
    fn histogram_binning_and_csv() {
        let mut h = Histogram::new(10, 1300).unwrap();
        for dt in [0, 3, -4, 995, 1004, -1000, 2000] {
            h.add(dt);
        }
        // 2000 is beyond the limit and dropped.
        assert_eq!(h.total(), 6);
        assert_eq!(h.count_near(0), 3);
        assert_eq!(h.count_near(1000), 2);
        assert_eq!(h.count_near(-1000), 1);

        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(HISTOGRAM_HEADER));
        // 2 * 130 + 1 zero-filled bins.
        assert_eq!(lines.clone().count(), 261);
        assert!(text.contains("\n0,3\n"));
        assert!(text.contains("\n1000,2\n"));
        assert!(text.contains("\n-1000,1\n"));
        assert!(text.contains("\n500,0\n"));

        assert!(Histogram::new(0, 100).is_err());
        assert!(Histogram::new(10, 5).is_err());
    }

    #[test]
    fn histogram_rounding_at_bin_edges() {
        let mut h = Histogram::new(10, 100).unwrap();
        // 5 rounds up to bin 1 (center 10); -5 rounds to bin 0.
        h.add(5);
        h.add(-5);
        h.add(4);
        assert_eq!(h.count_near(10), 1);
        assert_eq!(h.count_near(0), 2);
    }

    fn sample_report() -> ReportDocument {
        ReportDocument {
            batches: vec![
                ReportBatchRow {
                    batch_index: 0,
                    start_window: 20_000,
                    end_window: 29_999,
                    counts: PhaseBinnedCounts {
                        c_zero: 152,
                        c_quarter: 101,
                        c_half: 48,
                        c_three_quarter: 99,
                        c_other: 0,
                    },
                    active_singles: 2_100,
                    reference_singles: 3_150,
                    v_hat: Some(0.52),
                    std_err: Some(0.061_237_243_569_579_45),
                    verdict: Some(BellVerdict::Inconclusive),
                    rate: RateVerdict::Nominal,
                    state: SealState::Offline,
                },
                ReportBatchRow {
                    batch_index: 1,
                    start_window: 30_000,
                    end_window: 39_999,
                    counts: PhaseBinnedCounts::default(),
                    active_singles: 12,
                    reference_singles: 9,
                    v_hat: None,
                    std_err: None,
                    verdict: None,
                    rate: RateVerdict::NoSignal,
                    state: SealState::Offline,
                },
            ],
            final_state: SealState::Offline,
            run_windows: 20_000,
            run_v_hat: Some(0.52),
            run_std_err: Some(0.0612),
            run_central: 400,
        }
    }

    #[test]
    fn report_round_trip_is_exact() {
        let doc = sample_report();
        let mut buf = Vec::new();
        write_report(&mut buf, &doc).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(parse_report(&text).unwrap(), doc);
    }

    #[test]
    fn report_parser_strictness() {
        assert!(matches!(
            parse_report("# wrong\n"),
            Err(LogError::BadHeader { .. })
        ));
        // Missing trailer.
        let no_trailer = format!("{REPORT_HEADER}\n");
        assert!(matches!(
            parse_report(&no_trailer),
            Err(LogError::TrailerMissing { .. })
        ));
        // Content after final_state.
        let after = format!(
            "{REPORT_HEADER}\n# run_windows: 10\n# run_central: 5\n# final_state: normal\n# run_v_hat: 0.5\n"
        );
        assert!(matches!(
            parse_report(&after),
            Err(LogError::AfterTrailer { .. })
        ));
        // Bad verdict label.
        let bad = format!(
            "{REPORT_HEADER}\n0,0,9,1,1,1,1,0,5,5,0.1,0.1,maybe,nominal,normal\n\
             # run_windows: 10\n# run_central: 4\n# final_state: normal\n"
        );
        assert!(matches!(
            parse_report(&bad),
            Err(LogError::BadLabel { field: "verdict", .. })
        ));
    }

    proptest! {
        #[test]
        fn event_log_round_trips_any_events(
            rows in proptest::collection::vec(
                (0u64..u64::MAX / 2, 0u8..2, any::<i64>(), -7000i32..7000, 0u8..3),
                0..40,
            ),
            debug in any::<bool>(),
        ) {
            let mut events: Vec<DetectionEvent> = rows
                .into_iter()
                .map(|(w, r, t, p, o)| DetectionEvent {
                    window_index: w,
                    receiver: if r == 0 { Receiver::Active } else { Receiver::Reference },
                    time_tag_ps: t,
                    phase_mrad: p,
                    origin: match o {
                        0 => EventOrigin::Photon,
                        1 => EventOrigin::DarkCount,
                        _ => EventOrigin::Spoof,
                    },
                })
                .collect();
            if !debug {
                for e in &mut events {
                    e.origin = EventOrigin::Photon;
                }
            }
            let mut buf = Vec::new();
            write_event_log(&mut buf, &events, debug).unwrap();
            let parsed = parse_event_log(&String::from_utf8(buf).unwrap()).unwrap();
            prop_assert_eq!(parsed.events, events);
        }

        #[test]
        fn link_reports_round_trip_any_values(
            rows in proptest::collection::vec(
                (any::<i64>(), 0u8..4, -1.0f64..1.0, 0.0f64..0.5, any::<u64>()),
                0..20,
            ),
        ) {
            let reports: Vec<LinkHealthReport> = rows
                .into_iter()
                .map(|(ts, s, v, e, n)| LinkHealthReport {
                    timestamp_ps: ts,
                    link_id: "x-y".to_string(),
                    state: match s {
                        0 => SealState::Normal,
                        1 => SealState::Degraded,
                        2 => SealState::Compromised,
                        _ => SealState::Offline,
                    },
                    v_hat: v,
                    std_err: e,
                    n_central: n,
                })
                .collect();
            let mut buf = Vec::new();
            write_link_reports(&mut buf, &reports).unwrap();
            let parsed = parse_link_reports(&String::from_utf8(buf).unwrap()).unwrap();
            prop_assert_eq!(parsed, reports);
        }
    }
}
