//! Shared helpers for the integration suites: an amplitude-enumeration
//! oracle for the pair statistics, a chi-square goodness-of-fit helper,
//! and an exhaustive all-simple-paths router to check routing against.
//!
//! The oracle deliberately shares no arithmetic with the library: it
//! builds the nine joint-exit probabilities from single-photon transfer
//! amplitudes and sums two-photon alternatives coherently only where
//! the detection times cannot distinguish them.

#![allow(dead_code)]

use num_complex::Complex64;
use qseal::config::{ScenarioConfig, ValidatedScenario};
use qseal::network::{Link, LinkKind, NetworkGraph, RoutePolicy};
use qseal::optics::PortOutcome;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Path {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Port {
    Monitored,
    Unmonitored,
}

/// Transfer amplitude of one photon through one unbalanced
/// interferometer: a 1/sqrt(2) input splitter, the long-arm phase
/// modulator, and a 1/sqrt(2) output splitter whose second port picks up
/// the reflection sign flip that unitarity of a lossless 2x2 coupler
/// forces. Long-path light reaches the monitored detector with
/// amplitude (1/2)e^{i phi} and the unmonitored port with -(1/2)e^{i phi}.
fn transfer_amplitude(path: Path, port: Port, phi: f64) -> Complex64 {
    let half = Complex64::new(0.5, 0.0);
    match (path, port) {
        (Path::Short, _) => half,
        (Path::Long, Port::Monitored) => half * Complex64::cis(phi),
        (Path::Long, Port::Unmonitored) => -half * Complex64::cis(phi),
    }
}

/// Exit label of one photon given its port and (for monitored exits) the
/// time slot its path produced.
fn exit_label(port: Port, path: Path) -> PortOutcome {
    match (port, path) {
        (Port::Monitored, Path::Short) => PortOutcome::ShortDetected,
        (Port::Monitored, Path::Long) => PortOutcome::LongDetected,
        (Port::Unmonitored, _) => PortOutcome::Unmonitored,
    }
}

const PORTS: [Port; 2] = [Port::Monitored, Port::Unmonitored];

/// The nine joint-exit probabilities for a pair of interference
/// visibility `v` with modulator settings `phi_a`, `phi_b`, enumerated
/// from two-photon amplitudes.
///
/// For each port pair, the short-short and long-long alternatives land
/// in the same (central) time slot, so their amplitudes add; at the
/// monitored ports these two-photon weights are 1/4 and (1/4)e^{i(phi_a
/// + phi_b)}. A fraction `1 - v` of pairs has lost coherence and
/// contributes the same alternatives incoherently. Short-long and
/// long-short land in distinguishable side slots and always add
/// incoherently. The central mass of a port pair is split evenly between
/// its short-short and long-long exit labels, which share one time slot.
pub fn oracle_cells(v: f64, phi_a: f64, phi_b: f64) -> [((PortOutcome, PortOutcome), f64); 9] {
    assert!((0.0..=1.0).contains(&v), "visibility out of range: {v}");
    let mut mass: BTreeMap<(u8, u8), f64> = BTreeMap::new();
    let mut add = |a: PortOutcome, b: PortOutcome, p: f64| {
        *mass.entry((cell_index(a), cell_index(b))).or_insert(0.0) += p;
    };

    for port_a in PORTS {
        for port_b in PORTS {
            let pair_amp = |path: Path| {
                transfer_amplitude(path, port_a, phi_a) * transfer_amplitude(path, port_b, phi_b)
            };
            let short_short = pair_amp(Path::Short);
            let long_long = pair_amp(Path::Long);

            let coherent = (short_short + long_long).norm_sqr();
            let incoherent = short_short.norm_sqr() + long_long.norm_sqr();
            let central = v * coherent + (1.0 - v) * incoherent;
            add(
                exit_label(port_a, Path::Short),
                exit_label(port_b, Path::Short),
                central / 2.0,
            );
            add(
                exit_label(port_a, Path::Long),
                exit_label(port_b, Path::Long),
                central / 2.0,
            );

            let early = transfer_amplitude(Path::Short, port_a, phi_a)
                * transfer_amplitude(Path::Long, port_b, phi_b);
            add(
                exit_label(port_a, Path::Short),
                exit_label(port_b, Path::Long),
                early.norm_sqr(),
            );
            let late = transfer_amplitude(Path::Long, port_a, phi_a)
                * transfer_amplitude(Path::Short, port_b, phi_b);
            add(
                exit_label(port_a, Path::Long),
                exit_label(port_b, Path::Short),
                late.norm_sqr(),
            );
        }
    }

    ALL_CELLS.map(|(a, b)| {
        let p = mass.get(&(cell_index(a), cell_index(b))).copied().unwrap_or(0.0);
        ((a, b), p)
    })
}

/// Cell order used by `PortPathDistribution::cells`, for side-by-side
/// comparison.
pub const ALL_CELLS: [(PortOutcome, PortOutcome); 9] = [
    (PortOutcome::ShortDetected, PortOutcome::ShortDetected),
    (PortOutcome::ShortDetected, PortOutcome::LongDetected),
    (PortOutcome::ShortDetected, PortOutcome::Unmonitored),
    (PortOutcome::LongDetected, PortOutcome::ShortDetected),
    (PortOutcome::LongDetected, PortOutcome::LongDetected),
    (PortOutcome::LongDetected, PortOutcome::Unmonitored),
    (PortOutcome::Unmonitored, PortOutcome::ShortDetected),
    (PortOutcome::Unmonitored, PortOutcome::LongDetected),
    (PortOutcome::Unmonitored, PortOutcome::Unmonitored),
];

/// Stable index of a cell label, used both as map key and to map a
/// sampled outcome onto the `ALL_CELLS` ordering.
pub fn cell_index(outcome: PortOutcome) -> u8 {
    match outcome {
        PortOutcome::ShortDetected => 0,
        PortOutcome::LongDetected => 1,
        PortOutcome::Unmonitored => 2,
    }
}

/// Marginal exit probability of the first photon, from the oracle's
/// joint law.
pub fn oracle_marginal_a(v: f64, phi_a: f64, phi_b: f64, outcome: PortOutcome) -> f64 {
    oracle_cells(v, phi_a, phi_b)
        .iter()
        .filter(|((a, _), _)| *a == outcome)
        .map(|(_, p)| p)
        .sum()
}

/// Pearson chi-square p-value of observed counts against expected
/// counts. Cells with (near-)zero expectation must be empty and are
/// dropped; degrees of freedom are the remaining cells minus one.
pub fn chi_square_p(observed: &[u64], expected_counts: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_counts.len());
    let mut statistic = 0.0;
    let mut kept = 0usize;
    for (&obs, &exp) in observed.iter().zip(expected_counts) {
        if exp < 1e-6 {
            assert_eq!(obs, 0, "impossible cell drew {obs} samples");
            continue;
        }
        let diff = obs as f64 - exp;
        statistic += diff * diff / exp;
        kept += 1;
    }
    assert!(kept >= 2, "chi-square needs at least two live cells");
    let dof = (kept - 1) as f64;
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    1.0 - dist.cdf(statistic)
}

/// Effective link cost under a policy, restated from the routing rules:
/// unmonitored links always cost face value; `RequireNormalSeals` bars
/// sealed links not in `Normal`; `AvoidCompromised` bars `Compromised`;
/// `CostPenalty` multiplies non-`Normal` sealed links by its factor.
fn policy_cost(link: &Link, policy: &RoutePolicy) -> Option<f64> {
    use qseal::analytics::SealState;
    match link.kind {
        LinkKind::Unmonitored => Some(link.cost),
        LinkKind::Sealed { state, .. } => match policy {
            RoutePolicy::RequireNormalSeals => (state == SealState::Normal).then_some(link.cost),
            RoutePolicy::AvoidCompromised => (state != SealState::Compromised).then_some(link.cost),
            RoutePolicy::CostPenalty { factor } => Some(if state == SealState::Normal {
                link.cost
            } else {
                link.cost * factor
            }),
        },
    }
}

/// Exhaustively enumerate every simple path from `src` to `dst` and
/// return the cheapest (ties broken by lexicographically smallest node
/// sequence), or `None` if no usable path exists. Exponential, so only
/// for small graphs.
pub fn exhaustive_best_route(
    graph: &NetworkGraph,
    src: &str,
    dst: &str,
    policy: &RoutePolicy,
) -> Option<(f64, Vec<String>)> {
    let mut adjacency: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for (_, link) in graph.links() {
        if let Some(cost) = policy_cost(link, policy) {
            adjacency.entry(&link.a).or_default().push((&link.b, cost));
            adjacency.entry(&link.b).or_default().push((&link.a, cost));
        }
    }

    let mut best: Option<(f64, Vec<String>)> = None;
    let mut path = vec![src.to_string()];
    walk(&adjacency, src, dst, &mut path, 0.0, &mut best);
    best
}

fn walk(
    adjacency: &BTreeMap<&str, Vec<(&str, f64)>>,
    node: &str,
    dst: &str,
    path: &mut Vec<String>,
    cost: f64,
    best: &mut Option<(f64, Vec<String>)>,
) {
    if node == dst {
        let candidate = (cost, path.clone());
        let better = match best {
            None => true,
            Some((best_cost, best_path)) => match cost.total_cmp(best_cost) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => path < best_path,
                std::cmp::Ordering::Greater => false,
            },
        };
        if better {
            *best = Some(candidate);
        }
        return;
    }
    let Some(neighbors) = adjacency.get(node) else {
        return;
    };
    for &(next, step) in neighbors {
        if path.iter().any(|seen| seen == next) {
            continue;
        }
        path.push(next.to_string());
        walk(adjacency, next, dst, path, cost + step, best);
        path.pop();
    }
}

/// Parse and validate a scenario from TOML text, panicking with the
/// error on failure.
pub fn plan_from_toml(text: &str) -> ValidatedScenario {
    ScenarioConfig::from_toml_str(text)
        .expect("scenario parses")
        .validate()
        .expect("scenario validates")
}

/// Path to a checked-in scenario file at the repository root.
pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}
