//! Routing layer that consumes seal states.
//!
//! A [`NetworkGraph`] holds nodes and undirected links; some links carry a
//! seal and track its latest reported [`SealState`]. Seal monitors push
//! [`LinkHealthReport`]s in via [`NetworkGraph::ingest_report`] (stale
//! reports are rejected and audited, never applied out of order), traffic
//! admission per link comes from [`NetworkGraph::gate_transmission`], and
//! [`NetworkGraph::route`] finds cheapest paths under a [`RoutePolicy`]
//! that decides how non-`Normal` seals affect link usability or cost.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::SealState;

/// Node identifier (free-form, compared lexicographically for route
/// tie-breaking).
pub type NodeId = String;

/// Errors from graph construction, report ingestion, and routing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("node {0:?} already exists")]
    DuplicateNode(String),
    #[error("node {0:?} does not exist")]
    UnknownNode(String),
    #[error("link {0:?} already exists")]
    DuplicateLink(String),
    #[error("link {0:?} does not exist")]
    UnknownLink(String),
    #[error("link endpoints must differ, got {0:?} twice")]
    SelfLoop(String),
    #[error("link cost {0} must be positive and finite")]
    CostInvalid(f64),
    #[error("link {0:?} carries no seal")]
    NotSealed(String),
    #[error("cost penalty factor {0} must be finite and > 1")]
    PenaltyInvalid(f64),
}

/// Canonical identifier of the undirected link between `a` and `b`:
/// endpoints sorted and joined with `-`, so both orientations name the
/// same link.
pub fn link_id(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}-{b}")
    } else {
        format!("{b}-{a}")
    }
}

/// Whether a link carries a seal, and if so its tracked state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    /// Plain link: never gated, always usable.
    Unmonitored,
    Sealed {
        state: SealState,
        /// Timestamp of the newest applied report, for staleness checks.
        last_timestamp_ps: Option<i64>,
    },
}

/// One undirected link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub cost: f64,
    pub kind: LinkKind,
}

impl Link {
    /// The endpoint opposite `node`, if `node` is an endpoint.
    pub fn other_end(&self, node: &str) -> Option<&NodeId> {
        if self.a == node {
            Some(&self.b)
        } else if self.b == node {
            Some(&self.a)
        } else {
            None
        }
    }
}

/// A seal monitor's digest of one analysis batch, as shipped to the
/// routing layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkHealthReport {
    /// End of the contributing batch, picoseconds on the seal clock.
    pub timestamp_ps: i64,
    pub link_id: String,
    pub state: SealState,
    pub v_hat: f64,
    pub std_err: f64,
    pub n_central: u64,
}

/// Whether an ingested report changed anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IngestOutcome {
    Applied,
    /// Report not newer than the last applied one; state untouched.
    RejectedStale,
}

/// Audit record of one ingestion attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub timestamp_ps: i64,
    pub link_id: String,
    pub outcome: IngestOutcome,
    /// Link state after the attempt (unchanged for rejected reports).
    pub state_after: SealState,
}

/// Per-link traffic admission decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmissionGate {
    Allow,
    /// Sealed link not in `Normal`; carries the offending state.
    Block(SealState),
}

/// Network-wide response tier for a given seal state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseAction {
    Standard,
    EnhancedEncryptionRequired,
    SuspendTraffic,
}

/// Map a seal state to the response its traffic gets.
pub fn escalate_policy(state: SealState) -> ResponseAction {
    match state {
        SealState::Normal => ResponseAction::Standard,
        SealState::Degraded => ResponseAction::EnhancedEncryptionRequired,
        SealState::Compromised | SealState::Offline => ResponseAction::SuspendTraffic,
    }
}

/// How routing treats links whose seal is not `Normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RoutePolicy {
    /// Only unmonitored links and sealed links in `Normal` are usable.
    RequireNormalSeals,
    /// Sealed links in `Compromised` are unusable; everything else keeps
    /// its cost.
    AvoidCompromised,
    /// All links usable; sealed links not in `Normal` cost `factor`
    /// times more.
    CostPenalty { factor: f64 },
}

/// Undirected graph with seal-aware links and an ingestion audit log.
#[derive(Debug, Clone, Default)]
pub struct NetworkGraph {
    nodes: BTreeSet<NodeId>,
    links: BTreeMap<String, Link>,
    /// node -> neighbor -> link id (deterministic iteration order).
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, String>>,
    audit: Vec<AuditEntry>,
}

impl NetworkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<NodeId>) -> Result<(), NetworkError> {
        let id = id.into();
        if !self.nodes.insert(id.clone()) {
            return Err(NetworkError::DuplicateNode(id));
        }
        self.adjacency.insert(id, BTreeMap::new());
        Ok(())
    }

    /// Add an undirected link. `initial_state` applies only to sealed
    /// links; an unmonitored link has no state to set.
    pub fn add_link(
        &mut self,
        a: &str,
        b: &str,
        cost: f64,
        sealed: bool,
        initial_state: SealState,
    ) -> Result<String, NetworkError> {
        if a == b {
            return Err(NetworkError::SelfLoop(a.to_string()));
        }
        for node in [a, b] {
            if !self.nodes.contains(node) {
                return Err(NetworkError::UnknownNode(node.to_string()));
            }
        }
        if !cost.is_finite() || cost <= 0.0 {
            return Err(NetworkError::CostInvalid(cost));
        }
        let id = link_id(a, b);
        if self.links.contains_key(&id) {
            return Err(NetworkError::DuplicateLink(id));
        }
        let kind = if sealed {
            LinkKind::Sealed {
                state: initial_state,
                last_timestamp_ps: None,
            }
        } else {
            LinkKind::Unmonitored
        };
        self.links.insert(
            id.clone(),
            Link {
                a: a.to_string(),
                b: b.to_string(),
                cost,
                kind,
            },
        );
        self.adjacency
            .get_mut(a)
            .expect("endpoint exists")
            .insert(b.to_string(), id.clone());
        self.adjacency
            .get_mut(b)
            .expect("endpoint exists")
            .insert(a.to_string(), id.clone());
        Ok(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn links(&self) -> impl Iterator<Item = (&String, &Link)> {
        self.links.iter()
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.get(id)
    }

    /// Current seal state of a sealed link.
    pub fn link_state(&self, id: &str) -> Result<SealState, NetworkError> {
        let link = self
            .links
            .get(id)
            .ok_or_else(|| NetworkError::UnknownLink(id.to_string()))?;
        match link.kind {
            LinkKind::Sealed { state, .. } => Ok(state),
            LinkKind::Unmonitored => Err(NetworkError::NotSealed(id.to_string())),
        }
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// Apply a seal report. Reports must arrive strictly forward in time
    /// per link; a report whose timestamp does not exceed the last
    /// applied one is rejected (and audited) rather than applied.
    pub fn ingest_report(
        &mut self,
        report: &LinkHealthReport,
    ) -> Result<IngestOutcome, NetworkError> {
        let link = self
            .links
            .get_mut(&report.link_id)
            .ok_or_else(|| NetworkError::UnknownLink(report.link_id.clone()))?;
        let LinkKind::Sealed {
            state,
            last_timestamp_ps,
        } = &mut link.kind
        else {
            return Err(NetworkError::NotSealed(report.link_id.clone()));
        };
        let outcome = if last_timestamp_ps.is_some_and(|t| report.timestamp_ps <= t) {
            IngestOutcome::RejectedStale
        } else {
            *state = report.state;
            *last_timestamp_ps = Some(report.timestamp_ps);
            IngestOutcome::Applied
        };
        self.audit.push(AuditEntry {
            timestamp_ps: report.timestamp_ps,
            link_id: report.link_id.clone(),
            outcome,
            state_after: *state,
        });
        Ok(outcome)
    }

    /// Traffic admission for one link: sealed links admit traffic only in
    /// `Normal`; unmonitored links always admit.
    pub fn gate_transmission(&self, id: &str) -> Result<TransmissionGate, NetworkError> {
        let link = self
            .links
            .get(id)
            .ok_or_else(|| NetworkError::UnknownLink(id.to_string()))?;
        Ok(match link.kind {
            LinkKind::Unmonitored
            | LinkKind::Sealed {
                state: SealState::Normal,
                ..
            } => TransmissionGate::Allow,
            LinkKind::Sealed { state, .. } => TransmissionGate::Block(state),
        })
    }

    /// Effective cost of a link under a policy; `None` means unusable.
    fn effective_cost(&self, link: &Link, policy: &RoutePolicy) -> Option<f64> {
        match (&link.kind, policy) {
            (LinkKind::Unmonitored, _) => Some(link.cost),
            (LinkKind::Sealed { state, .. }, RoutePolicy::RequireNormalSeals) => {
                (*state == SealState::Normal).then_some(link.cost)
            }
            (LinkKind::Sealed { state, .. }, RoutePolicy::AvoidCompromised) => {
                (*state != SealState::Compromised).then_some(link.cost)
            }
            (LinkKind::Sealed { state, .. }, RoutePolicy::CostPenalty { factor }) => {
                if *state == SealState::Normal {
                    Some(link.cost)
                } else {
                    Some(link.cost * factor)
                }
            }
        }
    }

    /// Cheapest path from `src` to `dst` under `policy`, or `None` when
    /// no usable path exists. Among equal-cost paths the lexicographically
    /// smallest node sequence wins, so routes are deterministic.
    pub fn route(
        &self,
        src: &str,
        dst: &str,
        policy: &RoutePolicy,
    ) -> Result<Option<Vec<NodeId>>, NetworkError> {
        if let RoutePolicy::CostPenalty { factor } = policy {
            if !factor.is_finite() || *factor <= 1.0 {
                return Err(NetworkError::PenaltyInvalid(*factor));
            }
        }
        for node in [src, dst] {
            if !self.nodes.contains(node) {
                return Err(NetworkError::UnknownNode(node.to_string()));
            }
        }
        if src == dst {
            return Ok(Some(vec![src.to_string()]));
        }

        let mut heap = BinaryHeap::new();
        let mut done: BTreeSet<NodeId> = BTreeSet::new();
        heap.push(std::cmp::Reverse(QueueEntry {
            cost: 0.0,
            path: vec![src.to_string()],
        }));
        while let Some(std::cmp::Reverse(entry)) = heap.pop() {
            let node = entry.path.last().expect("paths are non-empty").clone();
            if node == dst {
                return Ok(Some(entry.path));
            }
            if !done.insert(node.clone()) {
                continue;
            }
            for (neighbor, id) in &self.adjacency[&node] {
                if done.contains(neighbor) {
                    continue;
                }
                let link = &self.links[id];
                let Some(step) = self.effective_cost(link, policy) else {
                    continue;
                };
                let mut path = entry.path.clone();
                path.push(neighbor.clone());
                heap.push(std::cmp::Reverse(QueueEntry {
                    cost: entry.cost + step,
                    path,
                }));
            }
        }
        Ok(None)
    }
}

/// Heap key: total cost, then lexicographic path.
#[derive(Debug, Clone)]
struct QueueEntry {
    cost: f64,
    path: Vec<NodeId>,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.path.cmp(&other.path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring() -> NetworkGraph {
        // A - B
        // |   |
        // D - C    all cost 1, B-C sealed, rest unmonitored
        let mut g = NetworkGraph::new();
        for n in ["A", "B", "C", "D"] {
            g.add_node(n).unwrap();
        }
        g.add_link("A", "B", 1.0, false, SealState::Normal).unwrap();
        g.add_link("B", "C", 1.0, true, SealState::Normal).unwrap();
        g.add_link("C", "D", 1.0, false, SealState::Normal).unwrap();
        g.add_link("D", "A", 1.0, false, SealState::Normal).unwrap();
        g
    }

    fn report(ts: i64, id: &str, state: SealState) -> LinkHealthReport {
        LinkHealthReport {
            timestamp_ps: ts,
            link_id: id.to_string(),
            state,
            v_hat: 0.5,
            std_err: 0.05,
            n_central: 400,
        }
    }

    #[test]
    fn link_id_is_canonical() {
        assert_eq!(link_id("hub", "plant"), "hub-plant");
        assert_eq!(link_id("plant", "hub"), "hub-plant");
    }

    #[test]
    fn construction_validation() {
        let mut g = NetworkGraph::new();
        g.add_node("A").unwrap();
        assert!(matches!(g.add_node("A"), Err(NetworkError::DuplicateNode(_))));
        g.add_node("B").unwrap();
        assert!(matches!(
            g.add_link("A", "A", 1.0, false, SealState::Normal),
            Err(NetworkError::SelfLoop(_))
        ));
        assert!(matches!(
            g.add_link("A", "Z", 1.0, false, SealState::Normal),
            Err(NetworkError::UnknownNode(_))
        ));
        assert!(matches!(
            g.add_link("A", "B", 0.0, false, SealState::Normal),
            Err(NetworkError::CostInvalid(_))
        ));
        g.add_link("A", "B", 1.0, false, SealState::Normal).unwrap();
        assert!(matches!(
            g.add_link("B", "A", 2.0, false, SealState::Normal),
            Err(NetworkError::DuplicateLink(_))
        ));
    }

    #[test]
    fn ingest_applies_then_rejects_stale() {
        let mut g = ring();
        assert_eq!(
            g.ingest_report(&report(100, "B-C", SealState::Compromised)).unwrap(),
            IngestOutcome::Applied
        );
        assert_eq!(g.link_state("B-C").unwrap(), SealState::Compromised);

        // Same timestamp: stale, state unchanged.
        assert_eq!(
            g.ingest_report(&report(100, "B-C", SealState::Normal)).unwrap(),
            IngestOutcome::RejectedStale
        );
        assert_eq!(g.link_state("B-C").unwrap(), SealState::Compromised);

        // Earlier timestamp: stale too.
        assert_eq!(
            g.ingest_report(&report(50, "B-C", SealState::Normal)).unwrap(),
            IngestOutcome::RejectedStale
        );

        // Newer: applied.
        assert_eq!(
            g.ingest_report(&report(200, "B-C", SealState::Normal)).unwrap(),
            IngestOutcome::Applied
        );
        assert_eq!(g.link_state("B-C").unwrap(), SealState::Normal);

        let audit = g.audit_log();
        assert_eq!(audit.len(), 4);
        assert_eq!(audit[1].outcome, IngestOutcome::RejectedStale);
        assert_eq!(audit[1].state_after, SealState::Compromised);
        assert_eq!(audit[3].outcome, IngestOutcome::Applied);

        assert!(matches!(
            g.ingest_report(&report(300, "X-Y", SealState::Normal)),
            Err(NetworkError::UnknownLink(_))
        ));
        assert!(matches!(
            g.ingest_report(&report(300, "A-B", SealState::Normal)),
            Err(NetworkError::NotSealed(_))
        ));
    }

    #[test]
    fn gate_and_escalation() {
        let mut g = ring();
        assert_eq!(g.gate_transmission("A-B").unwrap(), TransmissionGate::Allow);
        assert_eq!(g.gate_transmission("B-C").unwrap(), TransmissionGate::Allow);
        g.ingest_report(&report(1, "B-C", SealState::Degraded)).unwrap();
        assert_eq!(
            g.gate_transmission("B-C").unwrap(),
            TransmissionGate::Block(SealState::Degraded)
        );
        assert!(g.gate_transmission("nope").is_err());

        assert_eq!(escalate_policy(SealState::Normal), ResponseAction::Standard);
        assert_eq!(
            escalate_policy(SealState::Degraded),
            ResponseAction::EnhancedEncryptionRequired
        );
        assert_eq!(
            escalate_policy(SealState::Compromised),
            ResponseAction::SuspendTraffic
        );
        assert_eq!(escalate_policy(SealState::Offline), ResponseAction::SuspendTraffic);
    }

    #[test]
    fn routing_detours_around_bad_seal() {
        let mut g = ring();
        // Healthy seal: both 2-hop paths tie on cost; lex picks A-B-C.
        let path = g.route("A", "C", &RoutePolicy::AvoidCompromised).unwrap();
        assert_eq!(path, Some(vec!["A".into(), "B".into(), "C".into()]));

        g.ingest_report(&report(1, "B-C", SealState::Compromised)).unwrap();
        let path = g.route("A", "C", &RoutePolicy::AvoidCompromised).unwrap();
        assert_eq!(path, Some(vec!["A".into(), "D".into(), "C".into()]));

        // Degraded blocks under RequireNormalSeals but not AvoidCompromised.
        g.ingest_report(&report(2, "B-C", SealState::Degraded)).unwrap();
        let strict = g.route("A", "C", &RoutePolicy::RequireNormalSeals).unwrap();
        assert_eq!(strict, Some(vec!["A".into(), "D".into(), "C".into()]));
        let relaxed = g.route("A", "C", &RoutePolicy::AvoidCompromised).unwrap();
        assert_eq!(relaxed, Some(vec!["A".into(), "B".into(), "C".into()]));

        // A large penalty drives the route away without forbidding it.
        let penalized = g
            .route("A", "C", &RoutePolicy::CostPenalty { factor: 10.0 })
            .unwrap();
        assert_eq!(penalized, Some(vec!["A".into(), "D".into(), "C".into()]));
        assert!(matches!(
            g.route("A", "C", &RoutePolicy::CostPenalty { factor: 1.0 }),
            Err(NetworkError::PenaltyInvalid(_))
        ));
    }

    #[test]
    fn route_edge_cases() {
        let mut g = ring();
        assert_eq!(
            g.route("B", "B", &RoutePolicy::RequireNormalSeals).unwrap(),
            Some(vec!["B".into()])
        );
        assert!(g.route("A", "Z", &RoutePolicy::RequireNormalSeals).is_err());

        // Isolate C entirely: every link to it unusable.
        g.ingest_report(&report(1, "B-C", SealState::Offline)).unwrap();
        let mut g2 = NetworkGraph::new();
        for n in ["A", "B", "C"] {
            g2.add_node(n).unwrap();
        }
        g2.add_link("A", "B", 1.0, false, SealState::Normal).unwrap();
        g2.add_link("B", "C", 1.0, true, SealState::Offline).unwrap();
        assert_eq!(g2.route("A", "C", &RoutePolicy::RequireNormalSeals).unwrap(), None);
    }

    #[test]
    fn equal_cost_tie_breaks_lexicographically() {
        let mut g = NetworkGraph::new();
        for n in ["a", "m", "n", "z"] {
            g.add_node(n).unwrap();
        }
        g.add_link("a", "m", 1.0, false, SealState::Normal).unwrap();
        g.add_link("m", "z", 1.0, false, SealState::Normal).unwrap();
        g.add_link("a", "n", 1.0, false, SealState::Normal).unwrap();
        g.add_link("n", "z", 1.0, false, SealState::Normal).unwrap();
        let path = g.route("a", "z", &RoutePolicy::RequireNormalSeals).unwrap();
        assert_eq!(path, Some(vec!["a".into(), "m".into(), "z".into()]));
    }

    /// Exhaustive minimum over all simple paths, for cross-checking.
    fn brute_force_route(
        g: &NetworkGraph,
        src: &str,
        dst: &str,
        policy: &RoutePolicy,
    ) -> Option<Vec<NodeId>> {
        fn extend(
            g: &NetworkGraph,
            policy: &RoutePolicy,
            dst: &str,
            path: &mut Vec<NodeId>,
            cost: f64,
            best: &mut Option<(f64, Vec<NodeId>)>,
        ) {
            let node = path.last().unwrap().clone();
            if node == dst {
                let candidate = (cost, path.clone());
                let better = match best {
                    None => true,
                    Some((bc, bp)) => match candidate.0.total_cmp(bc) {
                        Ordering::Less => true,
                        Ordering::Equal => candidate.1 < *bp,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    *best = Some(candidate);
                }
                return;
            }
            for (id, link) in g.links() {
                let Some(next) = link.other_end(&node) else { continue };
                if path.contains(next) {
                    continue;
                }
                let Some(step) = g.effective_cost(g.link(id).unwrap(), policy) else {
                    continue;
                };
                path.push(next.clone());
                extend(g, policy, dst, path, cost + step, best);
                path.pop();
            }
        }
        let mut best = None;
        let mut path = vec![src.to_string()];
        extend(g, policy, dst, &mut path, 0.0, &mut best);
        best.map(|(_, p)| p)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dijkstra_matches_exhaustive_search(
            edges in proptest::collection::vec(
                (0usize..6, 0usize..6, 1u32..10, 0u8..5), 0..12),
            src in 0usize..6,
            dst in 0usize..6,
            policy_pick in 0u8..3,
        ) {
            let names = ["n0", "n1", "n2", "n3", "n4", "n5"];
            let mut g = NetworkGraph::new();
            for n in names {
                g.add_node(n).unwrap();
            }
            for (a, b, cost, pick) in edges {
                if a == b {
                    continue;
                }
                // pick 0..4 selects a sealed-link state; 4 means unmonitored.
                let (sealed, state) = match pick {
                    0 => (true, SealState::Normal),
                    1 => (true, SealState::Degraded),
                    2 => (true, SealState::Compromised),
                    3 => (true, SealState::Offline),
                    _ => (false, SealState::Normal),
                };
                let _ = g.add_link(names[a], names[b], cost as f64, sealed, state);
            }
            let policy = match policy_pick {
                0 => RoutePolicy::RequireNormalSeals,
                1 => RoutePolicy::AvoidCompromised,
                _ => RoutePolicy::CostPenalty { factor: 3.5 },
            };
            let fast = g.route(names[src], names[dst], &policy).unwrap();
            let slow = brute_force_route(&g, names[src], names[dst], &policy);
            prop_assert_eq!(fast, slow);
        }
    }
}
