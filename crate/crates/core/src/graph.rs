//! Lateral-movement graph derived from an agent's current knowledge.
//!
//! Nodes are access states — either a privilege level on a specific host or
//! the external vantage point — and edges are concrete steps the owner could
//! take: exploiting a known vulnerability over a permitted protocol, or
//! logging in with a credential from the host where it was found.  The graph
//! contains only states reachable from what the owner already holds, so it
//! grows monotonically as knowledge grows and shrinks only when access is
//! lost.
//!
//! Everything here is a pure function of the knowledge base: no world state,
//! no randomness.  [`shortest_exfil_path`] answers the companion question of
//! how stolen data gets back out, as a minimal relay chain over controlled
//! hosts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::env::NetEndpoint;
use crate::ids::{CredentialId, HostId, Location, Privilege, Protocol, VulnId};
use crate::kb::{KbDelta, KnowledgeBase};

/// An access state the attacker can hold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum GraphNode {
    /// Operating from outside the network perimeter.
    External,
    /// Code execution on `host` at `privilege`.
    State { host: HostId, privilege: Privilege },
}

impl GraphNode {
    pub fn state(host: impl Into<HostId>, privilege: Privilege) -> Self {
        GraphNode::State {
            host: host.into(),
            privilege,
        }
    }

    /// Stable textual form, also used inside step ids: `external` or
    /// `host@privilege`.
    pub fn key(&self) -> String {
        match self {
            GraphNode::External => "external".to_string(),
            GraphNode::State { host, privilege } => {
                format!("{host}@{}", privilege_label(*privilege))
            }
        }
    }

    pub fn host(&self) -> Option<&HostId> {
        match self {
            GraphNode::External => None,
            GraphNode::State { host, .. } => Some(host),
        }
    }
}

impl fmt::Display for GraphNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

fn privilege_label(p: Privilege) -> &'static str {
    match p {
        Privilege::None => "none",
        Privilege::User => "user",
        Privilege::Root => "root",
    }
}

/// How a step gains its target state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum StepMeans {
    Exploit(VulnId),
    Credential(CredentialId),
}

/// One concrete lateral-movement (or escalation) action the owner could take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackStep {
    /// Stable identifier: `expl:<vuln>:<from>><to>` or `cred:<cred>:<from>><to>`.
    pub id: String,
    pub from: GraphNode,
    pub to_host: HostId,
    pub to_privilege: Privilege,
    pub means: StepMeans,
    /// Protocol the step's connection rides on.
    pub protocol: Protocol,
}

impl AttackStep {
    pub fn to_node(&self) -> GraphNode {
        GraphNode::State {
            host: self.to_host.clone(),
            privilege: self.to_privilege,
        }
    }
}

/// A walk through the graph; `steps` is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackPath {
    pub origin: GraphNode,
    pub steps: Vec<AttackStep>,
}

impl AttackPath {
    pub fn end_host(&self) -> &HostId {
        &self.steps.last().expect("paths are non-empty").to_host
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// The set of reachable states and the steps between them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttackGraph {
    nodes: BTreeSet<GraphNode>,
    steps: BTreeMap<String, AttackStep>,
    origins: Vec<GraphNode>,
}

impl AttackGraph {
    /// Derive the full graph from current knowledge.
    pub fn build(kb: &KnowledgeBase) -> Self {
        let mut graph = AttackGraph::default();
        graph.origins = origins(kb);
        let mut work: Vec<GraphNode> = graph.origins.clone();
        for n in &work {
            graph.nodes.insert(n.clone());
        }
        while let Some(node) = work.pop() {
            for step in steps_from(kb, &node) {
                let to = step.to_node();
                if graph.steps.insert(step.id.clone(), step).is_none()
                    && graph.nodes.insert(to.clone())
                {
                    work.push(to);
                }
            }
        }
        graph
    }

    /// Fold in knowledge deltas, returning the newly enabled steps in id
    /// order.  The result is always identical to rebuilding from scratch;
    /// deltas tell us whether there is anything to do at all.
    pub fn update(&mut self, kb: &KnowledgeBase, deltas: &[KbDelta]) -> Vec<AttackStep> {
        if deltas.is_empty() {
            return Vec::new();
        }
        let fresh = AttackGraph::build(kb);
        let new_steps = fresh
            .steps
            .iter()
            .filter(|(id, _)| !self.steps.contains_key(*id))
            .map(|(_, s)| s.clone())
            .collect();
        *self = fresh;
        new_steps
    }

    /// All states, sorted.
    pub fn nodes(&self) -> Vec<GraphNode> {
        self.nodes.iter().cloned().collect()
    }

    /// All steps in id order.
    pub fn steps(&self) -> impl Iterator<Item = &AttackStep> {
        self.steps.values()
    }

    /// Look up one step by id.
    pub fn step(&self, id: &str) -> Option<&AttackStep> {
        self.steps.get(id)
    }

    /// States the owner currently holds (the graph's origins).
    pub fn frontier(&self) -> &[GraphNode] {
        &self.origins
    }

    /// Steps leaving `from`, in id order.
    pub fn outgoing(&self, from: &GraphNode) -> Vec<&AttackStep> {
        self.steps.values().filter(|s| &s.from == from).collect()
    }

    /// Every simple path of 1..=`bound` steps starting at `from`, ordered by
    /// (length, lexicographic step ids).  Prefixes count as paths.
    pub fn get_all_paths(&self, from: &GraphNode, bound: usize) -> Vec<AttackPath> {
        let mut adjacency: BTreeMap<&GraphNode, Vec<&AttackStep>> = BTreeMap::new();
        for s in self.steps.values() {
            adjacency.entry(&s.from).or_default().push(s);
        }
        let mut out = Vec::new();
        let mut visited: Vec<GraphNode> = vec![from.clone()];
        let mut trail: Vec<AttackStep> = Vec::new();
        self.descend(&adjacency, from, bound, &mut visited, &mut trail, &mut out);
        out.sort_by(|a, b| {
            let ka: Vec<&str> = a.steps.iter().map(|s| s.id.as_str()).collect();
            let kb: Vec<&str> = b.steps.iter().map(|s| s.id.as_str()).collect();
            (ka.len(), ka).cmp(&(kb.len(), kb))
        });
        out
    }

    fn descend(
        &self,
        adjacency: &BTreeMap<&GraphNode, Vec<&AttackStep>>,
        at: &GraphNode,
        remaining: usize,
        visited: &mut Vec<GraphNode>,
        trail: &mut Vec<AttackStep>,
        out: &mut Vec<AttackPath>,
    ) {
        if remaining == 0 {
            return;
        }
        let Some(next) = adjacency.get(at) else {
            return;
        };
        for step in next {
            let to = step.to_node();
            if visited.contains(&to) {
                continue;
            }
            trail.push((*step).clone());
            visited.push(to.clone());
            out.push(AttackPath {
                origin: visited[0].clone(),
                steps: trail.clone(),
            });
            self.descend(adjacency, &to, remaining - 1, visited, trail, out);
            visited.pop();
            trail.pop();
        }
    }

    /// Paths from `from` that end on `target`, same order as
    /// [`AttackGraph::get_all_paths`].
    pub fn get_paths_to_host(&self, from: &GraphNode, target: &HostId) -> Vec<AttackPath> {
        self.get_all_paths(from, 16)
            .into_iter()
            .filter(|p| p.end_host() == target)
            .collect()
    }

    /// Graphviz rendering for inspection.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph attack {\n");
        for n in &self.nodes {
            out.push_str(&format!("  \"{}\";\n", n.key()));
        }
        for s in self.steps.values() {
            let label = match &s.means {
                StepMeans::Exploit(v) => format!("exploit {v}"),
                StepMeans::Credential(c) => format!("credential {c}"),
            };
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{label}\"];\n",
                s.from.key(),
                s.to_node().key()
            ));
        }
        out.push_str("}\n");
        out
    }
}

fn origins(kb: &KnowledgeBase) -> Vec<GraphNode> {
    let mut out = Vec::new();
    if kb.entry == Location::External {
        out.push(GraphNode::External);
    }
    for (h, p) in &kb.infected {
        out.push(GraphNode::State {
            host: h.clone(),
            privilege: *p,
        });
    }
    out
}

fn step_id(means: &StepMeans, from: &GraphNode, to: &GraphNode) -> String {
    let (tag, mid) = match means {
        StepMeans::Exploit(v) => ("expl", v.as_str()),
        StepMeans::Credential(c) => ("cred", c.as_str()),
    };
    format!("{tag}:{mid}:{}>{}", from.key(), to.key())
}

fn endpoint_of_node(kb: &KnowledgeBase, node: &GraphNode) -> Option<NetEndpoint> {
    match node {
        GraphNode::External => Some(NetEndpoint::External),
        GraphNode::State { host, .. } => kb
            .hosts
            .get(host)
            .map(|k| NetEndpoint::Subnet(k.subnet.clone())),
    }
}

/// Steps available from one state, judged purely from knowledge:
/// vulnerability banners gate exploits, credential records gate logins, and
/// the network policy gates both.
fn steps_from(kb: &KnowledgeBase, from: &GraphNode) -> Vec<AttackStep> {
    let mut out = Vec::new();
    let Some(from_ep) = endpoint_of_node(kb, from) else {
        return out;
    };

    for (hid, host) in &kb.hosts {
        for (vid, banner) in &host.vulnerabilities {
            let same_host = from.host() == Some(hid);
            if same_host {
                // A local flaw is only interesting as a user-to-root step.
                let escalates = !banner.remote
                    && banner.grants == Privilege::Root
                    && matches!(
                        from,
                        GraphNode::State { privilege, .. } if *privilege == Privilege::User
                    );
                if escalates {
                    let means = StepMeans::Exploit(vid.clone());
                    let to = GraphNode::state(hid.clone(), Privilege::Root);
                    out.push(AttackStep {
                        id: step_id(&means, from, &to),
                        from: from.clone(),
                        to_host: hid.clone(),
                        to_privilege: Privilege::Root,
                        means,
                        protocol: banner.protocol.clone(),
                    });
                }
                continue;
            }
            if !banner.remote {
                continue;
            }
            let to_ep = NetEndpoint::Subnet(host.subnet.clone());
            if !kb.allows(&from_ep, &to_ep, &banner.protocol) {
                continue;
            }
            let means = StepMeans::Exploit(vid.clone());
            let to = GraphNode::state(hid.clone(), banner.grants);
            if &to == from {
                continue;
            }
            out.push(AttackStep {
                id: step_id(&means, from, &to),
                from: from.clone(),
                to_host: hid.clone(),
                to_privilege: banner.grants,
                means,
                protocol: banner.protocol.clone(),
            });
        }
    }

    if let GraphNode::State { host: src, .. } = from {
        for (cid, cred) in &kb.credentials {
            if &cred.found_on != src {
                continue;
            }
            let to = GraphNode::state(cred.target_host.clone(), cred.privilege);
            if &to == from {
                continue;
            }
            let to_ep = NetEndpoint::Subnet(cred.target_subnet.clone());
            if !kb.allows(&from_ep, &to_ep, &Protocol::Ssh) {
                continue;
            }
            let means = StepMeans::Credential(cid.clone());
            out.push(AttackStep {
                id: step_id(&means, from, &to),
                from: from.clone(),
                to_host: cred.target_host.clone(),
                to_privilege: cred.privilege,
                means,
                protocol: Protocol::Ssh,
            });
        }
    }

    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

// ---------------------------------------------------------------------------
// Exfiltration routing
// ---------------------------------------------------------------------------

/// One relay hop of a staging route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExfilHop {
    pub from: HostId,
    pub to: Location,
    pub protocol: Protocol,
}

fn preferred_protocol(protos: &BTreeSet<Protocol>) -> Option<Protocol> {
    protos
        .iter()
        .min_by(|a, b| a.preference_rank().cmp(&b.preference_rank()).then(a.cmp(b)))
        .cloned()
}

/// Minimal relay chain moving data from `data_host` to the egress point —
/// the entry foothold, or out of the perimeter for external entries.  Only
/// hosts the owner controls can relay.  Returns `None` when no such chain
/// exists (including when the data host itself is not controlled), and an
/// empty chain when the data is already at the egress host.
///
/// Ties between equal-length routes break lexicographically on the relay
/// host sequence, so planning is deterministic.
pub fn shortest_exfil_path(kb: &KnowledgeBase, data_host: &HostId) -> Option<Vec<ExfilHop>> {
    if !kb.infected.contains_key(data_host) {
        return None;
    }
    let entry_host = match &kb.entry {
        Location::Host(h) => Some(h.clone()),
        Location::External => None,
    };
    if entry_host.as_ref() == Some(data_host) {
        return Some(Vec::new());
    }

    let subnet_of = |h: &HostId| kb.hosts.get(h).map(|k| k.subnet.clone());
    let controlled: Vec<HostId> = kb
        .infected
        .keys()
        .filter(|h| subnet_of(h).is_some())
        .cloned()
        .collect();
    subnet_of(data_host)?;

    // Level-synchronous search keeping, per host, the lexicographically
    // smallest shortest relay sequence.
    let mut best: BTreeMap<HostId, Vec<ExfilHop>> = BTreeMap::new();
    best.insert(data_host.clone(), Vec::new());
    let mut frontier: Vec<HostId> = vec![data_host.clone()];
    while !frontier.is_empty() {
        let mut next_level: BTreeMap<HostId, Vec<ExfilHop>> = BTreeMap::new();
        for at in &frontier {
            // The entry host absorbs: data stops there.
            if entry_host.as_ref() == Some(at) {
                continue;
            }
            let from_ep = NetEndpoint::Subnet(subnet_of(at).unwrap());
            for to in &controlled {
                if to == at || best.contains_key(to) {
                    continue;
                }
                let to_ep = NetEndpoint::Subnet(subnet_of(to).unwrap());
                let Some(proto) = preferred_protocol(&kb.permitted_protocols(&from_ep, &to_ep))
                else {
                    continue;
                };
                let mut cand = best[at].clone();
                cand.push(ExfilHop {
                    from: at.clone(),
                    to: Location::Host(to.clone()),
                    protocol: proto,
                });
                match next_level.get(to) {
                    Some(held) if route_key(held) <= route_key(&cand) => {}
                    _ => {
                        next_level.insert(to.clone(), cand);
                    }
                }
            }
        }
        frontier = next_level.keys().cloned().collect();
        for (h, path) in next_level {
            best.insert(h, path);
        }
        // Shortest route to the entry host found: no longer level can beat it.
        if let Some(e) = &entry_host {
            if best.contains_key(e) {
                return Some(best.remove(e).unwrap());
            }
        }
    }

    match entry_host {
        Some(_) => None,
        None => {
            // Pick the best egress among all reached hosts.
            let mut candidates: Vec<Vec<ExfilHop>> = Vec::new();
            for (h, path) in &best {
                let from_ep = NetEndpoint::Subnet(subnet_of(h).unwrap());
                let protos = kb.permitted_protocols(&from_ep, &NetEndpoint::External);
                if let Some(proto) = preferred_protocol(&protos) {
                    let mut cand = path.clone();
                    cand.push(ExfilHop {
                        from: h.clone(),
                        to: Location::External,
                        protocol: proto,
                    });
                    candidates.push(cand);
                }
            }
            candidates
                .into_iter()
                .min_by(|a, b| (a.len(), route_key(a)).cmp(&(b.len(), route_key(b))))
        }
    }
}

fn route_key(hops: &[ExfilHop]) -> Vec<String> {
    hops.iter()
        .map(|h| match &h.to {
            Location::External => "external".to_string(),
            Location::Host(id) => id.to_string(),
        })
        .collect()
}
