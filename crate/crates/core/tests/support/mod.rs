//! Shared oracle machinery for attack-graph verification: an independent
//! brute-force enumerator, a randomized knowledge-base generator, and the
//! two randomized equivalence checks built on them.
//!
//! The oracle derives lateral-movement steps straight from knowledge-base
//! facts with deliberately naive code: a repeated fixpoint sweep for the
//! node set and a recursive walk for simple paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decoysim::env::builders::{build_environment, BuildParams};
use decoysim::env::{NetEndpoint, ReachabilityRule};
use decoysim::events::{HighLevelEvent, HighLevelEventKind, VulnBanner};
use decoysim::graph::{AttackGraph, GraphNode};
use decoysim::ids::{
    Agent, CredentialId, HostId, Location, Privilege, Protocol, SubnetId, VulnId,
};
use decoysim::kb::{KnowledgeBase, KnownCredential, KnownHost, KnownSubnet};

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

pub fn priv_str(p: Privilege) -> &'static str {
    match p {
        Privilege::None => "none",
        Privilege::User => "user",
        Privilege::Root => "root",
    }
}

pub fn node_key(n: &OracleNode) -> String {
    match n {
        OracleNode::External => "external".to_string(),
        OracleNode::State(h, p) => format!("{}@{}", h, priv_str(*p)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum OracleNode {
    External,
    State(HostId, Privilege),
}

/// (step id, from node, to node) — the id format is the graph module's
/// public contract, reproduced here independently.
pub type OracleStep = (String, OracleNode, OracleNode);

pub fn oracle_step_id(means: &str, mid: &str, from: &OracleNode, to: &OracleNode) -> String {
    format!("{means}:{mid}:{}>{}", node_key(from), node_key(to))
}

pub fn kb_allows(kb: &KnowledgeBase, from: &NetEndpoint, to: &NetEndpoint, proto: &Protocol) -> bool {
    kb.reachability
        .iter()
        .any(|r| &r.from == from && &r.to == to && r.protocols.contains(proto))
}

/// All steps leaving `from`, judged directly from KB facts.
pub fn oracle_steps_from(kb: &KnowledgeBase, from: &OracleNode) -> Vec<OracleStep> {
    let mut out = Vec::new();
    let from_ep: Option<NetEndpoint> = match from {
        OracleNode::External => Some(NetEndpoint::External),
        OracleNode::State(h, _) => kb
            .hosts
            .get(h)
            .map(|k| NetEndpoint::Subnet(k.subnet.clone())),
    };
    let Some(from_ep) = from_ep else {
        return out;
    };

    // Remote exploits: any known vulnerability on another host whose service
    // protocol is permitted from here.
    for (hid, host) in &kb.hosts {
        for (vid, v) in &host.vulnerabilities {
            if let OracleNode::State(src, p) = from {
                if src == hid {
                    // Local escalation only: user -> root on the same host.
                    if !v.remote && v.grants == Privilege::Root && *p == Privilege::User {
                        let to = OracleNode::State(hid.clone(), Privilege::Root);
                        out.push((
                            oracle_step_id("expl", vid.as_str(), from, &to),
                            from.clone(),
                            to,
                        ));
                    }
                    continue;
                }
            }
            if !v.remote {
                continue;
            }
            let to_ep = NetEndpoint::Subnet(host.subnet.clone());
            if !kb_allows(kb, &from_ep, &to_ep, &v.protocol) {
                continue;
            }
            let to = OracleNode::State(hid.clone(), v.grants);
            if &to == from {
                continue;
            }
            out.push((
                oracle_step_id("expl", vid.as_str(), from, &to),
                from.clone(),
                to,
            ));
        }
    }

    // Credentials: usable only from the host whose disk they sit on.
    if let OracleNode::State(src, p) = from {
        for (cid, cred) in &kb.credentials {
            if &cred.found_on != src {
                continue;
            }
            if cred.target_host == *src && cred.privilege == *p {
                continue;
            }
            let to_ep = NetEndpoint::Subnet(cred.target_subnet.clone());
            if !kb_allows(kb, &from_ep, &to_ep, &Protocol::Ssh) {
                continue;
            }
            let to = OracleNode::State(cred.target_host.clone(), cred.privilege);
            if &to == from {
                continue;
            }
            out.push((
                oracle_step_id("cred", cid.as_str(), from, &to),
                from.clone(),
                to,
            ));
        }
    }
    out.sort();
    out
}

pub fn oracle_origins(kb: &KnowledgeBase) -> Vec<OracleNode> {
    let mut origins = Vec::new();
    if kb.entry == Location::External {
        origins.push(OracleNode::External);
    }
    for (h, p) in &kb.infected {
        origins.push(OracleNode::State(h.clone(), *p));
    }
    origins
}

/// Node and step sets via repeated full sweeps until stable (no worklist:
/// intentionally different shape from any reasonable implementation).
pub fn oracle_graph(kb: &KnowledgeBase) -> (BTreeSet<OracleNode>, BTreeSet<OracleStep>) {
    let mut nodes: BTreeSet<OracleNode> = oracle_origins(kb).into_iter().collect();
    let mut steps: BTreeSet<OracleStep> = BTreeSet::new();
    loop {
        let mut grew = false;
        for node in nodes.clone() {
            for step in oracle_steps_from(kb, &node) {
                grew |= nodes.insert(step.2.clone());
                grew |= steps.insert(step);
            }
        }
        if !grew {
            break;
        }
    }
    (nodes, steps)
}

/// Every simple path (length >= 1, up to `bound`) from `from`, as step-id
/// sequences, ordered by (length, lexicographic ids).
pub fn oracle_all_paths(
    steps: &BTreeSet<OracleStep>,
    from: &OracleNode,
    bound: usize,
) -> Vec<Vec<String>> {
    let mut adjacency: BTreeMap<&OracleNode, Vec<&OracleStep>> = BTreeMap::new();
    for s in steps {
        adjacency.entry(&s.1).or_default().push(s);
    }
    let mut out = Vec::new();
    let mut visited = vec![from.clone()];
    let mut current: Vec<String> = Vec::new();
    walk(
        &adjacency,
        from,
        bound,
        &mut visited,
        &mut current,
        &mut out,
    );
    out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    out
}

fn walk<'a>(
    adjacency: &BTreeMap<&'a OracleNode, Vec<&'a OracleStep>>,
    at: &OracleNode,
    remaining: usize,
    visited: &mut Vec<OracleNode>,
    current: &mut Vec<String>,
    out: &mut Vec<Vec<String>>,
) {
    if remaining == 0 {
        return;
    }
    let Some(next) = adjacency.get(at) else {
        return;
    };
    for step in next {
        if visited.contains(&step.2) {
            continue;
        }
        current.push(step.0.clone());
        visited.push(step.2.clone());
        out.push(current.clone());
        walk(adjacency, &step.2, remaining - 1, visited, current, out);
        visited.pop();
        current.pop();
    }
}

// ---------------------------------------------------------------------------
// Random environment generation (as attacker KBs with full knowledge)
// ---------------------------------------------------------------------------

pub fn blank_attacker_kb() -> KnowledgeBase {
    let env = build_environment(
        "chain",
        &BuildParams {
            size: Some(2),
            seed: 0,
            ..BuildParams::default()
        },
    )
    .unwrap();
    let mut kb = KnowledgeBase::for_attacker(&env);
    kb.subnets.clear();
    kb.hosts.clear();
    kb.credentials.clear();
    kb.assets.clear();
    kb.infected.clear();
    kb.reachability.clear();
    kb.entry = Location::External;
    assert_eq!(kb.owner, Agent::Attacker);
    kb
}

pub struct RandomEnv {
    pub kb: KnowledgeBase,
}

pub fn random_env(rng: &mut ChaCha8Rng) -> RandomEnv {
    let mut kb = blank_attacker_kb();

    let n_subnets = rng.gen_range(1..=3u32);
    let subnets: Vec<SubnetId> = (1..=n_subnets)
        .map(|i| SubnetId::new(format!("s{i}")))
        .collect();
    for s in &subnets {
        kb.subnets.insert(
            s.clone(),
            KnownSubnet {
                id: s.clone(),
                public: Some(true),
            },
        );
    }

    // Reachability: self-loops always; cross-subnet and external rules at
    // random.  Protocol palette kept small so collisions are common.
    let palette = [Protocol::Ssh, Protocol::Https, Protocol::Http];
    let mut rules: Vec<ReachabilityRule> = Vec::new();
    let mut endpoints: Vec<NetEndpoint> = vec![NetEndpoint::External];
    endpoints.extend(subnets.iter().cloned().map(NetEndpoint::Subnet));
    for from in &endpoints {
        for to in &endpoints {
            if to == &NetEndpoint::External {
                continue;
            }
            let self_loop = from == to;
            if self_loop || rng.gen_bool(0.55) {
                let mut protos = BTreeSet::new();
                if self_loop || rng.gen_bool(0.8) {
                    protos.insert(Protocol::Ssh);
                }
                for p in &palette[1..] {
                    if rng.gen_bool(0.4) {
                        protos.insert(p.clone());
                    }
                }
                if protos.is_empty() {
                    protos.insert(Protocol::Ssh);
                }
                rules.push(ReachabilityRule {
                    from: from.clone(),
                    to: to.clone(),
                    protocols: protos,
                });
            }
        }
    }
    kb.reachability = rules;

    let n_hosts = rng.gen_range(2..=8u32);
    let hosts: Vec<HostId> = (1..=n_hosts).map(|i| HostId::new(format!("m{i}"))).collect();
    for h in &hosts {
        let subnet = subnets[rng.gen_range(0..subnets.len())].clone();
        kb.hosts.insert(
            h.clone(),
            KnownHost {
                id: h.clone(),
                subnet,
                services: Vec::new(),
                vulnerabilities: BTreeMap::new(),
            },
        );
    }

    // Up to 12 means total, split between vulnerabilities and credentials.
    let budget = rng.gen_range(0..=12u32);
    let n_vulns = rng.gen_range(0..=budget);
    for i in 0..n_vulns {
        let vid = VulnId::new(format!("v{i}"));
        let host = hosts[rng.gen_range(0..hosts.len())].clone();
        let remote = rng.gen_bool(0.85);
        let banner = VulnBanner {
            id: vid.clone(),
            protocol: palette[rng.gen_range(0..palette.len())].clone(),
            grants: if rng.gen_bool(0.25) {
                Privilege::Root
            } else {
                Privilege::User
            },
            remote,
        };
        kb.hosts
            .get_mut(&host)
            .unwrap()
            .vulnerabilities
            .insert(vid, banner);
    }
    for i in 0..(budget - n_vulns) {
        let cid = CredentialId::new(format!("c{i}"));
        let target = hosts[rng.gen_range(0..hosts.len())].clone();
        let found_on = hosts[rng.gen_range(0..hosts.len())].clone();
        let target_subnet = kb.hosts[&target].subnet.clone();
        kb.credentials.insert(
            cid.clone(),
            KnownCredential {
                id: cid,
                target_host: target,
                target_subnet,
                privilege: if rng.gen_bool(0.2) {
                    Privilege::Root
                } else {
                    Privilege::User
                },
                found_on,
            },
        );
    }

    // Entry: external, or a foothold on 1-2 infected hosts.
    if rng.gen_bool(0.4) {
        kb.entry = Location::External;
    } else {
        let entry = hosts[rng.gen_range(0..hosts.len())].clone();
        kb.entry = Location::Host(entry.clone());
        kb.infected.insert(entry, Privilege::User);
        if rng.gen_bool(0.3) {
            let extra = hosts[rng.gen_range(0..hosts.len())].clone();
            kb.infected.insert(
                extra,
                if rng.gen_bool(0.3) {
                    Privilege::Root
                } else {
                    Privilege::User
                },
            );
        }
    }

    RandomEnv { kb }
}

pub fn graph_node(n: &OracleNode) -> GraphNode {
    match n {
        OracleNode::External => GraphNode::External,
        OracleNode::State(h, p) => GraphNode::State {
            host: h.clone(),
            privilege: *p,
        },
    }
}

/// Randomized equivalence between the graph module and the oracle:
/// node sets, step sets, full path enumeration, and targeted queries.
pub fn check_random_environments_match_oracle(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let RandomEnv { kb } = random_env(&mut rng);
        let (nodes, steps) = oracle_graph(&kb);
        let graph = AttackGraph::build(&kb);

        let got_nodes: BTreeSet<String> = graph.nodes().iter().map(|n| n.key()).collect();
        let want_nodes: BTreeSet<String> = nodes.iter().map(node_key).collect();
        assert_eq!(got_nodes, want_nodes, "case {case}: node sets differ");

        let got_steps: BTreeSet<String> = graph.steps().map(|s| s.id.clone()).collect();
        let want_steps: BTreeSet<String> = steps.iter().map(|s| s.0.clone()).collect();
        assert_eq!(got_steps, want_steps, "case {case}: step sets differ");

        for origin in oracle_origins(&kb) {
            let want = oracle_all_paths(&steps, &origin, 16);
            let got: Vec<Vec<String>> = graph
                .get_all_paths(&graph_node(&origin), 16)
                .iter()
                .map(|p| p.steps.iter().map(|s| s.id.clone()).collect())
                .collect();
            assert_eq!(got, want, "case {case}: paths from {origin:?} differ");

            // Targeted query agrees with filtering the full enumeration.
            if let Some(target) = kb.hosts.keys().next().cloned() {
                let want_to: Vec<Vec<String>> = want
                    .iter()
                    .filter(|p| {
                        p.last()
                            .map(|id| id.contains(&format!(">{target}@")))
                            .unwrap_or(false)
                    })
                    .cloned()
                    .collect();
                let got_to: Vec<Vec<String>> = graph
                    .get_paths_to_host(&graph_node(&origin), &target)
                    .iter()
                    .map(|p| p.steps.iter().map(|s| s.id.clone()).collect())
                    .collect();
                assert_eq!(got_to, want_to, "case {case}: paths to {target} differ");
            }
        }
    }
}

/// Incremental maintenance equals rebuild after every single delta, with
/// duplicate deliveries as no-ops and exact new-step reporting.
pub fn check_incremental_update_equals_rebuild(cases: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        // Target state to walk toward.
        let RandomEnv { kb: full } = random_env(&mut rng);

        // Start from entry knowledge only.
        let mut kb = blank_attacker_kb();
        kb.reachability = full.reachability.clone();
        kb.entry = full.entry.clone();
        for s in full.subnets.values() {
            kb.subnets.insert(s.id.clone(), s.clone());
        }

        let mut graph = AttackGraph::build(&kb);

        // Reveal facts one at a time in a shuffled order, as observations.
        let mut events: Vec<HighLevelEvent> = Vec::new();
        let mk = |kind| HighLevelEvent {
            seq: 0,
            tick: 0,
            audience: Agent::Attacker,
            kind,
            provenance: vec![],
        };
        for h in full.hosts.values() {
            events.push(mk(HighLevelEventKind::FoundHost {
                host: h.id.clone(),
                subnet: h.subnet.clone(),
            }));
            events.push(mk(HighLevelEventKind::FoundNetworkServices {
                host: h.id.clone(),
                services: h.services.clone(),
                vulnerabilities: h.vulnerabilities.values().cloned().collect(),
            }));
        }
        for c in full.credentials.values() {
            events.push(mk(HighLevelEventKind::FoundCredential {
                credential: c.id.clone(),
                target_host: c.target_host.clone(),
                target_subnet: c.target_subnet.clone(),
                privilege: c.privilege,
                found_on: c.found_on.clone(),
            }));
        }
        for (h, p) in &full.infected {
            events.push(mk(HighLevelEventKind::InfectedNewHost {
                host: h.clone(),
                privilege: *p,
            }));
        }
        // Shuffle deterministically.
        for i in (1..events.len()).rev() {
            let j = rng.gen_range(0..=i);
            events.swap(i, j);
        }
        // Occasionally lose a host mid-sequence.
        let lose_at = if !full.infected.is_empty() && rng.gen_bool(0.3) {
            Some(rng.gen_range(0..events.len()))
        } else {
            None
        };

        for (i, ev) in events.iter().enumerate() {
            let before: BTreeSet<String> = graph.steps().map(|s| s.id.clone()).collect();
            let deltas = kb.record_observation(ev);
            let new_steps = graph.update(&kb, &deltas);

            let rebuilt = AttackGraph::build(&kb);
            assert_eq!(
                graph.steps().map(|s| s.id.clone()).collect::<BTreeSet<_>>(),
                rebuilt.steps().map(|s| s.id.clone()).collect::<BTreeSet<_>>(),
                "case {case} event {i}: update diverged from rebuild"
            );
            assert_eq!(
                graph.nodes(),
                rebuilt.nodes(),
                "case {case} event {i}: node sets diverged"
            );

            // Returned steps are exactly the difference, in id order.
            let after: BTreeSet<String> = graph.steps().map(|s| s.id.clone()).collect();
            let want_new: Vec<String> = after.difference(&before).cloned().collect();
            let got_new: Vec<String> = new_steps.iter().map(|s| s.id.clone()).collect();
            assert_eq!(got_new, want_new, "case {case} event {i}: new-step report");

            // Duplicate delivery is a no-op.
            let dup = kb.record_observation(ev);
            assert!(dup.is_empty());
            assert!(graph.update(&kb, &dup).is_empty());

            if lose_at == Some(i) {
                if let Some(h) = kb.infected.keys().next().cloned() {
                    let deltas = kb.record_observation(&mk(
                        HighLevelEventKind::LostAccess { host: h },
                    ));
                    graph.update(&kb, &deltas);
                    let rebuilt = AttackGraph::build(&kb);
                    assert_eq!(graph.nodes(), rebuilt.nodes());
                }
            }
        }
    }
}
