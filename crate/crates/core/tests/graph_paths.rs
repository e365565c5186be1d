//! Attack-graph verification against an independent brute-force enumerator.
//!
//! The oracle in this file derives lateral-movement steps straight from
//! knowledge-base facts with its own (deliberately naive) code: a repeated
//! fixpoint sweep for the node set and a recursive walk for simple paths.
//! The graph module must agree with it exactly — on 200 randomized
//! small environments for path queries, and after every single delta for
//! incremental maintenance.

mod support;

use support::*;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decoysim::env::builders::{build_environment, BuildParams};
use decoysim::graph::{AttackGraph, GraphNode};
use decoysim::ids::{Agent, HostId, Location, Privilege};
use decoysim::kb::{KnowledgeBase, KnownSubnet};

// ---------------------------------------------------------------------------
// Frozen small cases
// ---------------------------------------------------------------------------

#[test]
fn chain3_paths_match_hand_enumeration() {
    let env = build_environment(
        "chain",
        &BuildParams {
            size: Some(3),
            seed: 0,
            ..BuildParams::default()
        },
    )
    .unwrap();
    // Full knowledge of the chain with a foothold on h-01.
    let mut kb = KnowledgeBase::for_defender(&env);
    kb.owner = Agent::Attacker;
    kb.entry = Location::Host(HostId::new("h-01"));
    kb.infected.insert(HostId::new("h-01"), Privilege::User);

    let graph = AttackGraph::build(&kb);
    let nodes: BTreeSet<String> = graph.nodes().iter().map(|n| n.key()).collect();
    assert_eq!(
        nodes,
        ["h-01@user", "h-02@user", "h-03@user"]
            .iter()
            .map(|s| s.to_string())
            .collect::<BTreeSet<_>>(),
        "chain nodes are the three user states"
    );

    let from = GraphNode::State {
        host: HostId::new("h-01"),
        privilege: Privilege::User,
    };
    let to_h3 = graph.get_paths_to_host(&from, &HostId::new("h-03"));
    assert_eq!(to_h3.len(), 1, "exactly one route to the chain end");
    let ids: Vec<&str> = to_h3[0].steps.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(
        ids,
        vec![
            "cred:cred-h-02:h-01@user>h-02@user",
            "cred:cred-h-03:h-02@user>h-03@user"
        ]
    );

    // Ring closure: the credential stored on h-03 leads back to h-01, but
    // simple paths never revisit it.
    let all = graph.get_all_paths(&from, 16);
    assert_eq!(all.len(), 2, "h-01->h-02 and h-01->h-02->h-03");
}

#[test]
fn star_has_exactly_one_single_step_path_per_spoke() {
    let env = build_environment("star", &BuildParams::default()).unwrap();
    let mut kb = KnowledgeBase::for_defender(&env);
    kb.owner = Agent::Attacker;
    kb.entry = Location::Host(HostId::new("hub"));
    kb.infected.insert(HostId::new("hub"), Privilege::User);

    let graph = AttackGraph::build(&kb);
    let from = GraphNode::State {
        host: HostId::new("hub"),
        privilege: Privilege::User,
    };
    for k in [1u32, 13, 25] {
        let target = HostId::new(format!("spoke-{k:02}"));
        let paths = graph.get_paths_to_host(&from, &target);
        assert_eq!(paths.len(), 1, "one path to {target}");
        assert_eq!(paths[0].steps.len(), 1, "single credential hop");
    }
    assert_eq!(graph.get_all_paths(&from, 16).len(), 25);
}

#[test]
fn unexplored_equifax_kb_has_no_steps_into_database_subnet() {
    let env = build_environment("equifax", &BuildParams { seed: 1, ..BuildParams::default() })
        .unwrap();
    let mut kb = KnowledgeBase::for_attacker(&env);
    // Simulate having scanned the public tier only: web hosts and their
    // vulnerability are known, the credential file is not yet read.
    let deftruth = KnowledgeBase::for_defender(&env);
    for web in ["web-01", "web-02"] {
        let h = deftruth.hosts.get(&HostId::new(web)).unwrap().clone();
        kb.record_observation(&HighLevelEvent {
            seq: 0,
            tick: 0,
            audience: Agent::Attacker,
            kind: HighLevelEventKind::FoundHost {
                host: h.id.clone(),
                subnet: h.subnet.clone(),
            },
            provenance: vec![],
        });
        kb.record_observation(&HighLevelEvent {
            seq: 1,
            tick: 0,
            audience: Agent::Attacker,
            kind: HighLevelEventKind::FoundNetworkServices {
                host: h.id.clone(),
                services: h.services.clone(),
                vulnerabilities: h.vulnerabilities.values().cloned().collect(),
            },
            provenance: vec![],
        });
    }
    let graph = AttackGraph::build(&kb);
    assert!(
        graph
            .steps()
            .all(|s| !s.to_host.as_str().starts_with("db-")),
        "no edges into the database subnet before the credential file is found"
    );
    // But the web tier is attackable from outside.
    assert!(graph
        .steps()
        .any(|s| s.from == GraphNode::External && s.to_host.as_str() == "web-01"));
}

#[test]
fn empty_kb_yields_origin_only() {
    let mut kb = blank_attacker_kb();
    kb.entry = Location::External;
    let graph = AttackGraph::build(&kb);
    assert_eq!(graph.nodes(), vec![GraphNode::External]);
    assert_eq!(graph.steps().count(), 0);
    assert!(graph.get_all_paths(&GraphNode::External, 16).is_empty());
}

// ---------------------------------------------------------------------------
// Randomized equivalence with the oracle
// ---------------------------------------------------------------------------

#[test]
fn two_hundred_random_environments_match_the_oracle_exactly() {
    check_random_environments_match_oracle(200, 0x5eed_0001);
}

#[test]
fn incremental_update_equals_rebuild_after_every_delta() {
    check_incremental_update_equals_rebuild(60, 0x5eed_0002);
}

#[test]
fn knowledge_growth_never_removes_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..40 {
        let RandomEnv { kb: full } = random_env(&mut rng);
        let mut kb = blank_attacker_kb();
        kb.reachability = full.reachability.clone();
        kb.entry = full.entry.clone();
        for (h, p) in &full.infected {
            kb.infected.insert(h.clone(), *p);
        }
        // Infected hosts must be known for the graph to anchor them.
        for h in full.hosts.values() {
            kb.hosts.insert(h.id.clone(), h.clone());
            kb.subnets.insert(
                h.subnet.clone(),
                KnownSubnet {
                    id: h.subnet.clone(),
                    public: None,
                },
            );
        }
        let mut steps: BTreeSet<String> =
            AttackGraph::build(&kb).steps().map(|s| s.id.clone()).collect();
        // Add credentials one by one: pure additions.
        for c in full.credentials.values() {
            kb.credentials.insert(c.id.clone(), c.clone());
            let now: BTreeSet<String> =
                AttackGraph::build(&kb).steps().map(|s| s.id.clone()).collect();
            assert!(
                now.is_superset(&steps),
                "adding a credential removed steps"
            );
            steps = now;
        }
    }
}
