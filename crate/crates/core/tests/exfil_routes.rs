//! Staging-route planning verified against exhaustive enumeration.
//!
//! `shortest_exfil_path` must return the minimal-hop relay chain from the
//! host holding the data back to the egress point, using only hosts the
//! attacker controls.  Ties break lexicographically on the relay host ids,
//! and each hop carries the most preferred protocol the network permits.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decoysim::env::builders::{build_environment, BuildParams};
use decoysim::graph::{shortest_exfil_path, ExfilHop};
use decoysim::ids::{HostId, Location, Privilege, Protocol};
use decoysim::kb::KnowledgeBase;

fn infect(kb: &mut KnowledgeBase, host: &str) {
    kb.infected.insert(HostId::new(host), Privilege::User);
}

/// Attacker KB with the defender's full picture (route planning is a pure
/// function of knowledge; tests grant omniscience for convenience).
fn omniscient(env_name: &str, seed: u64, size: Option<u32>) -> KnowledgeBase {
    let env = build_environment(
        env_name,
        &BuildParams {
            seed,
            size,
            ..BuildParams::default()
        },
    )
    .unwrap();
    let mut kb = KnowledgeBase::for_defender(&env);
    kb.owner = decoysim::ids::Agent::Attacker;
    kb.infected.clear();
    kb.entry = match &env.attacker_entry {
        decoysim::env::AttackerEntry::ExternalScan => Location::External,
        decoysim::env::AttackerEntry::FootholdOnHost { host } => Location::Host(host.clone()),
    };
    kb
}

fn hop_keys(hops: &[ExfilHop]) -> Vec<(String, String)> {
    hops.iter()
        .map(|h| {
            let to = match &h.to {
                Location::External => "external".to_string(),
                Location::Host(id) => id.to_string(),
            };
            (to, format!("{:?}", h.protocol))
        })
        .collect()
}

#[test]
fn database_to_web_to_outside_uses_two_hops() {
    let mut kb = omniscient("equifax", 3, None);
    assert_eq!(kb.entry, Location::External);
    infect(&mut kb, "web-01");
    infect(&mut kb, "db-07");
    let hops = shortest_exfil_path(&kb, &HostId::new("db-07")).expect("route exists");
    assert_eq!(
        hop_keys(&hops),
        vec![
            ("web-01".to_string(), "Ssh".to_string()),
            ("external".to_string(), "Https".to_string()),
        ]
    );
}

#[test]
fn equal_length_routes_prefer_lexicographically_first_relay() {
    let mut kb = omniscient("equifax", 3, None);
    infect(&mut kb, "web-02");
    infect(&mut kb, "web-01");
    infect(&mut kb, "db-11");
    let hops = shortest_exfil_path(&kb, &HostId::new("db-11")).unwrap();
    assert_eq!(hops[0].to, Location::Host(HostId::new("web-01")));
}

#[test]
fn foothold_entry_routes_end_at_the_entry_host() {
    let mut kb = omniscient("chain", 0, Some(8));
    assert_eq!(kb.entry, Location::Host(HostId::new("h-01")));
    for h in ["h-01", "h-02", "h-03"] {
        infect(&mut kb, h);
    }
    // Same subnet: one direct hop back to the foothold.
    let hops = shortest_exfil_path(&kb, &HostId::new("h-03")).unwrap();
    assert_eq!(
        hop_keys(&hops),
        vec![("h-01".to_string(), "Ssh".to_string())]
    );
}

#[test]
fn data_already_on_the_entry_host_needs_no_relay() {
    let mut kb = omniscient("chain", 0, Some(4));
    infect(&mut kb, "h-01");
    let hops = shortest_exfil_path(&kb, &HostId::new("h-01")).unwrap();
    assert!(hops.is_empty());
}

#[test]
fn no_route_without_control_of_the_data_host() {
    let mut kb = omniscient("equifax", 3, None);
    infect(&mut kb, "web-01");
    assert!(shortest_exfil_path(&kb, &HostId::new("db-01")).is_none());
}

#[test]
fn shorter_detour_wins_over_longer() {
    // Star: spoke-05 -> hub is one hop; any spoke->hub->spoke->... detour is
    // longer and must not be chosen even though more hosts are controlled.
    let mut kb = omniscient("star", 0, None);
    for h in ["hub", "spoke-01", "spoke-02", "spoke-05"] {
        infect(&mut kb, h);
    }
    let hops = shortest_exfil_path(&kb, &HostId::new("spoke-05")).unwrap();
    assert_eq!(hop_keys(&hops), vec![("hub".to_string(), "Ssh".to_string())]);
}

// ---------------------------------------------------------------------------
// Randomized comparison with exhaustive search
// ---------------------------------------------------------------------------

fn oracle_proto_rank(p: &Protocol) -> u8 {
    match p {
        Protocol::Ssh => 0,
        Protocol::Https => 1,
        Protocol::Http => 2,
        Protocol::Db => 3,
        Protocol::Custom(_) => 4,
    }
}

/// Exhaustive minimal route: every simple relay sequence over controlled
/// hosts, minimized by (length, relay-host ids).
fn oracle_route(kb: &KnowledgeBase, data_host: &HostId) -> Option<Vec<(String, String)>> {
    if !kb.infected.contains_key(data_host) {
        return None;
    }
    let target_entry = match &kb.entry {
        Location::Host(h) => Some(h.clone()),
        Location::External => None,
    };
    if target_entry.as_ref() == Some(data_host) {
        return Some(vec![]);
    }

    let controlled: Vec<HostId> = kb.infected.keys().cloned().collect();
    let mut best: Option<Vec<(String, String)>> = None;
    let mut stack: Vec<(HostId, Vec<(String, String)>, BTreeSet<HostId>)> = vec![(
        data_host.clone(),
        vec![],
        [data_host.clone()].into_iter().collect(),
    )];
    while let Some((at, path, seen)) = stack.pop() {
        if path.len() >= 8 {
            continue;
        }
        let at_subnet = kb.hosts[&at].subnet.clone();
        // Terminal egress for external entries.
        if target_entry.is_none() {
            let protos = kb.permitted_protocols(
                &decoysim::env::NetEndpoint::Subnet(at_subnet.clone()),
                &decoysim::env::NetEndpoint::External,
            );
            if let Some(p) = protos.iter().min_by_key(|p| oracle_proto_rank(p)) {
                let mut cand = path.clone();
                cand.push(("external".to_string(), format!("{p:?}")));
                consider(&mut best, cand);
            }
        }
        for next in &controlled {
            if seen.contains(next) {
                continue;
            }
            let next_subnet = kb.hosts[next].subnet.clone();
            let protos = kb.permitted_protocols(
                &decoysim::env::NetEndpoint::Subnet(at_subnet.clone()),
                &decoysim::env::NetEndpoint::Subnet(next_subnet),
            );
            let Some(p) = protos.iter().min_by_key(|p| oracle_proto_rank(p)) else {
                continue;
            };
            let mut cand_path = path.clone();
            cand_path.push((next.to_string(), format!("{p:?}")));
            if target_entry.as_ref() == Some(next) {
                consider(&mut best, cand_path);
            } else {
                let mut cand_seen = seen.clone();
                cand_seen.insert(next.clone());
                stack.push((next.clone(), cand_path, cand_seen));
            }
        }
    }
    best
}

fn consider(best: &mut Option<Vec<(String, String)>>, cand: Vec<(String, String)>) {
    let better = match best {
        None => true,
        Some(b) => (cand.len(), &cand) < (b.len(), b),
    };
    if better {
        *best = Some(cand);
    }
}

#[test]
fn random_control_sets_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe8f1);
    let envs = [
        ("equifax", None),
        ("colonial", None),
        ("chain", Some(10u32)),
        ("star", None),
        ("enterprise", None),
    ];
    let mut nontrivial = 0u32;
    for round in 0..80 {
        let (name, size) = envs[round % envs.len()];
        let mut kb = omniscient(name, round as u64, size);
        let hosts: Vec<HostId> = kb.hosts.keys().cloned().collect();
        let n = rng.gen_range(1..=6.min(hosts.len()));
        let mut picked = BTreeSet::new();
        while picked.len() < n {
            picked.insert(hosts[rng.gen_range(0..hosts.len())].clone());
        }
        if let Location::Host(entry) = kb.entry.clone() {
            picked.insert(entry);
        }
        for h in &picked {
            kb.infected.insert(h.clone(), Privilege::User);
        }
        // Usually stage from a controlled host so the route is non-trivial.
        let data_host = if rng.gen_bool(0.75) {
            let owned: Vec<&HostId> = picked.iter().collect();
            owned[rng.gen_range(0..owned.len())].clone()
        } else {
            hosts[rng.gen_range(0..hosts.len())].clone()
        };

        let want = oracle_route(&kb, &data_host);
        let got = shortest_exfil_path(&kb, &data_host).map(|hops| hop_keys(&hops));
        assert_eq!(got, want, "round {round} ({name}), data on {data_host}");
        if want.map(|w| !w.is_empty()).unwrap_or(false) {
            nontrivial += 1;
        }
    }
    assert!(nontrivial >= 10, "generator produced too few real routes");
}
