//! Built-in environment builders.
//!
//! Five ready-made networks cover the common what-if scenarios: a breached
//! credit bureau (`equifax`), a pipeline operator with segregated IT/OT
//! networks (`colonial`), a credential ring (`chain`), a hub-and-spoke
//! network (`star`), and a small office tree (`enterprise`).  All builders
//! are deterministic: the same name, parameters, and seed always produce a
//! bitwise-identical environment.  Seeds drive only placement choices, such
//! as which web server holds a credential file.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ids::{
    stable_fingerprint, AssetId, CredentialId, HostId, Privilege, Protocol, SubnetId, Tick, VulnId,
};

use super::{
    AttackerEntry, Credential, DataAsset, Environment, GoalKind, GoalSpec, Host, NetEndpoint,
    ReachabilityRule, Service, Subnet, Vulnerability,
};

/// Default run horizon, and the default goal time limit: 75 simulated
/// minutes at one tick per second.
pub const DEFAULT_TIME_LIMIT: Tick = 4500;

/// Size and goal knobs accepted by [`build_environment`].
#[derive(Debug, Clone)]
pub struct BuildParams {
    /// Primary size knob; meaning depends on the builder (chain length,
    /// star spoke count, database count).
    pub size: Option<u32>,
    /// Number of critical actuators in the `colonial` builder.
    pub actuators: Option<u32>,
    /// Goal time limit in ticks.
    pub time_limit: Option<Tick>,
    /// Drives random placement choices inside the builder.
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        Self {
            size: None,
            actuators: None,
            time_limit: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("unknown environment `{0}` (expected one of {names})", names = builtin_names().join(", "))]
    UnknownEnvironment(String),
    #[error("invalid size for `{builder}`: {reason}")]
    InvalidSize { builder: &'static str, reason: String },
}

/// Names accepted by [`build_environment`].
pub fn builtin_names() -> [&'static str; 5] {
    ["equifax", "colonial", "chain", "star", "enterprise"]
}

/// Builds one of the named environments.  Placement randomness (e.g. which
/// web server stores the credential file) is drawn from a dedicated stream
/// keyed by builder name and seed, so environment construction never
/// perturbs the simulation's own random stream.
pub fn build_environment(name: &str, params: &BuildParams) -> Result<Environment, BuildError> {
    let mut rng = ChaCha8Rng::seed_from_u64(stable_fingerprint(
        format!("env:{name}:{seed}", seed = params.seed).as_bytes(),
    ));
    match name {
        "equifax" => build_equifax(params, &mut rng),
        "colonial" => build_colonial(params, &mut rng),
        "chain" => build_chain(params, &mut rng),
        "star" => build_star(params, &mut rng),
        "enterprise" => build_enterprise(params, &mut rng),
        other => Err(BuildError::UnknownEnvironment(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn svc(name: &str, protocol: Protocol, port: u16) -> Service {
    Service {
        name: name.to_string(),
        protocol,
        port,
        honeypot: false,
    }
}

fn sshd() -> Service {
    svc("sshd", Protocol::Ssh, 22)
}

fn protocols<const N: usize>(list: [Protocol; N]) -> BTreeSet<Protocol> {
    list.into_iter().collect()
}

fn rule(from: NetEndpoint, to: NetEndpoint, protos: BTreeSet<Protocol>) -> ReachabilityRule {
    ReachabilityRule {
        from,
        to,
        protocols: protos,
    }
}

fn subnet(id: &str, name: &str, public: bool) -> (SubnetId, Subnet) {
    (
        SubnetId::new(id),
        Subnet {
            id: SubnetId::new(id),
            name: name.to_string(),
            public,
        },
    )
}

fn plain_host(id: &str, subnet: &SubnetId, services: Vec<Service>, users: Vec<&str>) -> Host {
    Host {
        id: HostId::new(id),
        subnet: subnet.clone(),
        services,
        vulnerabilities: Vec::new(),
        stored_credentials: Vec::new(),
        data_assets: Vec::new(),
        users: users.into_iter().map(str::to_string).collect(),
        is_decoy: false,
        decoy_payload: None,
    }
}

fn user_cred(id: &str, principal: &str, target: &HostId) -> Credential {
    Credential {
        id: CredentialId::new(id),
        principal: principal.to_string(),
        target_host: target.clone(),
        privilege: Privilege::User,
        valid: true,
        is_decoy: false,
    }
}

fn critical_asset(id: &str, host: &HostId, markers: Vec<&str>) -> DataAsset {
    DataAsset {
        id: AssetId::new(id),
        host: host.clone(),
        size_units: 1,
        critical: true,
        is_decoy: false,
        markers: markers.into_iter().map(str::to_string).collect(),
    }
}

struct Catalog {
    hosts: BTreeMap<HostId, Host>,
    credentials: BTreeMap<CredentialId, Credential>,
    assets: BTreeMap<AssetId, DataAsset>,
    vulnerabilities: BTreeMap<VulnId, Vulnerability>,
}

impl Catalog {
    fn new() -> Self {
        Self {
            hosts: BTreeMap::new(),
            credentials: BTreeMap::new(),
            assets: BTreeMap::new(),
            vulnerabilities: BTreeMap::new(),
        }
    }

    fn add_host(&mut self, host: Host) -> HostId {
        let id = host.id.clone();
        self.hosts.insert(id.clone(), host);
        id
    }

    fn add_vuln(&mut self, id: &str, label: &str, target_service: &str, remote: bool) -> VulnId {
        let vid = VulnId::new(id);
        self.vulnerabilities.insert(
            vid.clone(),
            Vulnerability {
                id: vid.clone(),
                label: label.to_string(),
                target_service: target_service.to_string(),
                grants: Privilege::User,
                remote,
            },
        );
        vid
    }

    /// Stores `cred` on `holder`'s disk and registers it in the catalog.
    fn store_cred(&mut self, holder: &HostId, cred: Credential) {
        let id = cred.id.clone();
        self.credentials.insert(id.clone(), cred);
        self.hosts
            .get_mut(holder)
            .expect("credential holder exists")
            .stored_credentials
            .push(id);
    }

    /// Places `asset` on its recorded host and registers it.
    fn place_asset(&mut self, asset: DataAsset) {
        let id = asset.id.clone();
        let host = asset.host.clone();
        self.assets.insert(id.clone(), asset);
        self.hosts
            .get_mut(&host)
            .expect("asset host exists")
            .data_assets
            .push(id);
    }
}

// ---------------------------------------------------------------------------
// equifax: 2 vulnerable web servers + 48 databases behind them
// ---------------------------------------------------------------------------

fn build_equifax(params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Environment, BuildError> {
    let db_count = params.size.unwrap_or(48);
    if db_count == 0 {
        return Err(BuildError::InvalidSize {
            builder: "equifax",
            reason: "database count must be at least 1".into(),
        });
    }

    let (dmz_id, dmz) = subnet("dmz", "public web tier", true);
    let (dbnet_id, dbnet) = subnet("db-net", "database network", false);

    let mut cat = Catalog::new();
    let struts = cat.add_vuln("struts-rce", "CVE-2017-5638", "struts", true);

    let mut web_ids = Vec::new();
    for i in 1..=2u32 {
        let mut h = plain_host(
            &format!("web-{i:02}"),
            &dmz_id,
            vec![svc("struts", Protocol::Https, 443), sshd()],
            vec!["webadmin"],
        );
        h.vulnerabilities.push(struts.clone());
        web_ids.push(cat.add_host(h));
    }

    let mut db_ids = Vec::new();
    let mut goal_assets = Vec::new();
    for i in 1..=db_count {
        let h = plain_host(
            &format!("db-{i:02}"),
            &dbnet_id,
            vec![sshd(), svc("postgres", Protocol::Db, 5432)],
            vec!["dbadmin"],
        );
        let id = cat.add_host(h);
        let asset = critical_asset(
            &format!("consumer-db-{i:02}"),
            &id,
            vec!["ssn", "email", "address"],
        );
        goal_assets.push(asset.id.clone());
        cat.place_asset(asset);
        db_ids.push(id);
    }

    // One web server, chosen by seed, holds a plaintext SSH configuration
    // file with credentials to every database.
    let holder = web_ids[rng.gen_range(0..web_ids.len())].clone();
    for (i, db) in db_ids.iter().enumerate() {
        cat.store_cred(
            &holder,
            user_cred(&format!("cred-db-{:02}", i + 1), "dbadmin", db),
        );
    }

    let ext = NetEndpoint::External;
    let dmz_ep = NetEndpoint::Subnet(dmz_id.clone());
    let db_ep = NetEndpoint::Subnet(dbnet_id.clone());
    let reachability = vec![
        rule(ext.clone(), dmz_ep.clone(), protocols([Protocol::Https])),
        rule(dmz_ep.clone(), ext.clone(), protocols([Protocol::Https])),
        rule(
            dmz_ep.clone(),
            dmz_ep.clone(),
            protocols([Protocol::Ssh, Protocol::Https]),
        ),
        rule(
            dmz_ep.clone(),
            db_ep.clone(),
            protocols([Protocol::Ssh, Protocol::Db]),
        ),
        rule(db_ep.clone(), dmz_ep, protocols([Protocol::Ssh])),
        rule(
            db_ep.clone(),
            db_ep,
            protocols([Protocol::Ssh, Protocol::Db]),
        ),
    ];

    Ok(Environment {
        name: "equifax".into(),
        subnets: [(dmz_id, dmz), (dbnet_id, dbnet)].into_iter().collect(),
        hosts: cat.hosts,
        vulnerabilities: cat.vulnerabilities,
        credentials: cat.credentials,
        assets: cat.assets,
        reachability,
        goals: GoalSpec {
            kind: GoalKind::ExfiltrateAssets {
                assets: goal_assets,
            },
            time_limit: params.time_limit.unwrap_or(DEFAULT_TIME_LIMIT),
        },
        attacker_entry: AttackerEntry::ExternalScan,
    })
}

// ---------------------------------------------------------------------------
// colonial: two IT networks and one OT network of sensors/controllers/actuators
// ---------------------------------------------------------------------------

fn build_colonial(params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Environment, BuildError> {
    let actuators = params.actuators.unwrap_or(5);
    if actuators == 0 {
        return Err(BuildError::InvalidSize {
            builder: "colonial",
            reason: "actuator count must be at least 1".into(),
        });
    }

    let (it_a_id, it_a) = subnet("it-a", "corporate IT A", false);
    let (it_b_id, it_b) = subnet("it-b", "corporate IT B", false);
    let (ot_id, ot) = subnet("ot", "operational technology", false);

    let mut cat = Catalog::new();
    let backdoor = cat.add_vuln("reverse-shell", "reverse-shell-backdoor", "agent", true);

    // Each IT network has ten hosts; the first is the management host that
    // monitors the OT floor.  Its monitoring agent carries the backdoor.
    let mut mgmt_ids = Vec::new();
    let mut it_host_ids = Vec::new();
    for (net, net_ep) in [("it-a", &it_a_id), ("it-b", &it_b_id)] {
        for i in 1..=10u32 {
            let id_str = if i == 1 {
                format!("{net}-mgmt")
            } else {
                format!("{net}-ws-{i:02}")
            };
            let mut services = vec![sshd()];
            let mut h = if i == 1 {
                services.push(svc("monitor", Protocol::Https, 8443));
                services.push(svc("agent", Protocol::Custom("agent".into()), 4444));
                plain_host(&id_str, net_ep, services, vec!["operator"])
            } else {
                services.push(svc("smb", Protocol::Custom("smb".into()), 445));
                plain_host(&id_str, net_ep, services, vec!["employee"])
            };
            if i == 1 {
                h.vulnerabilities.push(backdoor.clone());
            }
            let id = cat.add_host(h);
            if i == 1 {
                mgmt_ids.push(id.clone());
            }
            it_host_ids.push(id);
        }
    }

    let mut sensor_ids = Vec::new();
    for i in 1..=15u32 {
        let h = plain_host(
            &format!("sensor-{i:02}"),
            &ot_id,
            vec![sshd(), svc("telemetry", Protocol::Http, 8080)],
            vec!["ot-operator"],
        );
        sensor_ids.push(cat.add_host(h));
    }
    let mut ctrl_ids = Vec::new();
    let mut act_ids = Vec::new();
    for i in 1..=actuators {
        let c = plain_host(
            &format!("ctrl-{i:02}"),
            &ot_id,
            vec![sshd(), svc("control-plane", Protocol::Http, 8081)],
            vec!["ot-operator"],
        );
        ctrl_ids.push(cat.add_host(c));
        let a = plain_host(
            &format!("act-{i:02}"),
            &ot_id,
            vec![sshd(), svc("plc", Protocol::Custom("plc".into()), 502)],
            vec!["ot-operator"],
        );
        act_ids.push(cat.add_host(a));
    }

    // Management hosts hold credentials to every sensor and controller;
    // each controller holds the credential to its own actuator.
    for (tag, mgmt) in [("a", &mgmt_ids[0]), ("b", &mgmt_ids[1])] {
        for (i, s) in sensor_ids.iter().enumerate() {
            cat.store_cred(
                mgmt,
                user_cred(&format!("cred-{tag}-sensor-{:02}", i + 1), "ot-operator", s),
            );
        }
        for (i, c) in ctrl_ids.iter().enumerate() {
            cat.store_cred(
                mgmt,
                user_cred(&format!("cred-{tag}-ctrl-{:02}", i + 1), "ot-operator", c),
            );
        }
    }
    for (i, (c, a)) in ctrl_ids.iter().zip(&act_ids).enumerate() {
        cat.store_cred(
            c,
            user_cred(&format!("cred-act-{:02}", i + 1), "plc-admin", a),
        );
    }

    let it_a_ep = NetEndpoint::Subnet(it_a_id.clone());
    let it_b_ep = NetEndpoint::Subnet(it_b_id.clone());
    let ot_ep = NetEndpoint::Subnet(ot_id.clone());
    let agent = Protocol::Custom("agent".into());
    let smb = Protocol::Custom("smb".into());
    let reachability = vec![
        rule(
            it_a_ep.clone(),
            it_a_ep.clone(),
            protocols([Protocol::Ssh, agent.clone(), smb.clone()]),
        ),
        rule(
            it_b_ep.clone(),
            it_b_ep.clone(),
            protocols([Protocol::Ssh, agent, smb]),
        ),
        rule(it_a_ep, ot_ep.clone(), protocols([Protocol::Ssh])),
        rule(it_b_ep, ot_ep.clone(), protocols([Protocol::Ssh])),
        rule(
            ot_ep.clone(),
            ot_ep,
            protocols([Protocol::Ssh, Protocol::Http]),
        ),
    ];

    // The attacker starts on a random IT workstation, standing in for a
    // weak-password or phishing compromise.
    let entry = it_host_ids[rng.gen_range(0..it_host_ids.len())].clone();

    Ok(Environment {
        name: "colonial".into(),
        subnets: [(it_a_id, it_a), (it_b_id, it_b), (ot_id, ot)]
            .into_iter()
            .collect(),
        hosts: cat.hosts,
        vulnerabilities: cat.vulnerabilities,
        credentials: cat.credentials,
        assets: cat.assets,
        reachability,
        goals: GoalSpec {
            kind: GoalKind::InfectHosts { hosts: act_ids },
            time_limit: params.time_limit.unwrap_or(DEFAULT_TIME_LIMIT),
        },
        attacker_entry: AttackerEntry::FootholdOnHost { host: entry },
    })
}

// ---------------------------------------------------------------------------
// chain: ring of hosts where each holds the credential to the next
// ---------------------------------------------------------------------------

fn build_chain(params: &BuildParams, _rng: &mut ChaCha8Rng) -> Result<Environment, BuildError> {
    let n = params.size.unwrap_or(25);
    if n < 2 {
        return Err(BuildError::InvalidSize {
            builder: "chain",
            reason: format!("chain length must be at least 2, got {n}"),
        });
    }

    let (net_id, net) = subnet("ring", "ring network", false);
    let mut cat = Catalog::new();

    let mut ids = Vec::new();
    for i in 1..=n {
        let id = cat.add_host(plain_host(
            &format!("h-{i:02}"),
            &net_id,
            vec![sshd()],
            vec!["user"],
        ));
        let asset = critical_asset(&format!("chain-data-{i:02}"), &id, vec!["password"]);
        cat.place_asset(asset);
        ids.push(id);
    }
    // h-i holds the credential to h-(i+1); the last host closes the ring.
    let mut goal_assets: Vec<AssetId> = cat.assets.keys().cloned().collect();
    goal_assets.sort();
    for i in 0..n as usize {
        let next_idx = (i + 1) % n as usize;
        cat.store_cred(
            &ids[i],
            user_cred(
                &format!("cred-h-{:02}", next_idx + 1),
                "user",
                &ids[next_idx],
            ),
        );
    }

    let net_ep = NetEndpoint::Subnet(net_id.clone());
    let reachability = vec![rule(net_ep.clone(), net_ep, protocols([Protocol::Ssh]))];

    Ok(Environment {
        name: "chain".into(),
        subnets: [(net_id, net)].into_iter().collect(),
        hosts: cat.hosts,
        vulnerabilities: cat.vulnerabilities,
        credentials: cat.credentials,
        assets: cat.assets,
        reachability,
        goals: GoalSpec {
            kind: GoalKind::ExfiltrateAssets {
                assets: goal_assets,
            },
            time_limit: params.time_limit.unwrap_or(DEFAULT_TIME_LIMIT),
        },
        attacker_entry: AttackerEntry::FootholdOnHost {
            host: ids[0].clone(),
        },
    })
}

// ---------------------------------------------------------------------------
// star: foothold hub with credentials to every spoke
// ---------------------------------------------------------------------------

fn build_star(params: &BuildParams, _rng: &mut ChaCha8Rng) -> Result<Environment, BuildError> {
    let n = params.size.unwrap_or(25);
    if n < 1 {
        return Err(BuildError::InvalidSize {
            builder: "star",
            reason: "spoke count must be at least 1".into(),
        });
    }

    let (net_id, net) = subnet("flat", "flat network", false);
    let mut cat = Catalog::new();

    let hub = cat.add_host(plain_host("hub", &net_id, vec![sshd()], vec!["user"]));
    cat.place_asset(critical_asset("star-data-hub", &hub, vec!["password"]));
    for i in 1..=n {
        let id = cat.add_host(plain_host(
            &format!("spoke-{i:02}"),
            &net_id,
            vec![sshd()],
            vec!["user"],
        ));
        cat.store_cred(
            &hub,
            user_cred(&format!("cred-spoke-{i:02}"), "user", &id),
        );
        cat.place_asset(critical_asset(&format!("star-data-{i:02}"), &id, vec!["password"]));
    }
    let mut goal_assets: Vec<AssetId> = cat.assets.keys().cloned().collect();
    goal_assets.sort();

    let net_ep = NetEndpoint::Subnet(net_id.clone());
    let reachability = vec![rule(net_ep.clone(), net_ep, protocols([Protocol::Ssh]))];

    Ok(Environment {
        name: "star".into(),
        subnets: [(net_id, net)].into_iter().collect(),
        hosts: cat.hosts,
        vulnerabilities: cat.vulnerabilities,
        credentials: cat.credentials,
        assets: cat.assets,
        reachability,
        goals: GoalSpec {
            kind: GoalKind::ExfiltrateAssets {
                assets: goal_assets,
            },
            time_limit: params.time_limit.unwrap_or(DEFAULT_TIME_LIMIT),
        },
        attacker_entry: AttackerEntry::FootholdOnHost { host: hub },
    })
}

// ---------------------------------------------------------------------------
// enterprise: external services subnet plus three office floors
// ---------------------------------------------------------------------------

fn build_enterprise(params: &BuildParams, rng: &mut ChaCha8Rng) -> Result<Environment, BuildError> {
    if let Some(size) = params.size {
        if size != 20 {
            return Err(BuildError::InvalidSize {
                builder: "enterprise",
                reason: format!("the office tree has a fixed 20 hosts, got {size}"),
            });
        }
    }

    let (ext_id, ext_subnet) = subnet("services", "external services", true);
    let floors: Vec<(SubnetId, Subnet)> = (1..=3u32)
        .map(|f| subnet(&format!("floor-{f}"), &format!("office floor {f}"), false))
        .collect();

    let mut cat = Catalog::new();
    let web_vuln = cat.add_vuln("httpd-rce", "CVE-2021-41773", "httpd", true);
    let backdoor = cat.add_vuln("reverse-shell", "reverse-shell-backdoor", "agent", true);

    for i in 1..=2u32 {
        let mut h = plain_host(
            &format!("web-{i:02}"),
            &ext_id,
            vec![svc("httpd", Protocol::Https, 443), sshd()],
            vec!["webadmin"],
        );
        h.vulnerabilities.push(web_vuln.clone());
        cat.add_host(h);
    }

    // Each floor: one backdoored ops host, two database hosts, three user
    // servers.  One seed-chosen floor's ops host holds credentials to that
    // floor's databases, which carry the critical data; the other ops hosts
    // hold credentials to their floor's user servers.
    let chosen_floor = rng.gen_range(1..=3u32);
    let mut goal_assets = Vec::new();
    for f in 1..=3u32 {
        let floor_ep = &floors[(f - 1) as usize].0;
        let mut ops = plain_host(
            &format!("floor{f}-ops"),
            floor_ep,
            vec![sshd(), svc("agent", Protocol::Custom("agent".into()), 4444)],
            vec!["facilities"],
        );
        ops.vulnerabilities.push(backdoor.clone());
        let ops_id = cat.add_host(ops);

        let mut db_ids = Vec::new();
        for d in 1..=2u32 {
            let id = cat.add_host(plain_host(
                &format!("floor{f}-db-{d}"),
                floor_ep,
                vec![sshd(), svc("postgres", Protocol::Db, 5432)],
                vec!["dba"],
            ));
            let critical = f == chosen_floor;
            let asset = DataAsset {
                id: AssetId::new(format!("floor{f}-records-{d}")),
                host: id.clone(),
                size_units: 1,
                critical,
                is_decoy: false,
                markers: if critical {
                    vec!["customer".into(), "email".into()]
                } else {
                    vec!["archive".into()]
                },
            };
            if critical {
                goal_assets.push(asset.id.clone());
            }
            cat.place_asset(asset);
            db_ids.push(id);
        }

        let mut user_ids = Vec::new();
        for u in 1..=3u32 {
            let id = cat.add_host(plain_host(
                &format!("floor{f}-user-{u}"),
                floor_ep,
                vec![sshd(), svc("files", Protocol::Custom("smb".into()), 445)],
                vec!["employee"],
            ));
            let asset = DataAsset {
                id: AssetId::new(format!("floor{f}-userdata-{u}")),
                host: id.clone(),
                size_units: 1,
                critical: false,
                is_decoy: false,
                markers: vec!["documents".into()],
            };
            cat.place_asset(asset);
            user_ids.push(id);
        }

        if f == chosen_floor {
            for (i, db) in db_ids.iter().enumerate() {
                cat.store_cred(
                    &ops_id,
                    user_cred(&format!("cred-floor{f}-db-{}", i + 1), "dba", db),
                );
            }
        } else {
            for (i, us) in user_ids.iter().enumerate() {
                cat.store_cred(
                    &ops_id,
                    user_cred(&format!("cred-floor{f}-user-{}", i + 1), "employee", us),
                );
            }
        }
    }

    let ext_ep = NetEndpoint::Subnet(ext_id.clone());
    let agent = Protocol::Custom("agent".into());
    let mut reachability = vec![
        rule(
            NetEndpoint::External,
            ext_ep.clone(),
            protocols([Protocol::Https]),
        ),
        rule(
            ext_ep.clone(),
            NetEndpoint::External,
            protocols([Protocol::Https]),
        ),
        rule(
            ext_ep.clone(),
            ext_ep.clone(),
            protocols([Protocol::Ssh, Protocol::Https]),
        ),
    ];
    for (fid, _) in &floors {
        let fep = NetEndpoint::Subnet(fid.clone());
        reachability.push(rule(
            ext_ep.clone(),
            fep.clone(),
            protocols([Protocol::Ssh, agent.clone()]),
        ));
        reachability.push(rule(fep.clone(), ext_ep.clone(), protocols([Protocol::Ssh])));
        reachability.push(rule(
            fep.clone(),
            fep,
            protocols([Protocol::Ssh, Protocol::Db]),
        ));
    }

    let mut subnets: BTreeMap<SubnetId, Subnet> = floors.into_iter().collect();
    subnets.insert(ext_id, ext_subnet);
    goal_assets.sort();

    Ok(Environment {
        name: "enterprise".into(),
        subnets,
        hosts: cat.hosts,
        vulnerabilities: cat.vulnerabilities,
        credentials: cat.credentials,
        assets: cat.assets,
        reachability,
        goals: GoalSpec {
            kind: GoalKind::ExfiltrateAssets {
                assets: goal_assets,
            },
            time_limit: params.time_limit.unwrap_or(DEFAULT_TIME_LIMIT),
        },
        attacker_entry: AttackerEntry::ExternalScan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::GoalKind;

    fn build(name: &str, seed: u64) -> Environment {
        build_environment(
            name,
            &BuildParams {
                seed,
                ..BuildParams::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn all_builtins_are_valid() {
        for name in builtin_names() {
            let env = build(name, 3);
            let violations = env.validate();
            assert!(
                violations.is_empty(),
                "{name} builder produced violations: {violations:?}"
            );
        }
    }

    #[test]
    fn builders_are_deterministic() {
        for name in builtin_names() {
            for seed in [0u64, 1, 42] {
                let a = build(name, seed);
                let b = build(name, seed);
                assert_eq!(a.dump_json(), b.dump_json(), "{name} seed {seed}");
            }
        }
    }

    #[test]
    fn equifax_has_expected_shape() {
        let env = build("equifax", 1);
        assert_eq!(env.hosts.len(), 50);
        let critical = env.assets.values().filter(|a| a.critical).count();
        assert_eq!(critical, 48);
        let holders: Vec<_> = env
            .hosts
            .values()
            .filter(|h| !h.stored_credentials.is_empty())
            .collect();
        assert_eq!(holders.len(), 1, "exactly one host carries the credential file");
        assert!(holders[0].id.as_str().starts_with("web-"));
        assert_eq!(holders[0].stored_credentials.len(), 48);
        // The holder choice is seed-driven: some seed picks each server.
        let picked: BTreeSet<String> = (0..16)
            .map(|s| {
                build("equifax", s)
                    .hosts
                    .values()
                    .find(|h| !h.stored_credentials.is_empty())
                    .unwrap()
                    .id
                    .to_string()
            })
            .collect();
        assert_eq!(picked.len(), 2, "both web servers get picked across seeds");
    }

    #[test]
    fn colonial_has_expected_shape() {
        let env = build("colonial", 7);
        assert_eq!(env.hosts.len(), 45);
        let sensors = env.hosts.keys().filter(|h| h.as_str().starts_with("sensor-")).count();
        let ctrls = env.hosts.keys().filter(|h| h.as_str().starts_with("ctrl-")).count();
        let acts = env.hosts.keys().filter(|h| h.as_str().starts_with("act-")).count();
        assert_eq!((sensors, ctrls, acts), (15, 5, 5));
        // Each controller holds a credential to exactly one actuator.
        for i in 1..=5 {
            let ctrl = env.host(&HostId::new(format!("ctrl-{i:02}"))).unwrap();
            assert_eq!(ctrl.stored_credentials.len(), 1);
            let cred = env.credential(&ctrl.stored_credentials[0]).unwrap();
            assert_eq!(cred.target_host.as_str(), format!("act-{i:02}"));
        }
        // Management hosts hold credentials to all sensors and controllers.
        for mgmt in ["it-a-mgmt", "it-b-mgmt"] {
            let h = env.host(&HostId::new(mgmt)).unwrap();
            assert_eq!(h.stored_credentials.len(), 20);
            assert!(h.vulnerabilities.iter().any(|v| v.as_str() == "reverse-shell"));
        }
        match &env.goals.kind {
            GoalKind::InfectHosts { hosts } => assert_eq!(hosts.len(), 5),
            other => panic!("unexpected goal {other:?}"),
        }
        // Entry is a seed-chosen IT host.
        match &env.attacker_entry {
            AttackerEntry::FootholdOnHost { host } => {
                assert!(host.as_str().starts_with("it-"), "entry {host} is an IT host");
            }
            other => panic!("unexpected entry {other:?}"),
        }
    }

    #[test]
    fn colonial_actuator_count_is_adjustable() {
        let env = build_environment(
            "colonial",
            &BuildParams {
                actuators: Some(15),
                seed: 0,
                ..BuildParams::default()
            },
        )
        .unwrap();
        let acts = env.hosts.keys().filter(|h| h.as_str().starts_with("act-")).count();
        assert_eq!(acts, 15);
        assert!(env.validate().is_empty());
    }

    #[test]
    fn chain_links_each_host_to_the_next() {
        let env = build("chain", 0);
        assert_eq!(env.hosts.len(), 25);
        for i in 1..=25u32 {
            let h = env.host(&HostId::new(format!("h-{i:02}"))).unwrap();
            assert_eq!(h.stored_credentials.len(), 1);
            let next = if i == 25 { 1 } else { i + 1 };
            let cred = env.credential(&h.stored_credentials[0]).unwrap();
            assert_eq!(cred.target_host.as_str(), format!("h-{next:02}"));
            assert_eq!(h.data_assets.len(), 1);
        }
    }

    #[test]
    fn minimal_chain_is_valid() {
        let env = build_environment(
            "chain",
            &BuildParams {
                size: Some(3),
                seed: 0,
                ..BuildParams::default()
            },
        )
        .unwrap();
        assert_eq!(env.hosts.len(), 3);
        assert!(env.validate().is_empty());
        let h1 = env.host(&HostId::new("h-01")).unwrap();
        let cred = env.credential(&h1.stored_credentials[0]).unwrap();
        assert_eq!(cred.target_host.as_str(), "h-02");
    }

    #[test]
    fn star_hub_holds_credentials_to_every_spoke() {
        let env = build("star", 0);
        assert_eq!(env.hosts.len(), 26);
        let hub = env.host(&HostId::new("hub")).unwrap();
        assert_eq!(hub.stored_credentials.len(), 25);
        assert!(env.hosts.values().all(|h| h.data_assets.len() == 1));
        assert!(env.assets.values().all(|a| a.critical));
        assert_eq!(
            env.attacker_entry,
            AttackerEntry::FootholdOnHost {
                host: HostId::new("hub")
            }
        );
    }

    #[test]
    fn enterprise_routes_one_floor_to_critical_data() {
        let env = build("enterprise", 5);
        assert_eq!(env.hosts.len(), 20);
        assert_eq!(env.subnets.len(), 4);
        let critical: Vec<_> = env.assets.values().filter(|a| a.critical).collect();
        assert_eq!(critical.len(), 2);
        // The ops host on the chosen floor is the one whose credentials
        // target the critical databases.
        let db_cred_holders: Vec<_> = env
            .hosts
            .values()
            .filter(|h| {
                h.stored_credentials.iter().any(|c| {
                    env.credential(c)
                        .map(|c| {
                            env.host(&c.target_host)
                                .map(|t| t.data_assets.iter().any(|a| env.asset(a).unwrap().critical))
                                .unwrap_or(false)
                        })
                        .unwrap_or(false)
                })
            })
            .collect();
        assert_eq!(db_cred_holders.len(), 1);
        assert!(db_cred_holders[0].id.as_str().ends_with("-ops"));
        // Chosen floor varies across seeds.
        let floors: BTreeSet<String> = (0..24)
            .map(|s| {
                build("enterprise", s)
                    .assets
                    .values()
                    .find(|a| a.critical)
                    .unwrap()
                    .host
                    .to_string()
            })
            .collect();
        assert!(floors.len() > 1, "chosen floor is seed-driven: {floors:?}");
    }

    #[test]
    fn size_errors_are_reported() {
        let short = build_environment(
            "chain",
            &BuildParams {
                size: Some(1),
                seed: 0,
                ..BuildParams::default()
            },
        );
        assert!(matches!(short, Err(BuildError::InvalidSize { builder: "chain", .. })));
        let unknown = build_environment("darkside_net", &BuildParams::default());
        assert!(matches!(unknown, Err(BuildError::UnknownEnvironment(_))));
    }
}
