//! Sensors and the observation bus.
//!
//! Raw kernel events are not what agents see.  Each low-level event passes
//! through [`translate`], which decides — per audience — what observation it
//! produces, if any.  Defender observations model network sensors (and, in
//! fine-grained mode, host monitoring); attacker observations model the
//! attacker's own tooling parsing its command results.  Novelty is judged
//! against the attacker's knowledge base *before* the observation is
//! recorded, so replaying a scan of a known subnet produces nothing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::DataAsset;
use crate::events::{HighLevelEventKind, LowLevelEvent, LowLevelEventKind};
use crate::ids::{Agent, AssetId, Location};
use crate::kb::{DecoyRegistry, KnowledgeBase};

/// File-content keywords that mark data as worth stealing.  Decoy data is
/// planted with the same keywords, which is exactly the point.
pub const SENSITIVE_MARKERS: &[&str] = &["address", "email", "password", "ssn"];

/// How much the defender's sensors can see.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TelemetryMode {
    /// Wire-level only: connections and decoy-host contact.
    #[default]
    NetworkTrace,
    /// Adds host monitoring: decoy-credential use becomes visible.
    FineGrained,
}

impl std::fmt::Display for TelemetryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TelemetryMode::NetworkTrace => "network-trace",
            TelemetryMode::FineGrained => "fine-grained",
        })
    }
}

impl std::str::FromStr for TelemetryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "network-trace" => Ok(TelemetryMode::NetworkTrace),
            "fine-grained" => Ok(TelemetryMode::FineGrained),
            other => Err(format!(
                "unknown telemetry mode {other:?} (expected network-trace or fine-grained)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubId(pub u64);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TelemetryError {
    #[error("unknown observation kind {0:?}; see HighLevelEventKind::all_names()")]
    UnknownKind(String),
    #[error("telemetry mode is fixed once the run starts")]
    Sealed,
}

#[derive(Debug, Clone)]
struct Subscription {
    agent: Agent,
    kind: &'static str,
}

/// Subscription registry and mode holder.  Delivery order is decided by the
/// run loop; the bus only answers who wants what.
#[derive(Debug, Clone)]
pub struct TelemetryBus {
    mode: TelemetryMode,
    sealed: bool,
    next: u64,
    subs: BTreeMap<SubId, Subscription>,
}

impl TelemetryBus {
    pub fn new(mode: TelemetryMode) -> Self {
        TelemetryBus {
            mode,
            sealed: false,
            next: 0,
            subs: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> TelemetryMode {
        self.mode
    }

    /// Change the sensor mode.  Only allowed before the run starts: swapping
    /// sensors mid-run would make time-to-detection numbers meaningless.
    pub fn set_mode(&mut self, mode: TelemetryMode) -> Result<(), TelemetryError> {
        if self.sealed {
            return Err(TelemetryError::Sealed);
        }
        self.mode = mode;
        Ok(())
    }

    /// Lock the configuration; called when the clock starts.
    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn subscribe(&mut self, agent: Agent, kind: &str) -> Result<SubId, TelemetryError> {
        let canonical = HighLevelEventKind::all_names()
            .iter()
            .find(|k| **k == kind)
            .copied()
            .ok_or_else(|| TelemetryError::UnknownKind(kind.to_string()))?;
        let id = SubId(self.next);
        self.next += 1;
        self.subs.insert(
            id,
            Subscription {
                agent,
                kind: canonical,
            },
        );
        Ok(id)
    }

    pub fn unsubscribe(&mut self, id: SubId) -> bool {
        self.subs.remove(&id).is_some()
    }

    /// Does `agent` have a live subscription for this observation kind?
    pub fn wants(&self, agent: Agent, kind: &str) -> bool {
        self.subs
            .values()
            .any(|s| s.agent == agent && s.kind == kind)
    }
}

/// An observation produced by translation, not yet sequenced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derived {
    pub audience: Agent,
    pub kind: HighLevelEventKind,
    /// Low-level event sequence numbers this observation came from.
    pub provenance: Vec<u64>,
}

/// Everything translation is allowed to consult.
pub struct SensorCtx<'a> {
    pub mode: TelemetryMode,
    /// Defender's ground truth about deployed deception.
    pub registry: &'a DecoyRegistry,
    /// Attacker knowledge, used for novelty checks only.
    pub attacker: &'a KnowledgeBase,
    /// File contents by asset id — what a reader of the file would see.
    pub assets: &'a BTreeMap<AssetId, DataAsset>,
}

/// Turn one raw event into zero or more per-audience observations.
///
/// Pure: no state is modified here.  The caller records each observation
/// into the audience's knowledge base afterwards, which is what advances
/// the novelty horizon between events.
pub fn translate(low: &LowLevelEvent, ctx: &SensorCtx) -> Vec<Derived> {
    let mut out = Vec::new();
    let mut push = |audience: Agent, kind: HighLevelEventKind| {
        out.push(Derived {
            audience,
            kind,
            provenance: vec![low.seq],
        });
    };
    let is_decoy_loc = |loc: &Location| match loc {
        Location::Host(h) => ctx.registry.hosts.contains_key(h),
        Location::External => false,
    };

    match &low.kind {
        LowLevelEventKind::Connection { src, dst, protocol } => {
            if let Location::Host(h) = dst {
                if ctx.registry.hosts.contains_key(h) && !is_decoy_loc(src) {
                    push(
                        Agent::Defender,
                        HighLevelEventKind::DecoyHostInteraction {
                            source: src.clone(),
                            target: h.clone(),
                        },
                    );
                }
            }
            if *protocol == crate::ids::Protocol::Ssh {
                push(
                    Agent::Defender,
                    HighLevelEventKind::SshConnection {
                        src: src.clone(),
                        dst: dst.clone(),
                    },
                );
            }
        }

        LowLevelEventKind::SyscallCredentialUse { host, credential } => {
            if ctx.mode == TelemetryMode::FineGrained
                && ctx.registry.credentials.contains(credential)
            {
                push(
                    Agent::Defender,
                    HighLevelEventKind::HostUsedDecoyCredential {
                        host: host.clone(),
                        credential: credential.clone(),
                    },
                );
            }
        }

        LowLevelEventKind::SyscallFileRead { host, asset } if low.actor == Agent::Attacker => {
            let sensitive = ctx.assets.get(asset).filter(|a| {
                a.markers
                    .iter()
                    .any(|m| SENSITIVE_MARKERS.contains(&m.as_str()))
            });
            if let Some(a) = sensitive {
                if !ctx.attacker.assets.contains_key(asset) {
                    push(
                        Agent::Attacker,
                        HighLevelEventKind::DataFound {
                            asset: asset.clone(),
                            host: host.clone(),
                            size_units: a.size_units,
                        },
                    );
                }
            }
        }

        LowLevelEventKind::ScanOutput { entries, .. } if low.actor == Agent::Attacker => {
            for entry in entries {
                let known = ctx.attacker.hosts.get(&entry.host);
                if known.is_none() {
                    push(
                        Agent::Attacker,
                        HighLevelEventKind::FoundHost {
                            host: entry.host.clone(),
                            subnet: entry.subnet.clone(),
                        },
                    );
                }
                let new_services: Vec<_> = entry
                    .services
                    .iter()
                    .filter(|s| known.map_or(true, |k| !k.services.contains(s)))
                    .cloned()
                    .collect();
                let new_vulns: Vec<_> = entry
                    .vulnerabilities
                    .iter()
                    .filter(|v| known.map_or(true, |k| !k.vulnerabilities.contains_key(&v.id)))
                    .cloned()
                    .collect();
                if !new_services.is_empty() || !new_vulns.is_empty() {
                    push(
                        Agent::Attacker,
                        HighLevelEventKind::FoundNetworkServices {
                            host: entry.host.clone(),
                            services: new_services,
                            vulnerabilities: new_vulns,
                        },
                    );
                }
            }
        }

        LowLevelEventKind::CommandOutput { host, summary } if low.actor == Agent::Attacker => {
            for route in &summary.routes {
                if !ctx.attacker.subnets.contains_key(route) {
                    push(
                        Agent::Attacker,
                        HighLevelEventKind::FoundSubnet {
                            subnet: route.clone(),
                        },
                    );
                }
            }
            for rec in &summary.credentials {
                if !ctx.attacker.credentials.contains_key(&rec.credential) {
                    push(
                        Agent::Attacker,
                        HighLevelEventKind::FoundCredential {
                            credential: rec.credential.clone(),
                            target_host: rec.target_host.clone(),
                            target_subnet: rec.target_subnet.clone(),
                            privilege: rec.privilege,
                            found_on: host.clone(),
                        },
                    );
                }
            }
            // Locally visible flaws (package listings) widen the graph the
            // same way remote banners do.
            let known = ctx.attacker.hosts.get(host);
            let new_vulns: Vec<_> = summary
                .vulnerabilities
                .iter()
                .filter(|v| known.map_or(true, |k| !k.vulnerabilities.contains_key(&v.id)))
                .cloned()
                .collect();
            if !new_vulns.is_empty() {
                push(
                    Agent::Attacker,
                    HighLevelEventKind::FoundNetworkServices {
                        host: host.clone(),
                        services: Vec::new(),
                        vulnerabilities: new_vulns,
                    },
                );
            }
        }

        LowLevelEventKind::TransferComplete { asset, to, .. }
            if low.actor == Agent::Attacker =>
        {
            // Data leaves the network only through the egress point, and only
            // while the attacker still holds it: a copy parked on a foothold
            // the defender has since reclaimed is stranded, not stolen.
            let egress_held = match &ctx.attacker.entry {
                Location::External => true,
                Location::Host(h) => ctx.attacker.infected.contains_key(h),
            };
            if *to == ctx.attacker.entry
                && egress_held
                && !ctx.attacker.exfiltrated.contains(asset)
            {
                push(
                    Agent::Attacker,
                    HighLevelEventKind::ExfiltratedData {
                        asset: asset.clone(),
                    },
                );
            }
        }

        LowLevelEventKind::ImplantInstalled { host, privilege }
            if low.actor == Agent::Attacker =>
        {
            let prev = ctx.attacker.infected.get(host).copied();
            if prev.is_none() {
                push(
                    Agent::Attacker,
                    HighLevelEventKind::InfectedNewHost {
                        host: host.clone(),
                        privilege: *privilege,
                    },
                );
            }
            let is_upgrade_to_root = *privilege == crate::ids::Privilege::Root
                && prev.map_or(true, |p| p < crate::ids::Privilege::Root);
            if is_upgrade_to_root {
                push(
                    Agent::Attacker,
                    HighLevelEventKind::GotRootAccess { host: host.clone() },
                );
            }
        }

        LowLevelEventKind::HostRestored { host } | LowLevelEventKind::HostShutdown { host } => {
            // The implant's heartbeat stops; the attacker notices regardless
            // of who pulled the plug.
            if ctx.attacker.infected.contains_key(host) {
                push(
                    Agent::Attacker,
                    HighLevelEventKind::LostAccess { host: host.clone() },
                );
            }
        }

        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::builders::{build_environment, BuildParams};
    use crate::env::Environment;
    use crate::events::{
        AssetRecord, CommandSummary, CredentialRecord, ScanEntry, ServiceBanner, VulnBanner,
    };
    use crate::ids::{CredentialId, HostId, Privilege, Protocol, SubnetId};

    fn chain3() -> Environment {
        build_environment(
            "chain",
            &BuildParams {
                size: Some(3),
                ..BuildParams::default()
            },
        )
        .unwrap()
    }

    struct Fixture {
        env: Environment,
        attacker: KnowledgeBase,
        registry: DecoyRegistry,
    }

    impl Fixture {
        fn new() -> Self {
            let env = chain3();
            let attacker = KnowledgeBase::for_attacker(&env);
            let mut registry = DecoyRegistry::default();
            registry
                .hosts
                .insert(HostId::new("node-01"), SubnetId::new("ring"));
            registry.credentials.insert(CredentialId::new("dc-01"));
            Fixture {
                env,
                attacker,
                registry,
            }
        }

        fn ctx(&self, mode: TelemetryMode) -> SensorCtx<'_> {
            SensorCtx {
                mode,
                registry: &self.registry,
                attacker: &self.attacker,
                assets: &self.env.assets,
            }
        }
    }

    fn low(actor: Agent, kind: LowLevelEventKind) -> LowLevelEvent {
        LowLevelEvent {
            seq: 11,
            tick: 3,
            actor,
            kind,
        }
    }

    #[test]
    fn ssh_connections_are_visible_in_both_modes() {
        let f = Fixture::new();
        let ev = low(
            Agent::Attacker,
            LowLevelEventKind::Connection {
                src: Location::Host(HostId::new("h-01")),
                dst: Location::Host(HostId::new("h-02")),
                protocol: Protocol::Ssh,
            },
        );
        for mode in [TelemetryMode::NetworkTrace, TelemetryMode::FineGrained] {
            let derived = translate(&ev, &f.ctx(mode));
            assert_eq!(derived.len(), 1);
            assert_eq!(derived[0].audience, Agent::Defender);
            assert!(matches!(
                derived[0].kind,
                HighLevelEventKind::SshConnection { .. }
            ));
            assert_eq!(derived[0].provenance, vec![11]);
        }
    }

    #[test]
    fn decoy_contact_fires_only_for_non_decoy_sources() {
        let f = Fixture::new();
        let hit = low(
            Agent::Attacker,
            LowLevelEventKind::Connection {
                src: Location::Host(HostId::new("h-01")),
                dst: Location::Host(HostId::new("node-01")),
                protocol: Protocol::Https,
            },
        );
        let derived = translate(&hit, &f.ctx(TelemetryMode::NetworkTrace));
        assert_eq!(derived.len(), 1);
        assert!(matches!(
            &derived[0].kind,
            HighLevelEventKind::DecoyHostInteraction { target, .. }
                if *target == HostId::new("node-01")
        ));

        // Decoy-to-decoy traffic is background noise, not a detection.
        let noise = low(
            Agent::Attacker,
            LowLevelEventKind::Connection {
                src: Location::Host(HostId::new("node-01")),
                dst: Location::Host(HostId::new("node-01")),
                protocol: Protocol::Https,
            },
        );
        assert!(translate(&noise, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());

        // Contact with a real host is not decoy contact.
        let real = low(
            Agent::Attacker,
            LowLevelEventKind::Connection {
                src: Location::External,
                dst: Location::Host(HostId::new("h-02")),
                protocol: Protocol::Https,
            },
        );
        assert!(translate(&real, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());
    }

    #[test]
    fn decoy_credential_use_needs_fine_grained_sensors() {
        let f = Fixture::new();
        let ev = low(
            Agent::Attacker,
            LowLevelEventKind::SyscallCredentialUse {
                host: HostId::new("h-01"),
                credential: CredentialId::new("dc-01"),
            },
        );
        assert!(translate(&ev, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());
        let derived = translate(&ev, &f.ctx(TelemetryMode::FineGrained));
        assert_eq!(derived.len(), 1);
        assert!(matches!(
            &derived[0].kind,
            HighLevelEventKind::HostUsedDecoyCredential { host, .. }
                if *host == HostId::new("h-01")
        ));

        // Legitimate credentials never alarm, even under fine sensors.
        let benign = low(
            Agent::Attacker,
            LowLevelEventKind::SyscallCredentialUse {
                host: HostId::new("h-01"),
                credential: CredentialId::new("cred-h-02"),
            },
        );
        assert!(translate(&benign, &f.ctx(TelemetryMode::FineGrained)).is_empty());
    }

    #[test]
    fn fine_grained_output_is_a_superset_of_network_trace() {
        let f = Fixture::new();
        let events = vec![
            low(
                Agent::Attacker,
                LowLevelEventKind::Connection {
                    src: Location::Host(HostId::new("h-01")),
                    dst: Location::Host(HostId::new("node-01")),
                    protocol: Protocol::Ssh,
                },
            ),
            low(
                Agent::Attacker,
                LowLevelEventKind::SyscallCredentialUse {
                    host: HostId::new("h-01"),
                    credential: CredentialId::new("dc-01"),
                },
            ),
        ];
        let coarse: Vec<_> = events
            .iter()
            .flat_map(|e| translate(e, &f.ctx(TelemetryMode::NetworkTrace)))
            .collect();
        let fine: Vec<_> = events
            .iter()
            .flat_map(|e| translate(e, &f.ctx(TelemetryMode::FineGrained)))
            .collect();
        for obs in &coarse {
            assert!(fine.contains(obs), "fine mode dropped {obs:?}");
        }
        assert!(fine.len() > coarse.len());
    }

    #[test]
    fn scan_results_surface_only_what_is_new() {
        let f = Fixture::new();
        let entry = ScanEntry {
            host: HostId::new("h-02"),
            subnet: SubnetId::new("ring"),
            services: vec![ServiceBanner {
                name: "sshd".into(),
                protocol: Protocol::Ssh,
                port: 22,
            }],
            vulnerabilities: vec![],
        };
        let ev = low(
            Agent::Attacker,
            LowLevelEventKind::ScanOutput {
                subnet: SubnetId::new("ring"),
                entries: vec![entry],
            },
        );
        let mut f = f;
        let derived = translate(&ev, &f.ctx(TelemetryMode::NetworkTrace));
        assert_eq!(derived.len(), 2);
        assert!(matches!(derived[0].kind, HighLevelEventKind::FoundHost { .. }));
        assert!(matches!(
            derived[1].kind,
            HighLevelEventKind::FoundNetworkServices { .. }
        ));

        // Record what was seen; a second identical scan says nothing new.
        for d in derived {
            f.attacker.record_observation(&crate::events::HighLevelEvent {
                seq: 0,
                tick: 3,
                audience: Agent::Attacker,
                kind: d.kind,
                provenance: d.provenance,
            });
        }
        assert!(translate(&ev, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());
    }

    #[test]
    fn command_output_yields_credentials_routes_and_local_flaws() {
        let f = Fixture::new();
        let summary = CommandSummary {
            credentials: vec![CredentialRecord {
                credential: CredentialId::new("cred-h-02"),
                target_host: HostId::new("h-02"),
                target_subnet: SubnetId::new("ring"),
                privilege: Privilege::User,
            }],
            assets: vec![AssetRecord {
                asset: crate::ids::AssetId::new("chain-data-01"),
                host: HostId::new("h-01"),
                size_units: 1,
                markers: vec!["password".into()],
            }],
            routes: vec![SubnetId::new("ring"), SubnetId::new("ops")],
            services: vec![],
            vulnerabilities: vec![VulnBanner {
                id: crate::ids::VulnId::new("dirty-sock"),
                protocol: Protocol::Ssh,
                grants: Privilege::Root,
                remote: false,
            }],
            note: None,
        };
        let ev = low(
            Agent::Attacker,
            LowLevelEventKind::CommandOutput {
                host: HostId::new("h-01"),
                summary,
            },
        );
        let derived = translate(&ev, &f.ctx(TelemetryMode::NetworkTrace));
        let names: Vec<&str> = derived.iter().map(|d| d.kind.name()).collect();
        // "ring" is already known (entry subnet); "ops" is news.  The asset
        // list alone does not classify data — reading the file does.
        assert_eq!(
            names,
            vec!["found-subnet", "found-credential", "found-network-services"]
        );
        assert!(matches!(
            &derived[0].kind,
            HighLevelEventKind::FoundSubnet { subnet } if *subnet == SubnetId::new("ops")
        ));
        assert!(matches!(
            &derived[2].kind,
            HighLevelEventKind::FoundNetworkServices { services, vulnerabilities, .. }
                if services.is_empty() && vulnerabilities.len() == 1
        ));
    }

    #[test]
    fn file_reads_classify_by_content_markers() {
        let mut f = Fixture::new();
        // chain assets carry a "password" marker: sensitive.
        let hot = low(
            Agent::Attacker,
            LowLevelEventKind::SyscallFileRead {
                host: HostId::new("h-01"),
                asset: crate::ids::AssetId::new("chain-data-01"),
            },
        );
        let derived = translate(&hot, &f.ctx(TelemetryMode::NetworkTrace));
        assert_eq!(derived.len(), 1);
        assert!(matches!(
            derived[0].kind,
            HighLevelEventKind::DataFound { size_units: 1, .. }
        ));

        // A boring file does not register.
        f.env.assets.get_mut(&crate::ids::AssetId::new("chain-data-02")).unwrap().markers =
            vec!["build-logs".into()];
        let cold = low(
            Agent::Attacker,
            LowLevelEventKind::SyscallFileRead {
                host: HostId::new("h-02"),
                asset: crate::ids::AssetId::new("chain-data-02"),
            },
        );
        assert!(translate(&cold, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());
    }

    #[test]
    fn transfers_count_as_exfiltration_only_at_the_entry_point() {
        let mut f = Fixture::new();
        // Chain attacker enters on h-01: that host is the egress.
        assert_eq!(f.attacker.entry, Location::Host(HostId::new("h-01")));
        let aid = crate::ids::AssetId::new("chain-data-02");
        let to_entry = low(
            Agent::Attacker,
            LowLevelEventKind::TransferComplete {
                asset: aid.clone(),
                from: Location::Host(HostId::new("h-02")),
                to: Location::Host(HostId::new("h-01")),
            },
        );

        // With the egress foothold gone the copy is stranded on disk.
        assert!(translate(&to_entry, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());

        f.attacker.record_observation(&crate::events::HighLevelEvent {
            seq: 0,
            tick: 0,
            audience: Agent::Attacker,
            kind: HighLevelEventKind::InfectedNewHost {
                host: HostId::new("h-01"),
                privilege: crate::ids::Privilege::User,
            },
            provenance: vec![],
        });
        let derived = translate(&to_entry, &f.ctx(TelemetryMode::NetworkTrace));
        assert_eq!(derived.len(), 1);
        assert!(matches!(
            &derived[0].kind,
            HighLevelEventKind::ExfiltratedData { asset } if *asset == aid
        ));

        // A mid-path hop is just staging.
        let relay = low(
            Agent::Attacker,
            LowLevelEventKind::TransferComplete {
                asset: aid.clone(),
                from: Location::Host(HostId::new("h-03")),
                to: Location::Host(HostId::new("h-02")),
            },
        );
        assert!(translate(&relay, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());

        // Already-exfiltrated assets do not count twice.
        f.attacker.record_observation(&crate::events::HighLevelEvent {
            seq: 0,
            tick: 0,
            audience: Agent::Attacker,
            kind: HighLevelEventKind::ExfiltratedData { asset: aid },
            provenance: vec![],
        });
        assert!(translate(&to_entry, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());
    }

    #[test]
    fn implant_events_report_new_footholds_and_escalations() {
        let mut f = Fixture::new();
        let h = HostId::new("h-02");
        let user = low(
            Agent::Attacker,
            LowLevelEventKind::ImplantInstalled {
                host: h.clone(),
                privilege: Privilege::User,
            },
        );
        let derived = translate(&user, &f.ctx(TelemetryMode::NetworkTrace));
        assert_eq!(derived.len(), 1);
        assert!(matches!(
            derived[0].kind,
            HighLevelEventKind::InfectedNewHost { .. }
        ));
        f.attacker.infected.insert(h.clone(), Privilege::User);

        // Same again: nothing.  Root on a held host: escalation only.
        assert!(translate(&user, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());
        let root = low(
            Agent::Attacker,
            LowLevelEventKind::ImplantInstalled {
                host: h.clone(),
                privilege: Privilege::Root,
            },
        );
        let derived = translate(&root, &f.ctx(TelemetryMode::NetworkTrace));
        assert_eq!(derived.len(), 1);
        assert!(matches!(
            derived[0].kind,
            HighLevelEventKind::GotRootAccess { .. }
        ));

        // A fresh root foothold reports both facts at once.
        let h3 = HostId::new("h-03");
        let fresh_root = low(
            Agent::Attacker,
            LowLevelEventKind::ImplantInstalled {
                host: h3,
                privilege: Privilege::Root,
            },
        );
        let derived = translate(&fresh_root, &f.ctx(TelemetryMode::NetworkTrace));
        let names: Vec<&str> = derived.iter().map(|d| d.kind.name()).collect();
        assert_eq!(names, vec!["infected-new-host", "got-root-access"]);
    }

    #[test]
    fn losing_a_host_is_observed_only_if_it_was_held() {
        let mut f = Fixture::new();
        let restored = low(
            Agent::Defender,
            LowLevelEventKind::HostRestored {
                host: HostId::new("h-02"),
            },
        );
        assert!(translate(&restored, &f.ctx(TelemetryMode::NetworkTrace)).is_empty());

        f.attacker
            .infected
            .insert(HostId::new("h-02"), Privilege::User);
        let derived = translate(&restored, &f.ctx(TelemetryMode::NetworkTrace));
        assert_eq!(derived.len(), 1);
        assert!(matches!(
            derived[0].kind,
            HighLevelEventKind::LostAccess { .. }
        ));
    }

    #[test]
    fn bus_tracks_subscriptions_and_seals_the_mode() {
        let mut bus = TelemetryBus::new(TelemetryMode::NetworkTrace);
        assert!(matches!(
            bus.subscribe(Agent::Defender, "no-such-kind"),
            Err(TelemetryError::UnknownKind(_))
        ));
        let sub = bus
            .subscribe(Agent::Defender, "decoy-host-interaction")
            .unwrap();
        assert!(bus.wants(Agent::Defender, "decoy-host-interaction"));
        assert!(!bus.wants(Agent::Attacker, "decoy-host-interaction"));
        assert!(bus.unsubscribe(sub));
        assert!(!bus.wants(Agent::Defender, "decoy-host-interaction"));
        assert!(!bus.unsubscribe(sub), "double unsubscribe is a no-op");

        bus.set_mode(TelemetryMode::FineGrained).unwrap();
        bus.seal();
        assert_eq!(
            bus.set_mode(TelemetryMode::NetworkTrace),
            Err(TelemetryError::Sealed)
        );
        assert_eq!(bus.mode(), TelemetryMode::FineGrained);
    }
}
