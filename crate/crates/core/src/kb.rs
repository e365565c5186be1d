//! Per-agent knowledge bases.
//!
//! Each agent owns a [`KnowledgeBase`]: its partial, observation-derived
//! view of the environment.  The defender starts with complete knowledge of
//! the base environment (it built the network) plus a private registry of
//! the decoys it deploys.  The attacker starts with only its entry knowledge
//! and grows the KB exclusively through [`record_observation`] — there is no
//! other write path, which is what keeps strategies honest: anything a
//! strategy queries can be traced back to an observation or the initial
//! grant.
//!
//! [`record_observation`]: KnowledgeBase::record_observation

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::env::{AttackerEntry, Environment, Host, NetEndpoint, ReachabilityRule};
use crate::events::{HighLevelEvent, HighLevelEventKind, ServiceBanner, VulnBanner};
use crate::ids::{
    Agent, AssetId, CredentialId, HostId, Location, Privilege, Protocol, SubnetId, VulnId,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnownSubnet {
    pub id: SubnetId,
    /// `None` when the agent has seen the subnet referenced but does not
    /// know whether it is externally reachable.
    pub public: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnownHost {
    pub id: HostId,
    pub subnet: SubnetId,
    pub services: Vec<ServiceBanner>,
    pub vulnerabilities: BTreeMap<VulnId, VulnBanner>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnownCredential {
    pub id: CredentialId,
    pub target_host: HostId,
    pub target_subnet: SubnetId,
    pub privilege: Privilege,
    /// Host whose disk the credential was found on; the lateral-move step
    /// it enables originates there.
    pub found_on: HostId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnownAsset {
    pub id: AssetId,
    pub host: HostId,
    pub size_units: u32,
}

/// Defender-private ground truth about deployed deception.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DecoyRegistry {
    pub hosts: BTreeMap<HostId, SubnetId>,
    pub credentials: BTreeSet<CredentialId>,
    pub assets: BTreeSet<AssetId>,
    pub users: BTreeSet<(HostId, String)>,
    pub honey_services: BTreeSet<(HostId, String)>,
}

impl DecoyRegistry {
    pub fn is_empty(&self) -> bool {
        self.hosts.is_empty()
            && self.credentials.is_empty()
            && self.assets.is_empty()
            && self.users.is_empty()
            && self.honey_services.is_empty()
    }
}

/// What changed in a KB after ingesting one observation.  Deltas feed the
/// attack graph's incremental update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KbDelta {
    NewSubnet(SubnetId),
    NewHost(HostId),
    /// Services or vulnerabilities were added to an already-known host.
    HostDetail(HostId),
    NewCredential(CredentialId),
    NewAsset(AssetId),
    Infected(HostId, Privilege),
    Lost(HostId),
    Exfiltrated(AssetId),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KbError {
    #[error("{op} is defender-only; the {caller} knowledge base is not authorized")]
    NotAuthorized { op: &'static str, caller: Agent },
    #[error("no candidates: {0}")]
    EmptyCandidates(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubnetFilter {
    All,
    PublicOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct KnowledgeBase {
    pub owner: Agent,
    /// Where the owner's traffic enters and exits the network.  For the
    /// attacker this is its entry point (external, or the foothold host).
    pub entry: Location,
    pub subnets: BTreeMap<SubnetId, KnownSubnet>,
    pub hosts: BTreeMap<HostId, KnownHost>,
    pub credentials: BTreeMap<CredentialId, KnownCredential>,
    pub assets: BTreeMap<AssetId, KnownAsset>,
    /// Hosts currently holding the owner's implant (attacker only).
    pub infected: BTreeMap<HostId, Privilege>,
    pub exfiltrated: BTreeSet<AssetId>,
    /// Routing rules.  Treated as common knowledge: both sides understand
    /// the network's segmentation (the defender configured it; attackers
    /// read it off routing tables and connection behavior).
    pub reachability: Vec<ReachabilityRule>,
    registry: DecoyRegistry,
}

impl KnowledgeBase {
    /// Complete view of the base environment, before any decoys exist.
    pub fn for_defender(env: &Environment) -> Self {
        let mut kb = KnowledgeBase {
            owner: Agent::Defender,
            entry: Location::External,
            subnets: BTreeMap::new(),
            hosts: BTreeMap::new(),
            credentials: BTreeMap::new(),
            assets: BTreeMap::new(),
            infected: BTreeMap::new(),
            exfiltrated: BTreeSet::new(),
            reachability: env.reachability.clone(),
            registry: DecoyRegistry::default(),
        };
        for (id, s) in &env.subnets {
            kb.subnets.insert(
                id.clone(),
                KnownSubnet {
                    id: id.clone(),
                    public: Some(s.public),
                },
            );
        }
        for (id, h) in &env.hosts {
            kb.hosts.insert(id.clone(), known_host_from_env(env, h));
        }
        for (id, c) in &env.credentials {
            let target_subnet = env
                .host(&c.target_host)
                .map(|h| h.subnet.clone())
                .unwrap_or_else(|| SubnetId::new("unknown"));
            // The defender knows where every base credential is stored.
            let found_on = env
                .hosts
                .values()
                .find(|h| h.stored_credentials.contains(id))
                .map(|h| h.id.clone())
                .unwrap_or_else(|| c.target_host.clone());
            kb.credentials.insert(
                id.clone(),
                KnownCredential {
                    id: id.clone(),
                    target_host: c.target_host.clone(),
                    target_subnet,
                    privilege: c.privilege,
                    found_on,
                },
            );
        }
        for (id, a) in &env.assets {
            kb.assets.insert(
                id.clone(),
                KnownAsset {
                    id: id.clone(),
                    host: a.host.clone(),
                    size_units: a.size_units,
                },
            );
        }
        kb
    }

    /// Entry knowledge only: public subnets for an external attacker, or
    /// the foothold host and its subnet.
    pub fn for_attacker(env: &Environment) -> Self {
        let mut kb = KnowledgeBase {
            owner: Agent::Attacker,
            entry: Location::External,
            subnets: BTreeMap::new(),
            hosts: BTreeMap::new(),
            credentials: BTreeMap::new(),
            assets: BTreeMap::new(),
            infected: BTreeMap::new(),
            exfiltrated: BTreeSet::new(),
            reachability: env.reachability.clone(),
            registry: DecoyRegistry::default(),
        };
        match &env.attacker_entry {
            AttackerEntry::ExternalScan => {
                for (id, s) in &env.subnets {
                    if s.public {
                        kb.subnets.insert(
                            id.clone(),
                            KnownSubnet {
                                id: id.clone(),
                                public: Some(true),
                            },
                        );
                    }
                }
            }
            AttackerEntry::FootholdOnHost { host } => {
                let h = env.host(host).expect("validated entry host");
                kb.entry = Location::Host(host.clone());
                kb.subnets.insert(
                    h.subnet.clone(),
                    KnownSubnet {
                        id: h.subnet.clone(),
                        public: None,
                    },
                );
                kb.hosts.insert(host.clone(), known_host_from_env(env, h));
            }
        }
        kb
    }

    // -- queries ----------------------------------------------------------

    pub fn get_subnets(&self, filter: SubnetFilter) -> Vec<&KnownSubnet> {
        self.subnets
            .values()
            .filter(|s| match filter {
                SubnetFilter::All => true,
                SubnetFilter::PublicOnly => s.public == Some(true),
            })
            .collect()
    }

    pub fn get_hosts<F>(&self, pred: F) -> Vec<&KnownHost>
    where
        F: Fn(&KnownHost) -> bool,
    {
        self.hosts.values().filter(|h| pred(h)).collect()
    }

    pub fn get_random_host(
        &self,
        subnets: &[SubnetId],
        rng: &mut ChaCha8Rng,
    ) -> Result<&KnownHost, KbError> {
        let candidates: Vec<&KnownHost> = self
            .hosts
            .values()
            .filter(|h| subnets.is_empty() || subnets.contains(&h.subnet))
            .collect();
        if candidates.is_empty() {
            return Err(KbError::EmptyCandidates("no known hosts in those subnets"));
        }
        Ok(candidates[rng.gen_range(0..candidates.len())])
    }

    pub fn get_random_decoy_host(&self, rng: &mut ChaCha8Rng) -> Result<HostId, KbError> {
        if self.owner != Agent::Defender {
            return Err(KbError::NotAuthorized {
                op: "get_random_decoy_host",
                caller: self.owner,
            });
        }
        let candidates: Vec<&HostId> = self.registry.hosts.keys().collect();
        if candidates.is_empty() {
            return Err(KbError::EmptyCandidates("no decoy hosts deployed"));
        }
        Ok(candidates[rng.gen_range(0..candidates.len())].clone())
    }

    /// Ground-truth decoy check; the registry is defender-private, so an
    /// attacker KB asking is a contract violation, not a `false`.
    pub fn is_decoy_credential(&self, cred: &CredentialId) -> Result<bool, KbError> {
        if self.owner != Agent::Defender {
            return Err(KbError::NotAuthorized {
                op: "is_decoy_credential",
                caller: self.owner,
            });
        }
        Ok(self.registry.credentials.contains(cred))
    }

    pub fn is_decoy_host(&self, host: &HostId) -> Result<bool, KbError> {
        if self.owner != Agent::Defender {
            return Err(KbError::NotAuthorized {
                op: "is_decoy_host",
                caller: self.owner,
            });
        }
        Ok(self.registry.hosts.contains_key(host))
    }

    pub fn registry(&self) -> Result<&DecoyRegistry, KbError> {
        if self.owner != Agent::Defender {
            return Err(KbError::NotAuthorized {
                op: "registry",
                caller: self.owner,
            });
        }
        Ok(&self.registry)
    }

    /// Unchecked registry access for the runner and planner, which act on
    /// the defender's behalf when applying deploys.
    pub(crate) fn registry_mut_unchecked(&mut self) -> &mut DecoyRegistry {
        &mut self.registry
    }

    pub(crate) fn registry_unchecked(&self) -> &DecoyRegistry {
        &self.registry
    }

    /// Protocols permitted from `from` to `to` under the known rules.
    pub fn permitted_protocols(&self, from: &NetEndpoint, to: &NetEndpoint) -> BTreeSet<Protocol> {
        let mut out = BTreeSet::new();
        for rule in &self.reachability {
            if &rule.from == from && &rule.to == to {
                out.extend(rule.protocols.iter().cloned());
            }
        }
        out
    }

    pub fn allows(&self, from: &NetEndpoint, to: &NetEndpoint, protocol: &Protocol) -> bool {
        self.reachability
            .iter()
            .any(|r| &r.from == from && &r.to == to && r.protocols.contains(protocol))
    }

    /// Network endpoint of a location, resolved against known hosts.
    pub fn endpoint_of(&self, loc: &Location) -> Option<NetEndpoint> {
        match loc {
            Location::External => Some(NetEndpoint::External),
            Location::Host(h) => self
                .hosts
                .get(h)
                .map(|k| NetEndpoint::Subnet(k.subnet.clone())),
        }
    }

    pub fn snapshot_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("kb serializes");
        s.push('\n');
        s
    }

    // -- ingestion --------------------------------------------------------

    /// Folds one observation into the KB.  Idempotent: re-delivering an
    /// event yields an empty delta list.
    pub fn record_observation(&mut self, event: &HighLevelEvent) -> Vec<KbDelta> {
        let mut deltas = Vec::new();
        match &event.kind {
            HighLevelEventKind::FoundSubnet { subnet } => {
                self.note_subnet(subnet, &mut deltas);
            }
            HighLevelEventKind::FoundHost { host, subnet } => {
                self.note_subnet(subnet, &mut deltas);
                self.note_host(host, subnet, &mut deltas);
            }
            HighLevelEventKind::FoundNetworkServices {
                host,
                services,
                vulnerabilities,
            } => {
                if let Some(known) = self.hosts.get_mut(host) {
                    let mut changed = false;
                    for s in services {
                        if !known.services.contains(s) {
                            known.services.push(s.clone());
                            changed = true;
                        }
                    }
                    for v in vulnerabilities {
                        if !known.vulnerabilities.contains_key(&v.id) {
                            known.vulnerabilities.insert(v.id.clone(), v.clone());
                            changed = true;
                        }
                    }
                    if changed {
                        deltas.push(KbDelta::HostDetail(host.clone()));
                    }
                }
            }
            HighLevelEventKind::FoundCredential {
                credential,
                target_host,
                target_subnet,
                privilege,
                found_on,
            } => {
                self.note_subnet(target_subnet, &mut deltas);
                self.note_host(target_host, target_subnet, &mut deltas);
                if !self.credentials.contains_key(credential) {
                    self.credentials.insert(
                        credential.clone(),
                        KnownCredential {
                            id: credential.clone(),
                            target_host: target_host.clone(),
                            target_subnet: target_subnet.clone(),
                            privilege: *privilege,
                            found_on: found_on.clone(),
                        },
                    );
                    deltas.push(KbDelta::NewCredential(credential.clone()));
                }
            }
            HighLevelEventKind::DataFound {
                asset,
                host,
                size_units,
            } => {
                if !self.assets.contains_key(asset) {
                    self.assets.insert(
                        asset.clone(),
                        KnownAsset {
                            id: asset.clone(),
                            host: host.clone(),
                            size_units: *size_units,
                        },
                    );
                    deltas.push(KbDelta::NewAsset(asset.clone()));
                }
            }
            HighLevelEventKind::ExfiltratedData { asset } => {
                if self.exfiltrated.insert(asset.clone()) {
                    deltas.push(KbDelta::Exfiltrated(asset.clone()));
                }
            }
            HighLevelEventKind::InfectedNewHost { host, privilege } => {
                let prev = self.infected.get(host).copied();
                if prev.map_or(true, |p| *privilege > p) {
                    self.infected.insert(host.clone(), *privilege);
                    deltas.push(KbDelta::Infected(host.clone(), *privilege));
                }
            }
            HighLevelEventKind::GotRootAccess { host } => {
                let prev = self.infected.get(host).copied();
                if prev.map_or(true, |p| Privilege::Root > p) {
                    self.infected.insert(host.clone(), Privilege::Root);
                    deltas.push(KbDelta::Infected(host.clone(), Privilege::Root));
                }
            }
            HighLevelEventKind::LostAccess { host } => {
                if self.infected.remove(host).is_some() {
                    deltas.push(KbDelta::Lost(host.clone()));
                }
            }
            // Defender observations carry no new environment facts: the
            // defender already knows the network, and the decoy registry is
            // maintained by its own deploys.
            HighLevelEventKind::DecoyHostInteraction { .. }
            | HighLevelEventKind::HostUsedDecoyCredential { .. }
            | HighLevelEventKind::SshConnection { .. } => {}
        }
        deltas
    }

    fn note_subnet(&mut self, subnet: &SubnetId, deltas: &mut Vec<KbDelta>) {
        if !self.subnets.contains_key(subnet) {
            self.subnets.insert(
                subnet.clone(),
                KnownSubnet {
                    id: subnet.clone(),
                    public: None,
                },
            );
            deltas.push(KbDelta::NewSubnet(subnet.clone()));
        }
    }

    fn note_host(&mut self, host: &HostId, subnet: &SubnetId, deltas: &mut Vec<KbDelta>) {
        if !self.hosts.contains_key(host) {
            self.hosts.insert(
                host.clone(),
                KnownHost {
                    id: host.clone(),
                    subnet: subnet.clone(),
                    services: Vec::new(),
                    vulnerabilities: BTreeMap::new(),
                },
            );
            deltas.push(KbDelta::NewHost(host.clone()));
        }
    }
}

/// Full-detail view of an environment host, as scan tooling would report it.
pub(crate) fn known_host_from_env(env: &Environment, h: &Host) -> KnownHost {
    let services = h
        .services
        .iter()
        .map(|s| ServiceBanner {
            name: s.name.clone(),
            protocol: s.protocol.clone(),
            port: s.port,
        })
        .collect();
    let vulnerabilities = h
        .vulnerabilities
        .iter()
        .filter_map(|vid| {
            let v = env.vulnerability(vid)?;
            let protocol = h
                .services
                .iter()
                .find(|s| s.name == v.target_service)
                .map(|s| s.protocol.clone())
                .unwrap_or(Protocol::Ssh);
            Some((
                vid.clone(),
                VulnBanner {
                    id: vid.clone(),
                    protocol,
                    grants: v.grants,
                    remote: v.remote,
                },
            ))
        })
        .collect();
    KnownHost {
        id: h.id.clone(),
        subnet: h.subnet.clone(),
        services,
        vulnerabilities,
    }
}
