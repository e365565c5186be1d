//! Environment model: subnets, hosts, services, vulnerabilities, credentials,
//! data assets, reachability rules, and goal specifications.
//!
//! An [`Environment`] is an immutable description of the network under test.
//! It is produced either by one of the built-in builders (see
//! [`builders`]) or deserialized from an inline scenario section, then
//! validated once and handed to the kernel, which works on its own runtime
//! copy.  Decoy entities never appear in a base environment; they are created
//! at run time by defender deploy actions.

pub mod builders;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{AssetId, CredentialId, HostId, Privilege, Protocol, SubnetId, Tick, VulnId};

// ---------------------------------------------------------------------------
// Entities
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subnet {
    pub id: SubnetId,
    pub name: String,
    /// Public subnets are reachable from outside the network (given a
    /// matching reachability rule from [`NetEndpoint::External`]).
    pub public: bool,
}

/// A network service exposed by a host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Service {
    pub name: String,
    pub protocol: Protocol,
    pub port: u16,
    /// Honey services answer probes with fabricated banners.  They have no
    /// further behavior of their own.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub honeypot: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vulnerability {
    pub id: VulnId,
    /// Human-readable label, e.g. a CVE number.
    pub label: String,
    /// Name of the service the exploit goes through.  For local
    /// (non-remote) vulnerabilities this is informational only.
    pub target_service: String,
    /// Privilege gained by a successful exploit.
    pub grants: Privilege,
    /// Remote vulnerabilities are exploitable over the network; local ones
    /// require an existing foothold on the host.
    pub remote: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub id: CredentialId,
    pub principal: String,
    /// Host this credential logs into (over SSH).
    pub target_host: HostId,
    pub privilege: Privilege,
    /// Invalid credentials fail when used.  Only decoy credentials may be
    /// invalid.
    pub valid: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_decoy: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataAsset {
    pub id: AssetId,
    /// Host the asset lives on.
    pub host: HostId,
    /// Abstract size; copy time scales linearly with it.
    pub size_units: u32,
    pub critical: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_decoy: bool,
    /// Content markers matched against the sensitive-keyword list when the
    /// attacker greps through local files.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<String>,
}

/// Extra references attached to a deployed decoy host.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyPayload {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fake_assets: Vec<AssetId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub honey_services: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Host {
    pub id: HostId,
    pub subnet: SubnetId,
    #[serde(default)]
    pub services: Vec<Service>,
    /// References into the environment's vulnerability catalog.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vulnerabilities: Vec<VulnId>,
    /// Credential files stored on this host's disk.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stored_credentials: Vec<CredentialId>,
    /// Data assets living on this host.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub data_assets: Vec<AssetId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub users: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_decoy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoy_payload: Option<DecoyPayload>,
}

// ---------------------------------------------------------------------------
// Reachability
// ---------------------------------------------------------------------------

/// Endpoint of a reachability rule: a subnet or the outside world.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NetEndpoint {
    #[serde(rename = "external")]
    External,
    #[serde(untagged)]
    Subnet(SubnetId),
}

impl fmt::Display for NetEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetEndpoint::External => f.write_str("external"),
            NetEndpoint::Subnet(s) => write!(f, "{s}"),
        }
    }
}

/// Directed rule: traffic from `from` to `to` is permitted over `protocols`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachabilityRule {
    pub from: NetEndpoint,
    pub to: NetEndpoint,
    pub protocols: BTreeSet<Protocol>,
}

// ---------------------------------------------------------------------------
// Goals and entry
// ---------------------------------------------------------------------------

/// What the attacker is trying to accomplish, used for scoring a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GoalKind {
    /// Exfiltrate every listed asset out of the network.
    ExfiltrateAssets { assets: Vec<AssetId> },
    /// Gain a foothold (any privilege) on every listed host.
    InfectHosts { hosts: Vec<HostId> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    #[serde(flatten)]
    pub kind: GoalKind,
    /// Ticks the attacker has before the run is capped.
    pub time_limit: Tick,
}

impl GoalSpec {
    pub fn target_count(&self) -> usize {
        match &self.kind {
            GoalKind::ExfiltrateAssets { assets } => assets.len(),
            GoalKind::InfectHosts { hosts } => hosts.len(),
        }
    }
}

/// How the attacker first touches the environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackerEntry {
    /// The attacker starts outside and can only reach public subnets.
    ExternalScan,
    /// The attacker starts with user-level access on one host.
    FootholdOnHost { host: HostId },
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub name: String,
    pub subnets: BTreeMap<SubnetId, Subnet>,
    pub hosts: BTreeMap<HostId, Host>,
    pub vulnerabilities: BTreeMap<VulnId, Vulnerability>,
    pub credentials: BTreeMap<CredentialId, Credential>,
    pub assets: BTreeMap<AssetId, DataAsset>,
    pub reachability: Vec<ReachabilityRule>,
    pub goals: GoalSpec,
    pub attacker_entry: AttackerEntry,
}

impl Environment {
    pub fn host(&self, id: &HostId) -> Option<&Host> {
        self.hosts.get(id)
    }

    pub fn credential(&self, id: &CredentialId) -> Option<&Credential> {
        self.credentials.get(id)
    }

    pub fn asset(&self, id: &AssetId) -> Option<&DataAsset> {
        self.assets.get(id)
    }

    pub fn vulnerability(&self, id: &VulnId) -> Option<&Vulnerability> {
        self.vulnerabilities.get(id)
    }

    pub fn subnet(&self, id: &SubnetId) -> Option<&Subnet> {
        self.subnets.get(id)
    }

    /// Protocols permitted for traffic from `from` to `to`, merging every
    /// matching rule.
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

    /// Subnets reachable from `from` over at least one protocol, in id order.
    pub fn routed_subnets(&self, from: &NetEndpoint) -> Vec<SubnetId> {
        let mut out = BTreeSet::new();
        for rule in &self.reachability {
            if &rule.from == from {
                if let NetEndpoint::Subnet(s) = &rule.to {
                    out.insert(s.clone());
                }
            }
        }
        out.into_iter().collect()
    }

    /// Serializes the full environment as a pretty JSON document with
    /// entities keyed by id, suitable for audits and golden files.
    pub fn dump_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("environment serializes");
        s.push('\n');
        s
    }

    /// Checks every structural invariant and returns all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut seen_ids: BTreeSet<String> = BTreeSet::new();
        // Ids share one namespace so log lines stay unambiguous.
        let mut dup = |id: &str, v: &mut Vec<Violation>| {
            if !seen_ids.insert(id.to_owned()) {
                v.push(Violation::new(id, "duplicate entity id"));
            }
        };

        for (key, subnet) in &self.subnets {
            if key != &subnet.id {
                v.push(Violation::new(key.as_str(), "subnet keyed under wrong id"));
            }
            dup(subnet.id.as_str(), &mut v);
        }
        for (key, host) in &self.hosts {
            if key != &host.id {
                v.push(Violation::new(key.as_str(), "host keyed under wrong id"));
            }
            dup(host.id.as_str(), &mut v);
            if !self.subnets.contains_key(&host.subnet) {
                v.push(Violation::new(
                    host.id.as_str(),
                    format!("references unknown subnet {}", host.subnet),
                ));
            }
            for svc in &host.services {
                if svc.port == 0 {
                    v.push(Violation::new(
                        host.id.as_str(),
                        format!("service {} has port 0", svc.name),
                    ));
                }
            }
            for vuln_id in &host.vulnerabilities {
                match self.vulnerabilities.get(vuln_id) {
                    None => v.push(Violation::new(
                        host.id.as_str(),
                        format!("references unknown vulnerability {vuln_id}"),
                    )),
                    Some(vuln) if vuln.remote => {
                        if !host.services.iter().any(|s| s.name == vuln.target_service) {
                            v.push(Violation::new(
                                host.id.as_str(),
                                format!(
                                    "remote vulnerability {vuln_id} targets service {} which the host does not expose",
                                    vuln.target_service
                                ),
                            ));
                        }
                    }
                    Some(_) => {}
                }
            }
            for cred_id in &host.stored_credentials {
                if !self.credentials.contains_key(cred_id) {
                    v.push(Violation::new(
                        host.id.as_str(),
                        format!("stores unknown credential {cred_id}"),
                    ));
                }
            }
            for asset_id in &host.data_assets {
                match self.assets.get(asset_id) {
                    None => v.push(Violation::new(
                        host.id.as_str(),
                        format!("lists unknown asset {asset_id}"),
                    )),
                    Some(asset) if asset.host != host.id => v.push(Violation::new(
                        asset_id.as_str(),
                        format!("asset is listed on {} but records host {}", host.id, asset.host),
                    )),
                    Some(_) => {}
                }
            }
            if host.is_decoy {
                v.push(Violation::new(
                    host.id.as_str(),
                    "base environments must not contain decoy hosts",
                ));
            }
            if host.decoy_payload.is_some() && !host.is_decoy {
                v.push(Violation::new(
                    host.id.as_str(),
                    "decoy payload attached to a non-decoy host",
                ));
            }
        }
        for (key, vuln) in &self.vulnerabilities {
            if key != &vuln.id {
                v.push(Violation::new(key.as_str(), "vulnerability keyed under wrong id"));
            }
            dup(vuln.id.as_str(), &mut v);
        }
        for (key, cred) in &self.credentials {
            if key != &cred.id {
                v.push(Violation::new(key.as_str(), "credential keyed under wrong id"));
            }
            dup(cred.id.as_str(), &mut v);
            if !self.hosts.contains_key(&cred.target_host) {
                v.push(Violation::new(
                    cred.id.as_str(),
                    format!("targets unknown host {}", cred.target_host),
                ));
            }
            if !cred.valid && !cred.is_decoy {
                v.push(Violation::new(
                    cred.id.as_str(),
                    "only decoy credentials may be invalid",
                ));
            }
            if cred.is_decoy {
                v.push(Violation::new(
                    cred.id.as_str(),
                    "base environments must not contain decoy credentials",
                ));
            }
        }
        for (key, asset) in &self.assets {
            if key != &asset.id {
                v.push(Violation::new(key.as_str(), "asset keyed under wrong id"));
            }
            dup(asset.id.as_str(), &mut v);
            match self.hosts.get(&asset.host) {
                None => v.push(Violation::new(
                    asset.id.as_str(),
                    format!("lives on unknown host {}", asset.host),
                )),
                Some(host) if !host.data_assets.contains(&asset.id) => v.push(Violation::new(
                    asset.id.as_str(),
                    format!("not listed in data_assets of host {}", asset.host),
                )),
                Some(_) => {}
            }
            if asset.critical && asset.is_decoy {
                v.push(Violation::new(
                    asset.id.as_str(),
                    "an asset cannot be both critical and a decoy",
                ));
            }
            if asset.is_decoy {
                v.push(Violation::new(
                    asset.id.as_str(),
                    "base environments must not contain decoy assets",
                ));
            }
        }

        // Reachability rules must name known subnets and include a self-loop
        // for every subnet so intra-subnet traffic is representable.
        for rule in &self.reachability {
            for end in [&rule.from, &rule.to] {
                if let NetEndpoint::Subnet(s) = end {
                    if !self.subnets.contains_key(s) {
                        v.push(Violation::new(
                            s.as_str(),
                            "reachability rule references unknown subnet",
                        ));
                    }
                }
            }
            if rule.protocols.is_empty() {
                v.push(Violation::new(
                    format!("{}->{}", rule.from, rule.to),
                    "reachability rule with empty protocol set",
                ));
            }
        }
        for subnet in self.subnets.keys() {
            let loopback = NetEndpoint::Subnet(subnet.clone());
            if !self
                .reachability
                .iter()
                .any(|r| r.from == loopback && r.to == loopback && !r.protocols.is_empty())
            {
                v.push(Violation::new(
                    subnet.as_str(),
                    "subnet lacks an intra-subnet reachability self-loop",
                ));
            }
        }

        // Goals must refer to existing entities and leave the attacker time.
        if self.goals.time_limit == 0 {
            v.push(Violation::new("goals", "time limit must be positive"));
        }
        match &self.goals.kind {
            GoalKind::ExfiltrateAssets { assets } => {
                if assets.is_empty() {
                    v.push(Violation::new("goals", "goal asset list is empty"));
                }
                for a in assets {
                    if !self.assets.contains_key(a) {
                        v.push(Violation::new(
                            a.as_str(),
                            "goal references unknown asset",
                        ));
                    }
                }
            }
            GoalKind::InfectHosts { hosts } => {
                if hosts.is_empty() {
                    v.push(Violation::new("goals", "goal host list is empty"));
                }
                for h in hosts {
                    if !self.hosts.contains_key(h) {
                        v.push(Violation::new(h.as_str(), "goal references unknown host"));
                    }
                }
            }
        }

        match &self.attacker_entry {
            AttackerEntry::ExternalScan => {
                if !self.subnets.values().any(|s| s.public) {
                    v.push(Violation::new(
                        "attacker_entry",
                        "external entry requires at least one public subnet",
                    ));
                }
            }
            AttackerEntry::FootholdOnHost { host } => {
                if !self.hosts.contains_key(host) {
                    v.push(Violation::new(
                        host.as_str(),
                        "attacker entry foothold on unknown host",
                    ));
                }
            }
        }

        v
    }
}

/// A single validation failure, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl Violation {
    fn new(entity: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}
