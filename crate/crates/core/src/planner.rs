//! Compiles strategy intents into kernel actions.
//!
//! Strategies think in terms of goals ("move along this path", "exfiltrate
//! what's on that host", "stand up a decoy"); the kernel only accepts
//! concrete single-step actions.  The planner bridges the two, working
//! exclusively from the requesting agent's knowledge base — it never peeks
//! at ground truth, so a plan can still fail in the kernel when the world
//! has moved on.
//!
//! Defender deploys draw from a capability budget.  Budget is charged when
//! the plan is produced: deploy actions cannot fail downstream, so plans
//! made equals decoys fielded.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Credential, DataAsset, Host, Service, Vulnerability};
use crate::graph::{AttackPath, GraphNode, StepMeans};
use crate::ids::{
    Agent, AssetId, CredentialId, HostId, Location, Privilege, Protocol, SubnetId, VulnId,
};
use crate::kb::KnowledgeBase;
use crate::kernel::{ActionKind, DeployPayload, LowLevelAction};

/// What a strategy can ask for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HighLevelAction {
    // Attacker intents.
    ScanNetwork { subnet: SubnetId },
    /// Walk a path of attack steps, one exploit or credential use per step.
    LateralMove { path: AttackPath },
    /// Use a locally known flaw to gain root on a held host.
    EscalatePrivilege { host: HostId },
    /// Read files and configuration on a held host.
    DiscoverLocalInfo { host: HostId },
    /// Move every known, not-yet-stolen asset on `host` to the egress point.
    ExfiltrateData { host: HostId },

    // Defender intents.
    DeployDecoyHost { subnet: Option<SubnetId> },
    DeployDecoyCredential {
        on: HostId,
        target: HostId,
        valid: bool,
    },
    DeployDecoyData { on: HostId },
    DeployDecoyUser { on: HostId },
    DeployHoneyService { on: HostId },
    RestoreHost { host: HostId },
    ShutdownHost { host: HostId },
}

/// Deploy allowance per decoy class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CapabilityBudget {
    pub decoy_hosts: u32,
    pub decoy_credentials: u32,
    pub decoy_data: u32,
    pub decoy_users: u32,
    pub honey_services: u32,
}

impl Default for CapabilityBudget {
    fn default() -> Self {
        CapabilityBudget {
            decoy_hosts: 10,
            decoy_credentials: 30,
            decoy_data: 30,
            decoy_users: 10,
            honey_services: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetUsed {
    pub decoy_hosts: u32,
    pub decoy_credentials: u32,
    pub decoy_data: u32,
    pub decoy_users: u32,
    pub honey_services: u32,
}

impl BudgetUsed {
    pub fn total(&self) -> u32 {
        self.decoy_hosts
            + self.decoy_credentials
            + self.decoy_data
            + self.decoy_users
            + self.honey_services
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("deploy budget exhausted for {kind}: {used} of {budget} used")]
    BudgetExceeded {
        kind: &'static str,
        used: u32,
        budget: u32,
    },
    #[error("plan references an entity the knowledge base does not know: {0}")]
    UnknownEntity(String),
    #[error("nothing to plan: {0}")]
    EmptyPlan(&'static str),
}

/// Per-agent action compiler.
pub struct Planner {
    agent: Agent,
    budget: CapabilityBudget,
    used: BudgetUsed,
    next_host: u32,
    next_cred: u32,
    next_asset: u32,
    next_user: u32,
    next_service: u32,
}

impl Planner {
    pub fn new(agent: Agent, budget: CapabilityBudget) -> Self {
        Planner {
            agent,
            budget,
            used: BudgetUsed::default(),
            next_host: 1,
            next_cred: 1,
            next_asset: 1,
            next_user: 1,
            next_service: 1,
        }
    }

    pub fn budget(&self) -> &CapabilityBudget {
        &self.budget
    }

    pub fn used(&self) -> BudgetUsed {
        self.used
    }

    pub fn plan(
        &mut self,
        intent: &HighLevelAction,
        kb: &KnowledgeBase,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        match intent {
            HighLevelAction::ScanNetwork { subnet } => self.plan_scan(subnet, kb),
            HighLevelAction::LateralMove { path } => self.plan_lateral(path),
            HighLevelAction::EscalatePrivilege { host } => self.plan_escalate(host, kb),
            HighLevelAction::DiscoverLocalInfo { host } => self.plan_discover(host, kb),
            HighLevelAction::ExfiltrateData { host } => self.plan_exfil(host, kb),
            HighLevelAction::DeployDecoyHost { subnet } => self.plan_decoy_host(subnet, kb, rng),
            HighLevelAction::DeployDecoyCredential { on, target, valid } => {
                self.plan_decoy_credential(on, target, *valid, kb)
            }
            HighLevelAction::DeployDecoyData { on } => self.plan_decoy_data(on, kb),
            HighLevelAction::DeployDecoyUser { on } => self.plan_decoy_user(on, kb),
            HighLevelAction::DeployHoneyService { on } => self.plan_honey_service(on, kb),
            HighLevelAction::RestoreHost { host } => {
                self.known_host(host, kb)?;
                Ok(vec![self.action(
                    Location::External,
                    ActionKind::RestoreHost { host: host.clone() },
                )])
            }
            HighLevelAction::ShutdownHost { host } => {
                self.known_host(host, kb)?;
                Ok(vec![self.action(
                    Location::External,
                    ActionKind::ShutdownHost { host: host.clone() },
                )])
            }
        }
    }

    fn action(&self, source: Location, kind: ActionKind) -> LowLevelAction {
        LowLevelAction {
            actor: self.agent,
            source,
            kind,
        }
    }

    fn known_host(&self, host: &HostId, kb: &KnowledgeBase) -> Result<(), PlanError> {
        if kb.hosts.contains_key(host) {
            Ok(())
        } else {
            Err(PlanError::UnknownEntity(format!("host {host}")))
        }
    }

    // -- attacker intents ---------------------------------------------------

    fn plan_scan(
        &self,
        subnet: &SubnetId,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        if !kb.subnets.contains_key(subnet) {
            return Err(PlanError::UnknownEntity(format!("subnet {subnet}")));
        }
        let to = crate::env::NetEndpoint::Subnet(subnet.clone());
        // Prefer a held host with a route; the first one in id order keeps
        // plans reproducible.
        let vantage = kb
            .infected
            .keys()
            .filter_map(|h| {
                let from = kb.endpoint_of(&Location::Host(h.clone()))?;
                (!kb.permitted_protocols(&from, &to).is_empty())
                    .then(|| Location::Host(h.clone()))
            })
            .next();
        let source = vantage.or_else(|| {
            (kb.entry == Location::External
                && !kb
                    .permitted_protocols(&crate::env::NetEndpoint::External, &to)
                    .is_empty())
            .then_some(Location::External)
        });
        match source {
            Some(source) => Ok(vec![self.action(
                source,
                ActionKind::ScanSubnet {
                    subnet: subnet.clone(),
                },
            )]),
            None => Err(PlanError::EmptyPlan("no vantage point reaches that subnet")),
        }
    }

    fn plan_lateral(&self, path: &AttackPath) -> Result<Vec<LowLevelAction>, PlanError> {
        if path.steps.is_empty() {
            return Err(PlanError::EmptyPlan("lateral move along an empty path"));
        }
        let mut out = Vec::new();
        for step in &path.steps {
            let source = match &step.from {
                GraphNode::External => Location::External,
                GraphNode::State { host, .. } => Location::Host(host.clone()),
            };
            let kind = match &step.means {
                StepMeans::Exploit(vuln) => ActionKind::Exploit {
                    target: step.to_host.clone(),
                    vuln: vuln.clone(),
                },
                StepMeans::Credential(cred) => ActionKind::UseCredential {
                    target: step.to_host.clone(),
                    credential: cred.clone(),
                },
            };
            out.push(self.action(source, kind));
        }
        Ok(out)
    }

    fn plan_escalate(
        &self,
        host: &HostId,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        let known = kb
            .hosts
            .get(host)
            .ok_or_else(|| PlanError::UnknownEntity(format!("host {host}")))?;
        if kb.infected.get(host) == Some(&Privilege::Root) {
            return Ok(Vec::new());
        }
        // Nothing known to exploit is a valid (empty) answer, not a failure:
        // escalation is opportunistic.
        Ok(known
            .vulnerabilities
            .values()
            .filter(|v| !v.remote && v.grants == Privilege::Root)
            .map(|v| {
                self.action(
                    Location::Host(host.clone()),
                    ActionKind::Exploit {
                        target: host.clone(),
                        vuln: v.id.clone(),
                    },
                )
            })
            .collect())
    }

    fn plan_discover(
        &self,
        host: &HostId,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        self.known_host(host, kb)?;
        Ok(vec![self.action(
            Location::Host(host.clone()),
            ActionKind::ReadLocalFiles { host: host.clone() },
        )])
    }

    fn plan_exfil(
        &self,
        host: &HostId,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        self.known_host(host, kb)?;
        let pending: Vec<&crate::kb::KnownAsset> = kb
            .assets
            .values()
            .filter(|a| a.host == *host && !kb.exfiltrated.contains(&a.id))
            .collect();
        if pending.is_empty() {
            return Ok(Vec::new());
        }
        let Some(hops) = crate::graph::shortest_exfil_path(kb, host) else {
            return Err(PlanError::EmptyPlan("no exfiltration route from that host"));
        };
        let mut out = Vec::new();
        for asset in pending {
            if hops.is_empty() {
                // The data already sits on the egress host; one local
                // packaging step completes the theft.
                out.push(self.action(
                    Location::Host(host.clone()),
                    ActionKind::CopyAsset {
                        asset: asset.id.clone(),
                        to: Location::Host(host.clone()),
                        protocol: Protocol::Ssh,
                    },
                ));
                continue;
            }
            for hop in &hops {
                out.push(self.action(
                    Location::Host(hop.from.clone()),
                    ActionKind::CopyAsset {
                        asset: asset.id.clone(),
                        to: hop.to.clone(),
                        protocol: hop.protocol.clone(),
                    },
                ));
            }
        }
        Ok(out)
    }

    // -- defender intents ---------------------------------------------------

    fn charge(
        used: &mut u32,
        budget: u32,
        kind: &'static str,
    ) -> Result<(), PlanError> {
        if *used >= budget {
            return Err(PlanError::BudgetExceeded {
                kind,
                used: *used,
                budget,
            });
        }
        *used += 1;
        Ok(())
    }

    fn plan_decoy_host(
        &mut self,
        subnet: &Option<SubnetId>,
        kb: &KnowledgeBase,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        let subnet = match subnet {
            Some(s) => {
                if !kb.subnets.contains_key(s) {
                    return Err(PlanError::UnknownEntity(format!("subnet {s}")));
                }
                s.clone()
            }
            None => {
                let all: Vec<&SubnetId> = kb.subnets.keys().collect();
                if all.is_empty() {
                    return Err(PlanError::EmptyPlan("no subnets known to host a decoy"));
                }
                all[rng.gen_range(0..all.len())].clone()
            }
        };
        Self::charge(
            &mut self.used.decoy_hosts,
            self.budget.decoy_hosts,
            "decoy-hosts",
        )?;

        let id = loop {
            let candidate = HostId::new(format!("node-{:02}", self.next_host));
            self.next_host += 1;
            if !kb.hosts.contains_key(&candidate) {
                break candidate;
            }
        };

        // The lure: an SSH service with a remotely exploitable flaw.  Reuse
        // a flaw already seen in this network when one rides on SSH, so the
        // decoy blends in; otherwise invent a weak-SSH one.
        let cloned: Vec<&crate::events::VulnBanner> = kb
            .hosts
            .values()
            .flat_map(|h| h.vulnerabilities.values())
            .filter(|v| v.remote && v.protocol == Protocol::Ssh)
            .collect();
        let (vuln_id, vuln_def) = if cloned.is_empty() {
            let vid = VulnId::new("weak-ssh");
            let def = Vulnerability {
                id: vid.clone(),
                label: "guessable ssh password".into(),
                target_service: "sshd".into(),
                grants: Privilege::Root,
                remote: true,
            };
            (vid, vec![def])
        } else {
            let banner = cloned[rng.gen_range(0..cloned.len())];
            let def = Vulnerability {
                id: banner.id.clone(),
                label: banner.id.to_string(),
                target_service: "sshd".into(),
                grants: banner.grants,
                remote: true,
            };
            (banner.id.clone(), vec![def])
        };

        let host = Host {
            id: id.clone(),
            subnet,
            services: vec![Service {
                name: "sshd".into(),
                protocol: Protocol::Ssh,
                port: 22,
                honeypot: true,
            }],
            vulnerabilities: vec![vuln_id],
            stored_credentials: Vec::new(),
            data_assets: Vec::new(),
            users: vec!["admin".into()],
            is_decoy: true,
            decoy_payload: None,
        };
        Ok(vec![self.action(
            Location::External,
            ActionKind::Deploy {
                payload: DeployPayload::Host {
                    host,
                    vuln_defs: vuln_def,
                    assets: Vec::new(),
                },
            },
        )])
    }

    fn plan_decoy_credential(
        &mut self,
        on: &HostId,
        target: &HostId,
        valid: bool,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        self.known_host(on, kb)?;
        self.known_host(target, kb)?;
        Self::charge(
            &mut self.used.decoy_credentials,
            self.budget.decoy_credentials,
            "decoy-credentials",
        )?;
        let id = loop {
            let candidate = CredentialId::new(format!("dc-{:02}", self.next_cred));
            self.next_cred += 1;
            if !kb.credentials.contains_key(&candidate) {
                break candidate;
            }
        };
        let credential = Credential {
            id,
            principal: "svc-backup".into(),
            target_host: target.clone(),
            privilege: Privilege::User,
            valid,
            is_decoy: true,
        };
        Ok(vec![self.action(
            Location::External,
            ActionKind::Deploy {
                payload: DeployPayload::Credential {
                    credential,
                    on: on.clone(),
                },
            },
        )])
    }

    fn plan_decoy_data(
        &mut self,
        on: &HostId,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        self.known_host(on, kb)?;
        Self::charge(
            &mut self.used.decoy_data,
            self.budget.decoy_data,
            "decoy-data",
        )?;
        let id = loop {
            let candidate = AssetId::new(format!("bait-{:02}", self.next_asset));
            self.next_asset += 1;
            if !kb.assets.contains_key(&candidate) {
                break candidate;
            }
        };
        let asset = DataAsset {
            id,
            host: on.clone(),
            size_units: 1,
            critical: false,
            is_decoy: true,
            markers: vec!["ssn".into(), "password".into()],
        };
        Ok(vec![self.action(
            Location::External,
            ActionKind::Deploy {
                payload: DeployPayload::Data { asset },
            },
        )])
    }

    fn plan_decoy_user(
        &mut self,
        on: &HostId,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        self.known_host(on, kb)?;
        Self::charge(
            &mut self.used.decoy_users,
            self.budget.decoy_users,
            "decoy-users",
        )?;
        let name = format!("svc-mirror-{:02}", self.next_user);
        self.next_user += 1;
        Ok(vec![self.action(
            Location::External,
            ActionKind::Deploy {
                payload: DeployPayload::User {
                    host: on.clone(),
                    name,
                },
            },
        )])
    }

    fn plan_honey_service(
        &mut self,
        on: &HostId,
        kb: &KnowledgeBase,
    ) -> Result<Vec<LowLevelAction>, PlanError> {
        self.known_host(on, kb)?;
        Self::charge(
            &mut self.used.honey_services,
            self.budget.honey_services,
            "honey-services",
        )?;
        let service = Service {
            name: format!("telnetd-{:02}", self.next_service),
            protocol: Protocol::Custom("telnet".into()),
            port: 23,
            honeypot: true,
        };
        self.next_service += 1;
        Ok(vec![self.action(
            Location::External,
            ActionKind::Deploy {
                payload: DeployPayload::HoneyService {
                    host: on.clone(),
                    service,
                },
            },
        )])
    }
}
