//! Event vocabulary.
//!
//! Two layers: [`LowLevelEvent`]s are the raw facts the kernel emits when an
//! action completes (connections, syscalls, command output).  The telemetry
//! module folds them into [`HighLevelEvent`]s — the observation vocabulary
//! strategies are written against.  Every high-level event keeps provenance
//! links (sequence numbers) back to the low-level events it was derived
//! from.

use serde::{Deserialize, Serialize};

use crate::ids::{
    Agent, AssetId, CredentialId, HostId, Location, Privilege, Protocol, SubnetId, Tick,
};

/// One parsed row of a subnet scan: a live host and what the sweep saw on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub host: HostId,
    pub subnet: SubnetId,
    pub services: Vec<ServiceBanner>,
    pub vulnerabilities: Vec<VulnBanner>,
}

/// Service line in scan or probe output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceBanner {
    pub name: String,
    pub protocol: Protocol,
    pub port: u16,
}

/// Vulnerability as reported by scan tooling: enough detail to plan an
/// exploit (which protocol carries it, what it grants, whether it is
/// remotely triggerable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnBanner {
    pub id: crate::ids::VulnId,
    pub protocol: Protocol,
    pub grants: Privilege,
    pub remote: bool,
}

/// Credential record as it appears in command output (e.g. grepping an SSH
/// config file): the file names both the principal's target host and the
/// network it sits on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialRecord {
    pub credential: CredentialId,
    pub target_host: HostId,
    pub target_subnet: SubnetId,
    pub privilege: Privilege,
}

/// Data-asset record in command output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub asset: AssetId,
    pub host: HostId,
    pub size_units: u32,
    pub markers: Vec<String>,
}

/// Structured payload of a `command-output` event.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandSummary {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub credentials: Vec<CredentialRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assets: Vec<AssetRecord>,
    /// Subnets that host network configuration shows routes to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub routes: Vec<SubnetId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub services: Vec<ServiceBanner>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vulnerabilities: Vec<VulnBanner>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum LowLevelEventKind {
    /// A network connection was established.
    Connection {
        src: Location,
        dst: Location,
        protocol: Protocol,
    },
    /// A credential file was touched or a credential was presented: both
    /// register the same way in host syscall telemetry.
    SyscallCredentialUse {
        host: HostId,
        credential: CredentialId,
    },
    /// A data file was opened and read on a host.
    SyscallFileRead { host: HostId, asset: AssetId },
    /// Text record produced by a subnet sweep.
    ScanOutput {
        subnet: SubnetId,
        entries: Vec<ScanEntry>,
    },
    /// Text record produced by a command run on a host.
    CommandOutput {
        host: HostId,
        summary: CommandSummary,
    },
    /// One hop of an asset copy finished.
    TransferComplete {
        asset: AssetId,
        from: Location,
        to: Location,
    },
    /// Malware was installed (or refreshed) on a host at a privilege level.
    ImplantInstalled { host: HostId, privilege: Privilege },
    /// Host rolled back to its clean snapshot.
    HostRestored { host: HostId },
    /// Host powered off.
    HostShutdown { host: HostId },
    /// An action could not complete.
    ActionFailed {
        reason: FailureReason,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<Location>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Location>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    /// The acting host lost its implant (or went down) before the action
    /// finished.
    SourceLost,
    /// The target host is powered off or unknown to the world.
    TargetDown,
    /// No reachability rule permits the required protocol.
    NotReachable,
    /// The credential was rejected.
    InvalidCredential,
    /// The target does not expose the service or vulnerability.
    NotVulnerable,
    /// The asset is not present where the copy expected it.
    AssetMissing,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FailureReason::SourceLost => "source-lost",
            FailureReason::TargetDown => "target-down",
            FailureReason::NotReachable => "not-reachable",
            FailureReason::InvalidCredential => "invalid-credential",
            FailureReason::NotVulnerable => "not-vulnerable",
            FailureReason::AssetMissing => "asset-missing",
        };
        f.write_str(s)
    }
}

/// Raw kernel event: what happened, when, and on whose behalf.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowLevelEvent {
    pub seq: u64,
    pub tick: Tick,
    pub actor: Agent,
    #[serde(flatten)]
    pub kind: LowLevelEventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum HighLevelEventKind {
    // Defender-side observations.
    /// A non-decoy source connected to a decoy host.
    DecoyHostInteraction { source: Location, target: HostId },
    /// A host touched or presented a registered decoy credential
    /// (fine-grained telemetry only).
    HostUsedDecoyCredential {
        host: HostId,
        credential: CredentialId,
    },
    /// Any SSH connection between two endpoints.
    SshConnection { src: Location, dst: Location },

    // Attacker-side observations.
    /// A subnet became known (routes in host configs, credential targets).
    FoundSubnet { subnet: SubnetId },
    /// A live host appeared in scan output.
    FoundHost { host: HostId, subnet: SubnetId },
    /// Service (and vulnerability) detail for a host was parsed.
    FoundNetworkServices {
        host: HostId,
        services: Vec<ServiceBanner>,
        vulnerabilities: Vec<VulnBanner>,
    },
    /// A credential record was parsed out of command output.
    FoundCredential {
        credential: CredentialId,
        target_host: HostId,
        target_subnet: SubnetId,
        privilege: Privilege,
        found_on: HostId,
    },
    /// A file matching the sensitive-keyword list was read.
    DataFound {
        asset: AssetId,
        host: HostId,
        size_units: u32,
    },
    /// An asset reached the attacker's egress point.
    ExfiltratedData { asset: AssetId },
    /// An implant landed on a host the attacker did not previously hold.
    InfectedNewHost { host: HostId, privilege: Privilege },
    /// An implant landed with root privilege.
    GotRootAccess { host: HostId },
    /// A previously held host was restored or shut down.
    LostAccess { host: HostId },
}

impl HighLevelEventKind {
    /// Stable kind label used for subscriptions and log records.
    pub fn name(&self) -> &'static str {
        match self {
            HighLevelEventKind::DecoyHostInteraction { .. } => "decoy-host-interaction",
            HighLevelEventKind::HostUsedDecoyCredential { .. } => "host-used-decoy-credential",
            HighLevelEventKind::SshConnection { .. } => "ssh-connection",
            HighLevelEventKind::FoundSubnet { .. } => "found-subnet",
            HighLevelEventKind::FoundHost { .. } => "found-host",
            HighLevelEventKind::FoundNetworkServices { .. } => "found-network-services",
            HighLevelEventKind::FoundCredential { .. } => "found-credential",
            HighLevelEventKind::DataFound { .. } => "data-found",
            HighLevelEventKind::ExfiltratedData { .. } => "exfiltrated-data",
            HighLevelEventKind::InfectedNewHost { .. } => "infected-new-host",
            HighLevelEventKind::GotRootAccess { .. } => "got-root-access",
            HighLevelEventKind::LostAccess { .. } => "lost-access",
        }
    }

    /// All subscription labels, in vocabulary order.
    pub fn all_names() -> &'static [&'static str] {
        &[
            "decoy-host-interaction",
            "host-used-decoy-credential",
            "ssh-connection",
            "found-subnet",
            "found-host",
            "found-network-services",
            "found-credential",
            "data-found",
            "exfiltrated-data",
            "infected-new-host",
            "got-root-access",
            "lost-access",
        ]
    }
}

/// Observation delivered to one agent, with provenance back to the raw
/// events it was derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighLevelEvent {
    pub seq: u64,
    pub tick: Tick,
    /// The agent this observation belongs to.
    pub audience: Agent,
    #[serde(flatten)]
    pub kind: HighLevelEventKind,
    /// Sequence numbers of the low-level events this was derived from.
    pub provenance: Vec<u64>,
}
