//! Identifier newtypes and small shared enums used across the simulator.
//!
//! Every entity in an environment is addressed by a cheap cloneable string
//! id.  Newtypes keep the different id spaces from being mixed up at compile
//! time while still serializing as plain strings.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Simulated time, measured in ticks.  One tick is one simulated second.
pub type Tick = u64;

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Identifies a host (real or decoy) inside an environment.
    HostId
);
string_id!(
    /// Identifies a subnet.
    SubnetId
);
string_id!(
    /// Identifies a credential entity.
    CredentialId
);
string_id!(
    /// Identifies a data asset.
    AssetId
);
string_id!(
    /// Identifies a vulnerability in the environment's catalog.
    VulnId
);

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

/// The two parties of a run.  The simulator is single-attacker,
/// single-defender; everything an agent owns (knowledge base, budgets,
/// subscriptions) is keyed by this enum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Attacker,
    Defender,
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Attacker => f.write_str("attacker"),
            Agent::Defender => f.write_str("defender"),
        }
    }
}

// ---------------------------------------------------------------------------
// Privilege
// ---------------------------------------------------------------------------

/// Privilege level an actor can hold on a host.  Ordered: `None < User < Root`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Privilege {
    #[default]
    None,
    User,
    Root,
}

impl fmt::Display for Privilege {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Privilege::None => f.write_str("none"),
            Privilege::User => f.write_str("user"),
            Privilege::Root => f.write_str("root"),
        }
    }
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

/// Network protocol a service speaks or a connection uses.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ssh,
    Https,
    Http,
    Db,
    Custom(String),
}

impl Protocol {
    /// Preference order used when an exfiltration hop may pick between
    /// several permitted protocols: SSH first, then HTTPS, then HTTP, then
    /// anything else in lexicographic order.
    pub fn preference_rank(&self) -> u8 {
        match self {
            Protocol::Ssh => 0,
            Protocol::Https => 1,
            Protocol::Http => 2,
            Protocol::Db => 3,
            Protocol::Custom(_) => 4,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Ssh => f.write_str("ssh"),
            Protocol::Https => f.write_str("https"),
            Protocol::Http => f.write_str("http"),
            Protocol::Db => f.write_str("db"),
            Protocol::Custom(name) => f.write_str(name),
        }
    }
}

// ---------------------------------------------------------------------------
// Locations
// ---------------------------------------------------------------------------

/// Where an action originates or traffic terminates.  `External` stands for
/// the world outside the modeled network: the attacker's own machine for
/// entry and exfiltration purposes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    #[serde(rename = "external")]
    External,
    #[serde(untagged)]
    Host(HostId),
}

impl Location {
    pub fn host(&self) -> Option<&HostId> {
        match self {
            Location::External => None,
            Location::Host(h) => Some(h),
        }
    }

    pub fn is_external(&self) -> bool {
        matches!(self, Location::External)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::External => f.write_str("external"),
            Location::Host(h) => write!(f, "{h}"),
        }
    }
}

impl From<HostId> for Location {
    fn from(h: HostId) -> Self {
        Location::Host(h)
    }
}

// ---------------------------------------------------------------------------
// Stable fingerprints
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a over raw bytes.  Used for scenario digests and sweep seed
/// derivation; unlike `std::hash`, the result is stable across platforms and
/// toolchain versions, which the byte-identical-output guarantees rely on.
pub fn stable_fingerprint(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn privilege_ordering() {
        assert!(Privilege::None < Privilege::User);
        assert!(Privilege::User < Privilege::Root);
    }

    #[test]
    fn ids_serialize_as_plain_strings() {
        let h = HostId::new("web-00");
        assert_eq!(serde_json::to_string(&h).unwrap(), "\"web-00\"");
        let back: HostId = serde_json::from_str("\"web-00\"").unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn location_serialization_distinguishes_external() {
        let ext = Location::External;
        let host = Location::Host(HostId::new("db-03"));
        assert_eq!(serde_json::to_string(&ext).unwrap(), "\"external\"");
        assert_eq!(serde_json::to_string(&host).unwrap(), "\"db-03\"");
        let round: Location = serde_json::from_str("\"external\"").unwrap();
        assert_eq!(round, Location::External);
        let round: Location = serde_json::from_str("\"db-03\"").unwrap();
        assert_eq!(round, host);
    }

    #[test]
    fn fingerprint_is_stable() {
        // Frozen reference value; must never drift between runs or platforms.
        assert_eq!(stable_fingerprint(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_fingerprint(b"chain"), stable_fingerprint(b"chain"));
        assert_ne!(stable_fingerprint(b"chain"), stable_fingerprint(b"star"));
    }

    #[test]
    fn protocol_preference_order() {
        let mut p = vec![
            Protocol::Http,
            Protocol::Custom("agent".into()),
            Protocol::Ssh,
            Protocol::Https,
        ];
        p.sort_by_key(|p| (p.preference_rank(), p.to_string()));
        assert_eq!(
            p,
            vec![
                Protocol::Ssh,
                Protocol::Https,
                Protocol::Http,
                Protocol::Custom("agent".into()),
            ]
        );
    }
}
