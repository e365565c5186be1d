//! Built-in attacker and defender strategies, and the registry that builds
//! them by name.

pub mod darkside;
pub mod defenders;
pub mod dfs;
pub mod equifax_replica;
pub mod external;
pub mod persistent;
pub mod targeted;

pub use darkside::Darkside;
pub use defenders::{
    BasicDecoys, LayeredDeception, Misinformation, MixedDeception, NullDefender, OtFlood,
    SimpleStateful,
};
pub use dfs::Dfs;
pub use equifax_replica::EquifaxReplica;
pub use external::ExternalAgent;
pub use persistent::Persistent;
pub use targeted::Targeted;

use thiserror::Error;

use crate::ids::{HostId, SubnetId};
use crate::planner::CapabilityBudget;
use crate::strategy::Strategy;

/// Attackers constructible by name.  The external adapter is excluded: it
/// needs a live channel and is built programmatically.
pub const ATTACKER_NAMES: &[&str] =
    &["dfs", "equifax-replica", "targeted", "persistent", "darkside"];

/// Defenders constructible by name.
pub const DEFENDER_NAMES: &[&str] = &[
    "none",
    "basic",
    "mixed",
    "layered",
    "simple-stateful",
    "misinformation",
    "ot-flood",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyConfigError {
    #[error("unknown {role} strategy {name:?} (known: {known})")]
    Unknown {
        role: &'static str,
        name: String,
        known: String,
    },
    #[error("ot-flood placement needs a designated subnet and none was given or derivable")]
    MissingFloodSubnet,
}

fn unknown(role: &'static str, name: &str, options: &[&str]) -> StrategyConfigError {
    StrategyConfigError::Unknown {
        role,
        name: name.to_string(),
        known: options.join(", "),
    }
}

/// Build an attacker.  `prior` is the intelligence fed to the targeted
/// strategy; the others ignore it.
pub fn build_attacker(
    name: &str,
    prior: Vec<HostId>,
) -> Result<Box<dyn Strategy>, StrategyConfigError> {
    match name {
        "dfs" => Ok(Box::new(Dfs::default())),
        "equifax-replica" => Ok(Box::new(EquifaxReplica::default())),
        "targeted" => Ok(Box::new(Targeted::new(prior))),
        "persistent" => Ok(Box::new(Persistent::default())),
        "darkside" => Ok(Box::new(Darkside::default())),
        other => Err(unknown("attacker", other, ATTACKER_NAMES)),
    }
}

/// Build a defender.  `flood_subnet` is where ot-flood concentrates its
/// decoys; the other strategies ignore it.
pub fn build_defender(
    name: &str,
    budget: CapabilityBudget,
    flood_subnet: Option<SubnetId>,
) -> Result<Box<dyn Strategy>, StrategyConfigError> {
    match name {
        "none" => Ok(Box::new(NullDefender)),
        "basic" => Ok(Box::new(BasicDecoys::new(budget))),
        "mixed" => Ok(Box::new(MixedDeception::new(budget))),
        "layered" => Ok(Box::new(LayeredDeception::new(budget))),
        "simple-stateful" => Ok(Box::new(SimpleStateful::new(budget))),
        "misinformation" => Ok(Box::new(Misinformation::new(budget))),
        "ot-flood" => match flood_subnet {
            Some(subnet) => Ok(Box::new(OtFlood::new(budget, subnet))),
            None => Err(StrategyConfigError::MissingFloodSubnet),
        },
        other => Err(unknown("defender", other, DEFENDER_NAMES)),
    }
}
