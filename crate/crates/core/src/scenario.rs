//! Scenario files: a complete what-if experiment in one TOML document.
//!
//! A scenario names an environment, the two strategies, the defender's
//! deception budget, and the run parameters.  Everything has a default, so
//! the smallest useful file is just a few lines:
//!
//! ```toml
//! [environment]
//! name = "equifax"
//!
//! [attacker]
//! strategy = "dfs"
//!
//! [defender]
//! strategy = "layered"
//!
//! [run]
//! seed = 7
//! ```
//!
//! The same struct can be built in code; the TOML form is just its serde
//! image.  Unknown keys are rejected so typos fail loudly instead of
//! silently running a different experiment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::builders::{build_environment, BuildError, BuildParams};
use crate::env::{Environment, GoalKind};
use crate::eventlog::EventLog;
use crate::ids::{HostId, SubnetId, Tick};
use crate::kernel::DurationTable;
use crate::planner::CapabilityBudget;
use crate::runner::{AttackerFactory, RunReport, RunSettings, SetupError, Simulation};
use crate::strategies::{build_attacker, build_defender, StrategyConfigError};
use crate::telemetry::TelemetryMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct Scenario {
    pub environment: EnvironmentSpec,
    pub attacker: AttackerSpec,
    pub defender: DefenderSpec,
    pub run: RunSpec,
    /// Action-duration overrides; anything omitted keeps its default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub durations: Option<DurationTable>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            environment: EnvironmentSpec::default(),
            attacker: AttackerSpec::default(),
            defender: DefenderSpec::default(),
            run: RunSpec::default(),
            durations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EnvironmentSpec {
    /// One of the built-in networks.
    pub name: String,
    /// Builder size knob (chain length, spoke count, database count).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<u32>,
    /// Actuator count, for builders with an OT floor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actuators: Option<u32>,
    /// Goal time limit in ticks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<Tick>,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec {
            name: "chain".to_string(),
            size: None,
            actuators: None,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct AttackerSpec {
    pub strategy: String,
    /// Hosts the attacker believes are high-value, overriding both the
    /// defender's advertisements and the true goal targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<HostId>>,
}

impl Default for AttackerSpec {
    fn default() -> Self {
        AttackerSpec {
            strategy: "dfs".to_string(),
            prior: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct DefenderSpec {
    pub strategy: String,
    pub budget: CapabilityBudget,
    /// Subnet the flooding defender saturates with decoys.  When omitted it
    /// is derived from the goals: the first subnet hosting a goal target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flood_subnet: Option<SubnetId>,
}

impl Default for DefenderSpec {
    fn default() -> Self {
        DefenderSpec {
            strategy: "none".to_string(),
            budget: CapabilityBudget::default(),
            flood_subnet: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunSpec {
    pub seed: u64,
    /// Run length in ticks; defaults to the environment's time limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Tick>,
    pub telemetry_mode: TelemetryMode,
    /// Number of seeds a sweep runs per cell, counting up from `seed`.
    pub trials: u32,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            seed: 0,
            horizon: None,
            telemetry_mode: TelemetryMode::FineGrained,
            trials: 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file is not valid: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Environment(#[from] BuildError),
    #[error(transparent)]
    Strategy(#[from] StrategyConfigError),
    #[error(transparent)]
    Setup(#[from] SetupError),
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenarios always serialize")
    }

    /// Build the environment this scenario runs in, for a given seed.
    pub fn environment(&self, seed: u64) -> Result<Environment, ScenarioError> {
        let params = BuildParams {
            size: self.environment.size,
            actuators: self.environment.actuators,
            time_limit: self.environment.time_limit,
            seed,
        };
        Ok(build_environment(&self.environment.name, &params)?)
    }

    /// Assemble a ready-to-run simulation for one seed.  The scenario's
    /// own seed is a starting point; sweeps and trials pass others.
    pub fn simulation(&self, seed: u64) -> Result<Simulation, ScenarioError> {
        let env = self.environment(seed)?;
        let flood = match self.defender.flood_subnet.clone() {
            Some(s) => Some(s),
            None => derive_flood_subnet(&env),
        };
        let defender = build_defender(&self.defender.strategy, self.defender.budget, flood)?;
        // Validate the attacker name now; the factory runs later, once the
        // prior is known.
        build_attacker(&self.attacker.strategy, Vec::new())?;
        let name = self.attacker.strategy.clone();
        let factory: AttackerFactory = Box::new(move |prior| {
            build_attacker(&name, prior).expect("attacker name validated above")
        });
        let settings = RunSettings {
            scenario: self.environment.name.clone(),
            seed,
            horizon: self.run.horizon,
            telemetry_mode: self.run.telemetry_mode,
            durations: self.durations.clone().unwrap_or_default(),
            attacker_prior: self.attacker.prior.clone(),
        };
        Ok(Simulation::new(
            env,
            defender,
            factory,
            self.defender.budget,
            settings,
        )?)
    }

    /// Run one trial at the scenario's own seed.
    pub fn run_once(&self) -> Result<(EventLog, RunReport), ScenarioError> {
        Ok(self.simulation(self.run.seed)?.run())
    }

    /// Run one trial at an explicit seed.
    pub fn run_seeded(&self, seed: u64) -> Result<(EventLog, RunReport), ScenarioError> {
        Ok(self.simulation(seed)?.run())
    }
}

/// The subnet worth flooding with decoys, absent explicit configuration:
/// the first subnet (in id order) that hosts a goal target.
pub fn derive_flood_subnet(env: &Environment) -> Option<SubnetId> {
    let hosts: Vec<&HostId> = match &env.goals.kind {
        GoalKind::ExfiltrateAssets { assets } => assets
            .iter()
            .filter_map(|a| env.asset(a).map(|d| &d.host))
            .collect(),
        GoalKind::InfectHosts { hosts } => hosts.iter().collect(),
    };
    hosts
        .into_iter()
        .filter_map(|h| env.host(h).map(|host| host.subnet.clone()))
        .min()
}
