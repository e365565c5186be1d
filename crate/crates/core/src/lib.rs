//! Deterministic discrete-event simulator for cyber-deception what-if
//! experiments.
//!
//! The crate models a network environment (hosts, credentials, data,
//! reachability), a seeded event kernel that executes attacker and defender
//! actions with fixed durations, a telemetry layer that folds raw events
//! into the observations each side is allowed to see, and a library of
//! attacker and defender strategies written against those observations.
//! Everything a run produces is derived by folding its event log, so replay
//! of a log reproduces the reported metrics exactly.

pub mod env;
pub mod eventlog;
pub mod events;
pub mod graph;
pub mod kernel;
pub mod planner;
pub mod runner;
pub mod scenario;
pub mod sweep;
pub mod telemetry;
pub mod ids;
pub mod kb;
pub mod strategies;
pub mod strategy;

pub use env::builders::{build_environment, builtin_names, BuildError, BuildParams};
pub use env::{Environment, Violation};
