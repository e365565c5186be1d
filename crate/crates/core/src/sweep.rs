//! Parameter sweeps: run a grid of (environment, attacker, defender) cells
//! over several trials each, and tabulate the outcomes.
//!
//! Sweeps are deterministic end to end.  Every trial's seed is derived from
//! the base seed, the cell's label, and the trial index, so adding a cell
//! to the grid never changes any other cell's results, and re-running a
//! sweep reproduces its output files byte for byte.

use serde::{Deserialize, Serialize};

use crate::ids::stable_fingerprint;
use crate::runner::RunReport;
use crate::scenario::{Scenario, ScenarioError};

/// The grid axes.  An empty axis means "just the base scenario's value".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SweepAxes {
    pub environments: Vec<String>,
    pub attackers: Vec<String>,
    pub defenders: Vec<String>,
}

/// Split a sweep document into its base scenario and its axes.  The file is
/// an ordinary scenario plus an optional `[sweep]` table.
pub fn parse_sweep_document(text: &str) -> Result<(Scenario, SweepAxes), ScenarioError> {
    let mut value: toml::Value = toml::from_str(text).map_err(ScenarioError::Parse)?;
    let axes = match value.as_table_mut().and_then(|t| t.remove("sweep")) {
        Some(v) => v.try_into().map_err(ScenarioError::Parse)?,
        None => SweepAxes::default(),
    };
    let scenario: Scenario = value.try_into().map_err(ScenarioError::Parse)?;
    Ok((scenario, axes))
}

/// One output table line: a single trial, a per-cell mean, or a cell that
/// failed to run at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepRow {
    pub environment: String,
    pub attacker: String,
    pub defender: String,
    /// "trial", "mean", or "error".
    pub row: String,
    pub trial: Option<u32>,
    pub seed: Option<u64>,
    pub goals_achieved_pct: Option<f64>,
    pub data_exfiltrated_pct: Option<f64>,
    pub decoy_interaction_rate: Option<f64>,
    /// Per-trial: the goal tick.  Mean rows average the trials that met
    /// the goal and stay empty when none did.
    pub time_to_goal: Option<f64>,
    pub end_tick: Option<f64>,
    pub end_reason: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    /// Comma-separated table, one row per line, headers first.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows always serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer cannot fail"))
            .expect("csv output is utf-8")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.rows).expect("rows always serialize");
        s.push('\n');
        s
    }
}

/// Run the whole grid.  Cells run in axis order, trials in index order;
/// a failing cell contributes one error row and the sweep moves on.
pub fn run_sweep(base: &Scenario, axes: &SweepAxes) -> SweepOutcome {
    let one_default = |list: &[String], fallback: &str| -> Vec<String> {
        if list.is_empty() {
            vec![fallback.to_string()]
        } else {
            list.to_vec()
        }
    };
    let environments = one_default(&axes.environments, &base.environment.name);
    let attackers = one_default(&axes.attackers, &base.attacker.strategy);
    let defenders = one_default(&axes.defenders, &base.defender.strategy);
    let trials = base.run.trials.max(1);

    let mut rows = Vec::new();
    for environment in &environments {
        for attacker in &attackers {
            for defender in &defenders {
                let mut cell = base.clone();
                cell.environment.name = environment.clone();
                cell.attacker.strategy = attacker.clone();
                cell.defender.strategy = defender.clone();
                let label = format!("env={environment} attacker={attacker} defender={defender}");
                let cell_seed = base
                    .run
                    .seed
                    .wrapping_add(stable_fingerprint(label.as_bytes()));

                let mut reports: Vec<RunReport> = Vec::new();
                for trial in 0..trials {
                    let seed = cell_seed.wrapping_add(u64::from(trial));
                    match cell.run_seeded(seed) {
                        Ok((_log, report)) => {
                            rows.push(trial_row(
                                environment, attacker, defender, trial, seed, &report,
                            ));
                            reports.push(report);
                        }
                        Err(e) => {
                            rows.push(error_row(environment, attacker, defender, trial, seed, &e));
                        }
                    }
                }
                if !reports.is_empty() {
                    rows.push(mean_row(environment, attacker, defender, &reports));
                }
            }
        }
    }
    SweepOutcome { rows }
}

fn trial_row(
    environment: &str,
    attacker: &str,
    defender: &str,
    trial: u32,
    seed: u64,
    report: &RunReport,
) -> SweepRow {
    SweepRow {
        environment: environment.to_string(),
        attacker: attacker.to_string(),
        defender: defender.to_string(),
        row: "trial".to_string(),
        trial: Some(trial),
        seed: Some(seed),
        goals_achieved_pct: Some(report.goals_achieved_pct),
        data_exfiltrated_pct: Some(report.data_exfiltrated_pct),
        decoy_interaction_rate: Some(report.decoy_interaction_rate),
        time_to_goal: report.time_to_goal.map(|t| t as f64),
        end_tick: Some(report.end_tick as f64),
        end_reason: Some(report.end_reason.clone()),
        error: None,
    }
}

fn mean_row(environment: &str, attacker: &str, defender: &str, reports: &[RunReport]) -> SweepRow {
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&RunReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
    let goal_ticks: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.time_to_goal.map(|t| t as f64))
        .collect();
    SweepRow {
        environment: environment.to_string(),
        attacker: attacker.to_string(),
        defender: defender.to_string(),
        row: "mean".to_string(),
        trial: None,
        seed: None,
        goals_achieved_pct: Some(mean(&|r| r.goals_achieved_pct)),
        data_exfiltrated_pct: Some(mean(&|r| r.data_exfiltrated_pct)),
        decoy_interaction_rate: Some(mean(&|r| r.decoy_interaction_rate)),
        time_to_goal: if goal_ticks.is_empty() {
            None
        } else {
            Some(goal_ticks.iter().sum::<f64>() / goal_ticks.len() as f64)
        },
        end_tick: Some(mean(&|r| r.end_tick as f64)),
        end_reason: None,
        error: None,
    }
}

fn error_row(
    environment: &str,
    attacker: &str,
    defender: &str,
    trial: u32,
    seed: u64,
    error: &ScenarioError,
) -> SweepRow {
    SweepRow {
        environment: environment.to_string(),
        attacker: attacker.to_string(),
        defender: defender.to_string(),
        row: "error".to_string(),
        trial: Some(trial),
        seed: Some(seed),
        goals_achieved_pct: None,
        data_exfiltrated_pct: None,
        decoy_interaction_rate: None,
        time_to_goal: None,
        end_tick: None,
        end_reason: None,
        error: Some(error.to_string()),
    }
}
