//! The append-only record of one run, and the code that reads it back.
//!
//! A log is a sequence of self-describing JSON lines: one header, then
//! action starts and events in the order they happened, then one end marker.
//! Identical runs produce byte-identical logs, which is what makes replay
//! and determinism checks trivial: compare the text.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Environment;
use crate::events::{HighLevelEvent, LowLevelEvent};
use crate::ids::{stable_fingerprint, Agent, AssetId, HostId, Location, Tick};
use crate::planner::BudgetUsed;
use crate::telemetry::TelemetryMode;

/// Bumped whenever the record layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

/// Hex fingerprint of the full environment definition.
pub fn environment_digest(env: &Environment) -> String {
    let bytes = serde_json::to_vec(env).expect("environments always serialize");
    format!("{:016x}", stable_fingerprint(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub env_digest: String,
    pub horizon: Tick,
    pub telemetry_mode: TelemetryMode,
    /// What winning means: either every listed asset leaves the network, or
    /// every listed host is touched.
    pub goal_kind: String,
    pub goal_assets: Vec<AssetId>,
    pub goal_hosts: Vec<HostId>,
    /// Real, non-decoy critical assets in the base environment; the
    /// denominator of the exfiltration metric.
    pub critical_assets: Vec<AssetId>,
    pub entry: Location,
}

/// One action leaving the pipeline, written at its start tick.  The decoy
/// flag is resolved against the registry as of that moment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub handle: u64,
    pub actor: Agent,
    pub start: Tick,
    pub completes: Tick,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<HostId>,
    pub on_decoy: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndRecord {
    pub reason: String,
    pub tick: Tick,
    pub budget_used: BudgetUsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum Record {
    Header(Header),
    Action(ActionRecord),
    Low { event: LowLevelEvent },
    High { event: HighLevelEvent },
    End(EndRecord),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log is empty or does not begin with a header record")]
    MissingHeader,
    #[error("log schema version {found} is not the supported {SCHEMA_VERSION}")]
    SchemaMismatch { found: u32 },
    #[error("log damaged at line {line}: {source}")]
    Damaged {
        line: usize,
        source: serde_json::Error,
    },
    #[error("log ends without an end record (truncated after line {lines})")]
    Truncated { lines: usize },
}

/// In-memory log under construction, or one parsed back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    records: Vec<Record>,
}

impl EventLog {
    pub fn new(header: Header) -> Self {
        EventLog {
            records: vec![Record::Header(header)],
        }
    }

    pub fn header(&self) -> &Header {
        match &self.records[0] {
            Record::Header(h) => h,
            _ => unreachable!("constructors guarantee a leading header"),
        }
    }

    pub fn push_action(&mut self, action: ActionRecord) {
        self.records.push(Record::Action(action));
    }

    pub fn push_low(&mut self, event: LowLevelEvent) {
        self.records.push(Record::Low { event });
    }

    pub fn push_high(&mut self, event: HighLevelEvent) {
        self.records.push(Record::High { event });
    }

    pub fn finish(&mut self, end: EndRecord) {
        self.records.push(Record::End(end));
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn end(&self) -> Option<&EndRecord> {
        match self.records.last() {
            Some(Record::End(e)) => Some(e),
            _ => None,
        }
    }

    /// Serialize as JSON lines.  Deterministic: same records, same bytes.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    /// Parse a log back from its JSONL form, validating framing: header
    /// first, supported schema, end marker present, no damaged lines.
    pub fn parse(text: &str) -> Result<EventLog, ReplayError> {
        let mut records = Vec::new();
        let mut lines = 0usize;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            lines += 1;
            let rec: Record = serde_json::from_str(line)
                .map_err(|source| ReplayError::Damaged {
                    line: idx + 1,
                    source,
                })?;
            records.push(rec);
        }
        let Some(Record::Header(h)) = records.first() else {
            return Err(ReplayError::MissingHeader);
        };
        if h.schema_version != SCHEMA_VERSION {
            return Err(ReplayError::SchemaMismatch {
                found: h.schema_version,
            });
        }
        if !matches!(records.last(), Some(Record::End(_))) {
            return Err(ReplayError::Truncated { lines });
        }
        Ok(EventLog { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{HighLevelEventKind, LowLevelEventKind};
    use crate::ids::SubnetId;

    fn tiny_log() -> EventLog {
        let mut log = EventLog::new(Header {
            schema_version: SCHEMA_VERSION,
            scenario: "chain".into(),
            seed: 7,
            env_digest: "00ff".into(),
            horizon: 100,
            telemetry_mode: TelemetryMode::FineGrained,
            goal_kind: "exfiltrate-assets".into(),
            goal_assets: vec![AssetId::new("chain-data-01")],
            goal_hosts: vec![],
            critical_assets: vec![AssetId::new("chain-data-01")],
            entry: Location::Host(HostId::new("h-01")),
        });
        log.push_action(ActionRecord {
            handle: 1,
            actor: Agent::Attacker,
            start: 1,
            completes: 31,
            kind: "scan-subnet".into(),
            target: None,
            on_decoy: false,
        });
        log.push_low(LowLevelEvent {
            seq: 1,
            tick: 31,
            actor: Agent::Attacker,
            kind: LowLevelEventKind::ScanOutput {
                subnet: SubnetId::new("ring"),
                entries: vec![],
            },
        });
        log.push_high(HighLevelEvent {
            seq: 2,
            tick: 31,
            audience: Agent::Attacker,
            kind: HighLevelEventKind::FoundSubnet {
                subnet: SubnetId::new("ring"),
            },
            provenance: vec![1],
        });
        log.finish(EndRecord {
            reason: "horizon".into(),
            tick: 100,
            budget_used: BudgetUsed::default(),
        });
        log
    }

    #[test]
    fn logs_round_trip_byte_for_byte() {
        let log = tiny_log();
        let text = log.to_jsonl();
        let back = EventLog::parse(&text).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn truncated_logs_are_rejected_with_position() {
        let log = tiny_log();
        let text = log.to_jsonl();
        // Drop the end marker.
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        match EventLog::parse(&cut) {
            Err(ReplayError::Truncated { lines }) => assert_eq!(lines, 4),
            other => panic!("expected truncation error, got {other:?}"),
        }
        // Corrupt a line in the middle.
        let mangled = text.replace("\"record\":\"action\"", "\"record\":\"actio");
        match EventLog::parse(&mangled) {
            Err(ReplayError::Damaged { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected damage error, got {other:?}"),
        }
    }

    #[test]
    fn future_schema_versions_are_refused() {
        let mut log = tiny_log();
        if let Record::Header(h) = &mut log.records[0] {
            h.schema_version = SCHEMA_VERSION + 1;
        }
        match EventLog::parse(&log.to_jsonl()) {
            Err(ReplayError::SchemaMismatch { found }) => {
                assert_eq!(found, SCHEMA_VERSION + 1);
            }
            other => panic!("expected schema mismatch, got {other:?}"),
        }
    }
}
