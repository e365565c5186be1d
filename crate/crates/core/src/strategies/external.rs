//! Adapter that hands the attacker's controls to an external process over a
//! line-oriented text channel.
//!
//! Outbound, the adapter serializes everything the agent observes:
//!
//! ```text
//! OBS <tick> <kind> <payload-json>
//! STATE <tick> <world-json>
//! ```
//!
//! One `STATE` line is written per idle tick, after which the adapter reads
//! exactly one command line back.  The command grammar is deliberately tiny:
//!
//! ```text
//! scan <subnet> | move <step-id>[+<step-id>...] | discover <host> | exfil <host> | noop
//! ```
//!
//! Anything else — unknown verbs, unknown ids, broken paths — draws an
//! `ERR` diagnostic and counts as `noop`.  A closed channel idles the agent
//! for the rest of the run.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::events::HighLevelEvent;
use crate::graph::{AttackPath, AttackStep};
use crate::ids::{HostId, SubnetId};
use crate::planner::HighLevelAction;
use crate::strategy::{AgentCtx, Strategy};

use super::dfs::ATTACKER_FEED;

pub struct ExternalAgent {
    reader: Box<dyn BufRead>,
    writer: Box<dyn Write>,
    closed: bool,
}

impl std::fmt::Debug for ExternalAgent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalAgent")
            .field("closed", &self.closed)
            .finish()
    }
}

/// What the external process gets to see each idle tick.
#[derive(Serialize)]
struct WorldView<'a> {
    steps: Vec<&'a str>,
    subnets: Vec<&'a SubnetId>,
    held: Vec<&'a HostId>,
    data_hosts: Vec<&'a HostId>,
}

impl ExternalAgent {
    pub fn new(reader: Box<dyn BufRead>, writer: Box<dyn Write>) -> Self {
        ExternalAgent {
            reader,
            writer,
            closed: false,
        }
    }

    fn say(&mut self, line: &str) {
        if self.closed {
            return;
        }
        if writeln!(self.writer, "{line}").is_err() || self.writer.flush().is_err() {
            self.closed = true;
        }
    }

    fn hear(&mut self) -> Option<String> {
        if self.closed {
            return None;
        }
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) | Err(_) => {
                self.closed = true;
                None
            }
            Ok(_) => Some(line.trim().to_string()),
        }
    }

    fn parse(&mut self, line: &str, ctx: &AgentCtx<'_>) -> Option<HighLevelAction> {
        let mut words = line.split_whitespace();
        let verb = words.next().unwrap_or("");
        let arg = words.next();
        let extra = words.next();
        if extra.is_some() {
            self.say("ERR too many arguments");
            return None;
        }
        match (verb, arg) {
            ("noop", None) => None,
            ("scan", Some(s)) => Some(HighLevelAction::ScanNetwork {
                subnet: SubnetId::new(s),
            }),
            ("discover", Some(h)) => Some(HighLevelAction::DiscoverLocalInfo {
                host: HostId::new(h),
            }),
            ("exfil", Some(h)) => Some(HighLevelAction::ExfiltrateData {
                host: HostId::new(h),
            }),
            ("move", Some(path)) => {
                let graph = ctx.graph();
                let mut steps: Vec<AttackStep> = Vec::new();
                for id in path.split('+') {
                    match graph.step(id) {
                        Some(s) => steps.push(s.clone()),
                        None => {
                            self.say(&format!("ERR unknown step {id}"));
                            return None;
                        }
                    }
                }
                if steps.is_empty() {
                    self.say("ERR empty path");
                    return None;
                }
                for pair in steps.windows(2) {
                    if pair[0].to_node() != pair[1].from {
                        self.say("ERR steps do not chain");
                        return None;
                    }
                }
                let origin = steps[0].from.clone();
                Some(HighLevelAction::LateralMove {
                    path: AttackPath { origin, steps },
                })
            }
            _ => {
                self.say("ERR bad command");
                None
            }
        }
    }
}

impl Strategy for ExternalAgent {
    fn name(&self) -> &'static str {
        "external"
    }

    fn subscriptions(&self) -> Vec<&'static str> {
        ATTACKER_FEED.to_vec()
    }

    fn on_event(
        &mut self,
        event: &HighLevelEvent,
        _new_steps: &[AttackStep],
        _ctx: &mut AgentCtx<'_>,
    ) -> Vec<HighLevelAction> {
        let payload = serde_json::to_string(&event.kind).unwrap_or_else(|_| "{}".into());
        self.say(&format!(
            "OBS {} {} {payload}",
            event.tick,
            event.kind.name()
        ));
        Vec::new()
    }

    fn on_tick(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        if self.closed {
            return Vec::new();
        }
        let graph = ctx.graph();
        let view = WorldView {
            steps: graph.steps().map(|s| s.id.as_str()).collect(),
            subnets: ctx.kb.subnets.keys().collect(),
            held: ctx.kb.infected.keys().collect(),
            data_hosts: ctx.kb.assets.values().map(|a| &a.host).collect(),
        };
        let world = serde_json::to_string(&view).unwrap_or_else(|_| "{}".into());
        self.say(&format!("STATE {} {world}", ctx.now));
        match self.hear() {
            Some(line) => self.parse(&line, ctx).into_iter().collect(),
            None => Vec::new(),
        }
    }
}
