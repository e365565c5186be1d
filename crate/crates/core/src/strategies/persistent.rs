//! Depth-first movement with a memory and a grudge.
//!
//! The persistent attacker designates its first conquered host as the anchor
//! of the campaign.  When the defender evicts it from a machine it rebuilds
//! the original chain of steps back onto it — but never repeats a credential
//! whose use cost it a host, on the theory that the credential was the trap.
//! If both the anchor and the original entry access are gone, it gives up.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::events::{HighLevelEvent, HighLevelEventKind};
use crate::graph::{AttackPath, AttackStep, GraphNode, StepMeans};
use crate::ids::{CredentialId, HostId, Location};
use crate::planner::HighLevelAction;
use crate::strategy::{AgentCtx, Strategy};

use super::dfs::{DfsCore, ATTACKER_FEED};

#[derive(Debug, Default)]
pub struct Persistent {
    core: DfsCore,
    booted: bool,
    halted: bool,
    /// First host taken beyond the entry point.
    anchor: Option<HostId>,
    /// The step that first delivered each host, our reinfection recipe.
    conquests: BTreeMap<HostId, AttackStep>,
    /// Last move launched from each host, for blame when that host is lost.
    last_move_from: BTreeMap<HostId, StepMeans>,
    /// Credentials never to touch again.
    burned: BTreeSet<CredentialId>,
    /// Reinfection marches, run before anything else.
    rebuild: VecDeque<HighLevelAction>,
    /// Hosts whose reinfection is already queued.
    rebuilding: BTreeSet<HostId>,
    /// The move currently presumed in flight.
    pending: Option<AttackStep>,
}

impl Persistent {
    fn entry_available(&self, ctx: &AgentCtx<'_>) -> bool {
        match &ctx.kb.entry {
            Location::External => true,
            Location::Host(h) => ctx.kb.infected.contains_key(h),
        }
    }

    /// Record a move we are about to issue.
    fn note_issue(&mut self, intent: &HighLevelAction) {
        let HighLevelAction::LateralMove { path } = intent else {
            return;
        };
        for step in &path.steps {
            if let GraphNode::State { host, .. } = &step.from {
                self.last_move_from.insert(host.clone(), step.means.clone());
            }
        }
        self.pending = path.steps.last().cloned();
    }

    /// Chain of remembered steps from currently held ground back onto
    /// `target`.  `None` when the recipe is incomplete or its start is gone.
    fn recipe_for(&self, ctx: &AgentCtx<'_>, target: &HostId) -> Option<Vec<AttackStep>> {
        let mut chain = Vec::new();
        let mut cursor = target.clone();
        loop {
            if chain.len() > 64 {
                return None;
            }
            let step = self.conquests.get(&cursor)?.clone();
            let from = step.from.clone();
            chain.push(step);
            match from {
                GraphNode::External => {
                    if ctx.kb.entry != Location::External {
                        return None;
                    }
                    break;
                }
                GraphNode::State { host, privilege } => {
                    let held = ctx
                        .kb
                        .infected
                        .get(&host)
                        .is_some_and(|p| *p >= privilege);
                    if held {
                        break;
                    }
                    cursor = host;
                }
            }
        }
        chain.reverse();
        Some(chain)
    }

    fn queue_reinfection(&mut self, ctx: &AgentCtx<'_>, host: &HostId) {
        if !self.rebuilding.insert(host.clone()) {
            return;
        }
        if let Some(steps) = self.recipe_for(ctx, host) {
            let origin = steps[0].from.clone();
            self.rebuild.push_back(HighLevelAction::LateralMove {
                path: AttackPath { origin, steps },
            });
        }
    }
}

impl Strategy for Persistent {
    fn name(&self) -> &'static str {
        "persistent"
    }

    fn subscriptions(&self) -> Vec<&'static str> {
        ATTACKER_FEED.to_vec()
    }

    fn on_init(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        if !self.booted {
            self.booted = true;
            self.core.bootstrap(ctx.kb);
        }
        Vec::new()
    }

    fn on_event(
        &mut self,
        event: &HighLevelEvent,
        new_steps: &[AttackStep],
        ctx: &mut AgentCtx<'_>,
    ) -> Vec<HighLevelAction> {
        self.core.ingest(new_steps);
        self.core.react(event);
        match &event.kind {
            HighLevelEventKind::InfectedNewHost { host, .. } => {
                self.rebuilding.remove(host);
                if let Some(step) = self.pending.take() {
                    if step.to_host == *host {
                        self.conquests.entry(host.clone()).or_insert(step);
                    }
                }
                let is_entry = ctx.kb.entry == Location::Host(host.clone());
                if self.anchor.is_none() && !is_entry {
                    self.anchor = Some(host.clone());
                }
            }
            HighLevelEventKind::LostAccess { host } => {
                // If the last thing we did from that host was log in
                // somewhere, that credential is presumed burned.
                if let Some(StepMeans::Credential(c)) = self.last_move_from.get(host) {
                    self.burned.insert(c.clone());
                }
                if self.anchor.as_ref() == Some(host) && !self.entry_available(ctx) {
                    self.halted = true;
                } else {
                    self.queue_reinfection(ctx, host);
                }
            }
            _ => {}
        }
        Vec::new()
    }

    fn on_tick(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        if self.halted {
            return Vec::new();
        }
        if let Some(march) = self.rebuild.pop_front() {
            self.note_issue(&march);
            return vec![march];
        }
        // Depth-first baseline, skipping any move that would reuse a burned
        // credential: those stack entries are consumed and never retried.
        loop {
            let Some(intent) = self.core.next(ctx) else {
                return Vec::new();
            };
            if let HighLevelAction::LateralMove { path } = &intent {
                let tainted = path.steps.iter().any(|s| match &s.means {
                    StepMeans::Credential(c) => self.burned.contains(c),
                    StepMeans::Exploit(_) => false,
                });
                if tainted {
                    continue;
                }
            }
            self.note_issue(&intent);
            return vec![intent];
        }
    }
}
