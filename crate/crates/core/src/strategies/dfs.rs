//! Depth-first lateral movement.
//!
//! The attacker keeps a stack of attack-graph steps.  Whenever a host falls
//! it is searched immediately, anything the search revealed lands on top of
//! the stack, and the walk continues from there — classic depth-first order.
//! Exfiltration is deliberately the lowest priority: loot runs start once no
//! move is available, after the map has been walked.

use std::collections::{BTreeSet, VecDeque};

use crate::events::{HighLevelEvent, HighLevelEventKind};
use crate::graph::{AttackPath, AttackStep, GraphNode};
use crate::ids::{HostId, Location, Privilege, SubnetId};
use crate::kb::{KnowledgeBase, SubnetFilter};
use crate::planner::HighLevelAction;
use crate::strategy::{AgentCtx, Strategy};

/// Event kinds every built-in attacker listens to: everything its own
/// sensors can produce.
pub(crate) const ATTACKER_FEED: &[&str] = &[
    "found-subnet",
    "found-host",
    "found-network-services",
    "found-credential",
    "data-found",
    "exfiltrated-data",
    "infected-new-host",
    "got-root-access",
    "lost-access",
];

/// Shared depth-first bookkeeping, reused by the strategies that are "DFS
/// plus a twist" (targeted priorities, persistence).
#[derive(Debug, Default)]
pub(crate) struct DfsCore {
    /// Pending moves, newest batch on top.  Entries whose origin is not yet
    /// held are skipped in place until they become actionable.
    stack: Vec<String>,
    /// Every step id ever pushed; nothing is pushed twice.
    pushed: BTreeSet<String>,
    /// Recon to run before any further move: searches and scans, newest
    /// first, so a fresh foothold is explored before older leads.
    agenda: VecDeque<HighLevelAction>,
    /// Hosts with data worth stealing, drained only when no move is left.
    loot: VecDeque<HostId>,
    scanned: BTreeSet<SubnetId>,
    searched: BTreeSet<HostId>,
    loot_queued: BTreeSet<HostId>,
}

impl DfsCore {
    /// Queue a scan of every subnet already on the map.
    pub(crate) fn bootstrap(&mut self, kb: &KnowledgeBase) {
        for subnet in kb.get_subnets(SubnetFilter::All) {
            if self.scanned.insert(subnet.id.clone()) {
                self.agenda.push_back(HighLevelAction::ScanNetwork {
                    subnet: subnet.id.clone(),
                });
            }
        }
    }

    /// Stack newly enabled moves so they pop in (path length, id) order.
    pub(crate) fn ingest(&mut self, new_steps: &[AttackStep]) {
        let mut batch: Vec<&AttackStep> = new_steps
            .iter()
            .filter(|s| self.pushed.insert(s.id.clone()))
            .collect();
        batch.sort_by(|a, b| a.id.cmp(&b.id));
        for step in batch.into_iter().rev() {
            self.stack.push(step.id.clone());
        }
    }

    /// Fold one observation into the agenda.
    pub(crate) fn react(&mut self, event: &HighLevelEvent) {
        match &event.kind {
            HighLevelEventKind::InfectedNewHost { host, .. } => {
                if self.searched.insert(host.clone()) {
                    self.agenda
                        .push_front(HighLevelAction::DiscoverLocalInfo { host: host.clone() });
                }
            }
            HighLevelEventKind::FoundSubnet { subnet } => {
                if self.scanned.insert(subnet.clone()) {
                    self.agenda.push_front(HighLevelAction::ScanNetwork {
                        subnet: subnet.clone(),
                    });
                }
            }
            HighLevelEventKind::DataFound { host, .. } => {
                if self.loot_queued.insert(host.clone()) {
                    self.loot.push_back(host.clone());
                }
            }
            _ => {}
        }
    }

    /// Is this graph state already held?
    fn attained(kb: &KnowledgeBase, host: &HostId, privilege: Privilege) -> bool {
        kb.infected.get(host).is_some_and(|p| *p >= privilege)
    }

    /// Can a move from this node be launched right now?
    fn origin_held(kb: &KnowledgeBase, from: &GraphNode) -> bool {
        match from {
            GraphNode::External => kb.entry == Location::External,
            GraphNode::State { host, privilege } => Self::attained(kb, host, *privilege),
        }
    }

    /// Pop the best actionable move off the stack, if any.  Stale entries
    /// (gone from the graph) and already-attained targets are dropped;
    /// moves whose origin is not held stay put for later.
    pub(crate) fn next_move(&mut self, ctx: &AgentCtx<'_>) -> Option<HighLevelAction> {
        let graph = ctx.graph();
        let mut idx = self.stack.len();
        while idx > 0 {
            idx -= 1;
            let Some(step) = graph.step(&self.stack[idx]) else {
                self.stack.remove(idx);
                continue;
            };
            if Self::attained(ctx.kb, &step.to_host, step.to_privilege) {
                self.stack.remove(idx);
                continue;
            }
            if !Self::origin_held(ctx.kb, &step.from) {
                continue;
            }
            let path = AttackPath {
                origin: step.from.clone(),
                steps: vec![step.clone()],
            };
            self.stack.remove(idx);
            return Some(HighLevelAction::LateralMove { path });
        }
        None
    }

    /// Next queued recon intent, if any.
    pub(crate) fn pop_agenda(&mut self) -> Option<HighLevelAction> {
        self.agenda.pop_front()
    }

    /// Next host to rob, if any.  A later find on the same host queues it
    /// again.
    pub(crate) fn pop_loot(&mut self) -> Option<HighLevelAction> {
        let host = self.loot.pop_front()?;
        self.loot_queued.remove(&host);
        Some(HighLevelAction::ExfiltrateData { host })
    }

    /// Full priority order: recon, then movement, then loot.
    pub(crate) fn next(&mut self, ctx: &AgentCtx<'_>) -> Option<HighLevelAction> {
        if let Some(intent) = self.pop_agenda() {
            return Some(intent);
        }
        if let Some(mv) = self.next_move(ctx) {
            return Some(mv);
        }
        self.pop_loot()
    }
}

/// The plain depth-first attacker.
#[derive(Debug, Default)]
pub struct Dfs {
    core: DfsCore,
    booted: bool,
}

impl Strategy for Dfs {
    fn name(&self) -> &'static str {
        "dfs"
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
        _ctx: &mut AgentCtx<'_>,
    ) -> Vec<HighLevelAction> {
        self.core.ingest(new_steps);
        self.core.react(event);
        Vec::new()
    }

    fn on_tick(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        self.core.next(ctx).into_iter().collect()
    }
}
