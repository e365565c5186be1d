//! A re-enactment of the 2017 credit-bureau breach pattern.
//!
//! Three phases, strictly in order: break in through whatever exposed
//! services fall to a remote exploit; then harvest credentials from every
//! held machine and log in wherever they lead; finally carry out all the
//! data found along the way.  The machine is written against counts, not
//! names, so it runs on any environment — including ones where it never
//! gets past the front door.

use std::collections::BTreeSet;

use crate::events::HighLevelEvent;
use crate::graph::{AttackPath, AttackStep, GraphNode, StepMeans};
use crate::ids::{HostId, Location, SubnetId};
use crate::kb::{KnowledgeBase, SubnetFilter};
use crate::planner::HighLevelAction;
use crate::strategy::{AgentCtx, Strategy};

use super::dfs::ATTACKER_FEED;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    InitialAccess,
    LookAndUseCredentials,
    ExfiltrateData,
    Done,
}

#[derive(Debug)]
pub struct EquifaxReplica {
    phase: Phase,
    scanned: BTreeSet<SubnetId>,
    searched: BTreeSet<HostId>,
    tried: BTreeSet<String>,
    robbed: BTreeSet<HostId>,
}

impl Default for EquifaxReplica {
    fn default() -> Self {
        EquifaxReplica {
            phase: Phase::InitialAccess,
            scanned: BTreeSet::new(),
            searched: BTreeSet::new(),
            tried: BTreeSet::new(),
            robbed: BTreeSet::new(),
        }
    }
}

impl EquifaxReplica {
    fn origin_held(kb: &KnowledgeBase, from: &GraphNode) -> bool {
        match from {
            GraphNode::External => kb.entry == Location::External,
            GraphNode::State { host, privilege } => {
                kb.infected.get(host).is_some_and(|p| *p >= *privilege)
            }
        }
    }

    fn attained(kb: &KnowledgeBase, step: &AttackStep) -> bool {
        kb.infected
            .get(&step.to_host)
            .is_some_and(|p| *p >= step.to_privilege)
    }

    /// First untried, launchable step of the given kind.
    fn next_step(&mut self, ctx: &AgentCtx<'_>, want_exploit: bool) -> Option<HighLevelAction> {
        let graph = ctx.graph();
        let step = graph.steps().find(|s| {
            let kind_ok = match s.means {
                StepMeans::Exploit(_) => want_exploit,
                StepMeans::Credential(_) => !want_exploit,
            };
            kind_ok
                && !self.tried.contains(&s.id)
                && Self::origin_held(ctx.kb, &s.from)
                && !Self::attained(ctx.kb, s)
        })?;
        self.tried.insert(step.id.clone());
        Some(HighLevelAction::LateralMove {
            path: AttackPath {
                origin: step.from.clone(),
                steps: vec![step.clone()],
            },
        })
    }

    fn next_scan(&mut self, kb: &KnowledgeBase) -> Option<HighLevelAction> {
        let subnet = kb
            .get_subnets(SubnetFilter::All)
            .into_iter()
            .find(|s| !self.scanned.contains(&s.id))?
            .id
            .clone();
        self.scanned.insert(subnet.clone());
        Some(HighLevelAction::ScanNetwork { subnet })
    }

    fn next_search(&mut self, kb: &KnowledgeBase) -> Option<HighLevelAction> {
        let host = kb
            .infected
            .keys()
            .find(|h| !self.searched.contains(*h))?
            .clone();
        self.searched.insert(host.clone());
        Some(HighLevelAction::DiscoverLocalInfo { host })
    }

    fn next_heist(&mut self, kb: &KnowledgeBase) -> Option<HighLevelAction> {
        let host = kb
            .assets
            .values()
            .filter(|a| !kb.exfiltrated.contains(&a.id))
            .map(|a| a.host.clone())
            .find(|h| !self.robbed.contains(h))?;
        self.robbed.insert(host.clone());
        Some(HighLevelAction::ExfiltrateData { host })
    }
}

impl Strategy for EquifaxReplica {
    fn name(&self) -> &'static str {
        "equifax-replica"
    }

    fn subscriptions(&self) -> Vec<&'static str> {
        ATTACKER_FEED.to_vec()
    }

    fn on_event(
        &mut self,
        _event: &HighLevelEvent,
        _new_steps: &[AttackStep],
        _ctx: &mut AgentCtx<'_>,
    ) -> Vec<HighLevelAction> {
        Vec::new()
    }

    fn on_tick(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        loop {
            match self.phase {
                Phase::InitialAccess => {
                    if let Some(intent) = self.next_scan(ctx.kb) {
                        return vec![intent];
                    }
                    if let Some(intent) = self.next_step(ctx, true) {
                        return vec![intent];
                    }
                    if ctx.kb.infected.is_empty() {
                        // Nothing fell: the campaign stalls at the door.
                        return Vec::new();
                    }
                    self.phase = Phase::LookAndUseCredentials;
                }
                Phase::LookAndUseCredentials => {
                    if let Some(intent) = self.next_search(ctx.kb) {
                        return vec![intent];
                    }
                    if let Some(intent) = self.next_step(ctx, false) {
                        return vec![intent];
                    }
                    self.phase = Phase::ExfiltrateData;
                }
                Phase::ExfiltrateData => {
                    if let Some(intent) = self.next_heist(ctx.kb) {
                        return vec![intent];
                    }
                    self.phase = Phase::Done;
                }
                Phase::Done => return Vec::new(),
            }
        }
    }
}
