//! Intelligence-led lateral movement.
//!
//! The targeted attacker arrives with a shopping list: hosts it believes are
//! high-value.  While any of them remain untaken it beelines along the
//! shortest known attack path to one, stealing whatever it happens to find
//! along the way.  With no list — or once the list is exhausted — it
//! degenerates to plain depth-first exploration.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::events::HighLevelEvent;
use crate::graph::{AttackPath, AttackStep, GraphNode};
use crate::ids::HostId;
use crate::planner::HighLevelAction;
use crate::strategy::{AgentCtx, Strategy};

use super::dfs::{DfsCore, ATTACKER_FEED};

#[derive(Debug)]
pub struct Targeted {
    core: DfsCore,
    booted: bool,
    prior: BTreeSet<HostId>,
}

impl Targeted {
    pub fn new(prior: Vec<HostId>) -> Self {
        Targeted {
            core: DfsCore::default(),
            booted: false,
            prior: prior.into_iter().collect(),
        }
    }

    /// Shortest path from any held state to a not-yet-taken priority host:
    /// breadth-first over the attack graph, deterministic tie-break by step
    /// id order.
    fn path_to_priority(&self, ctx: &AgentCtx<'_>) -> Option<HighLevelAction> {
        let graph = ctx.graph();
        let wanted: BTreeSet<&HostId> = self
            .prior
            .iter()
            .filter(|h| !ctx.kb.infected.contains_key(*h))
            .collect();
        if wanted.is_empty() {
            return None;
        }

        let mut parent: BTreeMap<GraphNode, AttackStep> = BTreeMap::new();
        let mut seen: BTreeSet<GraphNode> = graph.frontier().iter().cloned().collect();
        let mut queue: VecDeque<GraphNode> = seen.iter().cloned().collect();

        while let Some(node) = queue.pop_front() {
            for step in graph.outgoing(&node) {
                let to = step.to_node();
                if !seen.insert(to.clone()) {
                    continue;
                }
                parent.insert(to.clone(), step.clone());
                if wanted.contains(&step.to_host) {
                    // Walk back to the held origin.
                    let mut steps = Vec::new();
                    let mut at = to;
                    while let Some(s) = parent.get(&at) {
                        steps.push(s.clone());
                        at = s.from.clone();
                    }
                    steps.reverse();
                    return Some(HighLevelAction::LateralMove {
                        path: AttackPath { origin: at, steps },
                    });
                }
                queue.push_back(to);
            }
        }
        None
    }
}

impl Strategy for Targeted {
    fn name(&self) -> &'static str {
        "targeted"
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
        if self.prior.is_empty() {
            // No intelligence: explore exactly like the depth-first attacker.
            return self.core.next(ctx).into_iter().collect();
        }
        let intent = self
            .core
            .pop_agenda()
            .or_else(|| self.core.pop_loot())
            .or_else(|| self.path_to_priority(ctx))
            .or_else(|| self.core.next_move(ctx));
        intent.into_iter().collect()
    }
}
