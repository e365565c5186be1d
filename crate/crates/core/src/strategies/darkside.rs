//! The smash-and-grab crew.
//!
//! This attacker works in recon rounds: escalate wherever possible, rescan
//! every subnet it knows, search every new machine, and throw every untried
//! infection step at the wall — whether or not the target looks taken.  Once
//! two consecutive rounds turn up nothing new, it declares the expansion
//! over and hauls out everything it has found, all at once.

use std::collections::{BTreeSet, VecDeque};

use crate::events::HighLevelEvent;
use crate::graph::{AttackPath, AttackStep, GraphNode};
use crate::ids::{HostId, Location, Privilege, SubnetId};
use crate::kb::{KnowledgeBase, SubnetFilter};
use crate::planner::HighLevelAction;
use crate::strategy::{AgentCtx, Strategy};

use super::dfs::ATTACKER_FEED;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Expand,
    Exfiltrate,
    Done,
}

#[derive(Debug)]
pub struct Darkside {
    phase: Phase,
    /// Remaining intents of the round in flight.
    round: VecDeque<HighLevelAction>,
    /// Steps already thrown, never repeated.
    tried: BTreeSet<String>,
    escalated: BTreeSet<HostId>,
    searched: BTreeSet<HostId>,
    /// Whether anything new has been observed since the round was built.
    news: bool,
    quiet_rounds: u8,
}

impl Default for Darkside {
    fn default() -> Self {
        Darkside {
            phase: Phase::Expand,
            round: VecDeque::new(),
            tried: BTreeSet::new(),
            escalated: BTreeSet::new(),
            searched: BTreeSet::new(),
            news: false,
            quiet_rounds: 0,
        }
    }
}

impl Darkside {
    fn origin_held(kb: &KnowledgeBase, from: &GraphNode) -> bool {
        match from {
            GraphNode::External => kb.entry == Location::External,
            GraphNode::State { host, privilege } => {
                kb.infected.get(host).is_some_and(|p| *p >= *privilege)
            }
        }
    }

    /// Assemble the next expansion round from current knowledge.
    fn build_round(&mut self, ctx: &AgentCtx<'_>) {
        let kb = ctx.kb;

        // Escalate first: root on a held box multiplies everything else.
        for (host, priv_) in &kb.infected {
            if *priv_ >= Privilege::Root || !self.escalated.insert(host.clone()) {
                continue;
            }
            let has_local_root = kb.hosts.get(host).is_some_and(|h| {
                h.vulnerabilities
                    .values()
                    .any(|v| !v.remote && v.grants == Privilege::Root)
            });
            if has_local_root {
                self.round
                    .push_back(HighLevelAction::EscalatePrivilege { host: host.clone() });
            } else {
                self.escalated.remove(host);
            }
        }

        // The recon ritual: sweep every known subnet, every round.
        let subnets: Vec<SubnetId> = kb
            .get_subnets(SubnetFilter::All)
            .into_iter()
            .map(|s| s.id.clone())
            .collect();
        for subnet in subnets {
            self.round
                .push_back(HighLevelAction::ScanNetwork { subnet });
        }

        // Search everything newly taken.
        for host in kb.infected.keys() {
            if self.searched.insert(host.clone()) {
                self.round
                    .push_back(HighLevelAction::DiscoverLocalInfo { host: host.clone() });
            }
        }

        // Then the wall of lateral moves: every untried step launchable from
        // held ground, in id order.
        let graph = ctx.graph();
        let moves: Vec<&AttackStep> = graph
            .steps()
            .filter(|s| Self::origin_held(kb, &s.from) && !self.tried.contains(&s.id))
            .collect();
        for step in moves {
            self.tried.insert(step.id.clone());
            self.round.push_back(HighLevelAction::LateralMove {
                path: AttackPath {
                    origin: step.from.clone(),
                    steps: vec![step.clone()],
                },
            });
        }
    }

    /// Every host still holding known, unexfiltrated data.
    fn loot_targets(kb: &KnowledgeBase) -> Vec<HostId> {
        let hosts: BTreeSet<HostId> = kb
            .assets
            .values()
            .filter(|a| !kb.exfiltrated.contains(&a.id))
            .map(|a| a.host.clone())
            .collect();
        hosts.into_iter().collect()
    }
}

impl Strategy for Darkside {
    fn name(&self) -> &'static str {
        "darkside"
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
        self.news = true;
        Vec::new()
    }

    fn on_tick(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        if let Some(intent) = self.round.pop_front() {
            return vec![intent];
        }
        match self.phase {
            Phase::Expand => {
                if self.news {
                    self.quiet_rounds = 0;
                } else {
                    self.quiet_rounds += 1;
                }
                self.news = false;
                if self.quiet_rounds >= 2 {
                    // The mission is complete; take everything.
                    self.phase = Phase::Exfiltrate;
                    for host in Self::loot_targets(ctx.kb) {
                        self.round
                            .push_back(HighLevelAction::ExfiltrateData { host });
                    }
                    if self.round.is_empty() {
                        self.phase = Phase::Done;
                    }
                } else {
                    self.build_round(ctx);
                }
                self.round.pop_front().into_iter().collect()
            }
            Phase::Exfiltrate => {
                self.phase = Phase::Done;
                Vec::new()
            }
            Phase::Done => Vec::new(),
        }
    }
}
