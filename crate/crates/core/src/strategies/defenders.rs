//! The built-in defender playbook, from "do nothing" to an event-driven
//! restore loop.
//!
//! All deployment happens before the clock starts, in staged batches: decoy
//! hosts first, then the resources that reference them (credentials, bait
//! files).  The driver applies each batch before asking for the next, so a
//! later stage can look decoys up in the registry.

use std::collections::BTreeSet;

use rand::Rng;

use crate::events::{HighLevelEvent, HighLevelEventKind};
use crate::graph::AttackStep;
use crate::ids::{HostId, Location, SubnetId};
use crate::kb::{KnowledgeBase, SubnetFilter};
use crate::planner::{CapabilityBudget, HighLevelAction};
use crate::strategy::{AgentCtx, Strategy};

/// Baseline: no deception, no reactions.
#[derive(Debug, Default)]
pub struct NullDefender;

impl Strategy for NullDefender {
    fn name(&self) -> &'static str {
        "none"
    }
}

/// Deploy `count` decoy hosts, one per intent, each on an independently
/// chosen random subnet (or always on `pin` when given).
fn decoy_host_batch(
    count: u32,
    pin: Option<&SubnetId>,
    ctx: &mut AgentCtx<'_>,
) -> Vec<HighLevelAction> {
    let subnets: Vec<SubnetId> = ctx
        .kb
        .get_subnets(SubnetFilter::All)
        .into_iter()
        .map(|s| s.id.clone())
        .collect();
    if subnets.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let subnet = match pin {
                Some(s) => s.clone(),
                None => subnets[ctx.rng.gen_range(0..subnets.len())].clone(),
            };
            HighLevelAction::DeployDecoyHost {
                subnet: Some(subnet),
            }
        })
        .collect()
}

/// Plant `count` decoy credentials on random real hosts, each pointing at a
/// random decoy host.  `valid` decides whether the bait actually works.
fn decoy_credential_batch(count: u32, valid: bool, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
    let registry = ctx
        .kb
        .registry()
        .expect("defender knowledge carries the decoy registry");
    let real: Vec<HostId> = ctx
        .kb
        .hosts
        .keys()
        .filter(|h| !registry.hosts.contains_key(*h))
        .cloned()
        .collect();
    if real.is_empty() || registry.hosts.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for _ in 0..count {
        let on = real[ctx.rng.gen_range(0..real.len())].clone();
        let target = ctx
            .kb
            .get_random_decoy_host(ctx.rng)
            .expect("at least one decoy host exists");
        out.push(HighLevelAction::DeployDecoyCredential { on, target, valid });
    }
    out
}

/// One bait file on every decoy host.
fn bait_data_batch(ctx: &AgentCtx<'_>) -> Vec<HighLevelAction> {
    let registry = ctx
        .kb
        .registry()
        .expect("defender knowledge carries the decoy registry");
    registry
        .hosts
        .keys()
        .map(|h| HighLevelAction::DeployDecoyData { on: h.clone() })
        .collect()
}

/// Decoy hosts scattered uniformly; nothing else.
#[derive(Debug)]
pub struct BasicDecoys {
    budget: CapabilityBudget,
    stage: u8,
}

impl BasicDecoys {
    pub fn new(budget: CapabilityBudget) -> Self {
        BasicDecoys { budget, stage: 0 }
    }
}

impl Strategy for BasicDecoys {
    fn name(&self) -> &'static str {
        "basic"
    }

    fn on_init(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        self.stage += 1;
        match self.stage {
            1 => decoy_host_batch(self.budget.decoy_hosts, None, ctx),
            _ => Vec::new(),
        }
    }
}

/// Decoy hosts plus fake credentials that lead nowhere: the lure fails when
/// tried, which slows an attacker without ever granting access.
#[derive(Debug)]
pub struct MixedDeception {
    budget: CapabilityBudget,
    stage: u8,
}

impl MixedDeception {
    pub fn new(budget: CapabilityBudget) -> Self {
        MixedDeception { budget, stage: 0 }
    }
}

impl Strategy for MixedDeception {
    fn name(&self) -> &'static str {
        "mixed"
    }

    fn on_init(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        self.stage += 1;
        match self.stage {
            1 => decoy_host_batch(self.budget.decoy_hosts, None, ctx),
            2 => decoy_credential_batch(self.budget.decoy_credentials, false, ctx),
            _ => Vec::new(),
        }
    }
}

/// The full static layer: decoy hosts, working credentials that lead onto
/// them, and bait data waiting on each one.
#[derive(Debug)]
pub struct LayeredDeception {
    budget: CapabilityBudget,
    stage: u8,
    /// Pin every decoy host to this subnet instead of scattering.
    concentrate: Option<SubnetId>,
}

impl LayeredDeception {
    pub fn new(budget: CapabilityBudget) -> Self {
        LayeredDeception {
            budget,
            stage: 0,
            concentrate: None,
        }
    }

    fn concentrated(budget: CapabilityBudget, subnet: SubnetId) -> Self {
        LayeredDeception {
            budget,
            stage: 0,
            concentrate: Some(subnet),
        }
    }
}

impl Strategy for LayeredDeception {
    fn name(&self) -> &'static str {
        "layered"
    }

    fn on_init(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        self.stage += 1;
        match self.stage {
            1 => decoy_host_batch(self.budget.decoy_hosts, self.concentrate.as_ref(), ctx),
            2 => {
                let mut batch = decoy_credential_batch(self.budget.decoy_credentials, true, ctx);
                batch.extend(bait_data_batch(ctx));
                batch
            }
            _ => Vec::new(),
        }
    }
}

/// Layered deployment minus the bait files, plus a reflex: any host caught
/// talking to a decoy is rolled back, along with the decoy itself.
#[derive(Debug)]
pub struct SimpleStateful {
    budget: CapabilityBudget,
    stage: u8,
    /// Hosts with a restore already queued; cleared once the pipeline drains.
    pending: BTreeSet<HostId>,
}

impl SimpleStateful {
    pub fn new(budget: CapabilityBudget) -> Self {
        SimpleStateful {
            budget,
            stage: 0,
            pending: BTreeSet::new(),
        }
    }
}

impl Strategy for SimpleStateful {
    fn name(&self) -> &'static str {
        "simple-stateful"
    }

    fn subscriptions(&self) -> Vec<&'static str> {
        vec!["decoy-host-interaction"]
    }

    fn on_init(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        self.stage += 1;
        match self.stage {
            1 => decoy_host_batch(self.budget.decoy_hosts, None, ctx),
            2 => decoy_credential_batch(self.budget.decoy_credentials, true, ctx),
            _ => Vec::new(),
        }
    }

    fn on_event(
        &mut self,
        event: &HighLevelEvent,
        _new_steps: &[AttackStep],
        _ctx: &mut AgentCtx<'_>,
    ) -> Vec<HighLevelAction> {
        let HighLevelEventKind::DecoyHostInteraction { source, target } = &event.kind else {
            return Vec::new();
        };
        let mut out = Vec::new();
        if let Location::Host(h) = source {
            if self.pending.insert(h.clone()) {
                out.push(HighLevelAction::RestoreHost { host: h.clone() });
            }
        }
        if self.pending.insert(target.clone()) {
            out.push(HighLevelAction::RestoreHost {
                host: target.clone(),
            });
        }
        out
    }

    fn on_tick(&mut self, _ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        // Idle means every queued restore has finished; new contacts may
        // queue those hosts again.
        self.pending.clear();
        Vec::new()
    }
}

/// Layered deception plus an information campaign: the decoys are publicly
/// advertised as the network's crown jewels, poisoning any attacker that
/// shops for intelligence before breaking in.
#[derive(Debug)]
pub struct Misinformation {
    inner: LayeredDeception,
}

impl Misinformation {
    pub fn new(budget: CapabilityBudget) -> Self {
        Misinformation {
            inner: LayeredDeception::new(budget),
        }
    }
}

impl Strategy for Misinformation {
    fn name(&self) -> &'static str {
        "misinformation"
    }

    fn on_init(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        self.inner.on_init(ctx)
    }

    fn advertised_high_value(&self, kb: &KnowledgeBase) -> Option<Vec<HostId>> {
        let registry = kb.registry().ok()?;
        Some(registry.hosts.keys().cloned().collect())
    }
}

/// Misinformation with every decoy packed into one designated subnet — the
/// zone the defender most expects the attacker to covet.
#[derive(Debug)]
pub struct OtFlood {
    inner: LayeredDeception,
}

impl OtFlood {
    pub fn new(budget: CapabilityBudget, subnet: SubnetId) -> Self {
        OtFlood {
            inner: LayeredDeception::concentrated(budget, subnet),
        }
    }
}

impl Strategy for OtFlood {
    fn name(&self) -> &'static str {
        "ot-flood"
    }

    fn on_init(&mut self, ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        self.inner.on_init(ctx)
    }

    fn advertised_high_value(&self, kb: &KnowledgeBase) -> Option<Vec<HostId>> {
        let registry = kb.registry().ok()?;
        Some(registry.hosts.keys().cloned().collect())
    }
}
