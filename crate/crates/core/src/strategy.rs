//! The agent programming contract.
//!
//! A strategy is a small state machine that never touches the simulated
//! network directly.  It reads the world through its own [`KnowledgeBase`]
//! and (for attackers) the [`AttackGraph`] derived from it, and it acts by
//! returning [`HighLevelAction`]s that the intent planner compiles into
//! concrete operations.  The same strategy code therefore runs unchanged on
//! every environment.

use rand_chacha::ChaCha8Rng;

use crate::events::HighLevelEvent;
use crate::graph::{AttackGraph, AttackStep};
use crate::ids::{HostId, Tick};
use crate::kb::KnowledgeBase;
use crate::planner::HighLevelAction;

/// Read-only view of the world a strategy may consult, plus its private
/// random stream.  Defenders get no attack graph; attackers always do.
pub struct AgentCtx<'a> {
    pub kb: &'a KnowledgeBase,
    pub graph: Option<&'a AttackGraph>,
    pub rng: &'a mut ChaCha8Rng,
    pub now: Tick,
    pub horizon: Tick,
}

impl AgentCtx<'_> {
    /// The attack graph, for strategies that require one.
    pub fn graph(&self) -> &AttackGraph {
        self.graph
            .expect("this strategy runs as an attacker and always has a graph")
    }
}

/// One agent brain.  The driver calls the hooks in a fixed pattern:
///
/// 1. `on_init` repeatedly before the clock starts, until it returns no
///    intents.  Each batch is planned and applied before the next call, so
///    later batches can reference resources the earlier ones created.
/// 2. `on_event` for every subscribed high-level event, as it is delivered.
/// 3. `on_tick` once per tick while the agent's action pipeline is idle.
///
/// All three return intents to issue; an empty vector means "nothing to do".
pub trait Strategy {
    /// Stable human-readable identifier, used in logs and reports.
    fn name(&self) -> &'static str;

    /// High-level event kinds to deliver to `on_event`.
    fn subscriptions(&self) -> Vec<&'static str> {
        Vec::new()
    }

    /// Pre-game setup, called until it returns an empty batch.
    fn on_init(&mut self, _ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        Vec::new()
    }

    /// React to one delivered event.  `new_steps` lists the attack-graph
    /// steps that this event's knowledge enabled (empty for defenders).
    fn on_event(
        &mut self,
        _event: &HighLevelEvent,
        _new_steps: &[AttackStep],
        _ctx: &mut AgentCtx<'_>,
    ) -> Vec<HighLevelAction> {
        Vec::new()
    }

    /// Decide the next move while idle.
    fn on_tick(&mut self, _ctx: &mut AgentCtx<'_>) -> Vec<HighLevelAction> {
        Vec::new()
    }

    /// Hosts this agent publicly advertises as high-value, if it runs an
    /// information campaign.  Consumed as the targeted attacker's prior.
    fn advertised_high_value(&self, _kb: &KnowledgeBase) -> Option<Vec<HostId>> {
        None
    }
}
