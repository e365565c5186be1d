//! The simulation driver: wires kernel, telemetry, knowledge bases, attack
//! graph, planners, and the two agent strategies into one deterministic run.
//!
//! One run proceeds in two phases.  Initialization (tick 0): the defender
//! deploys its deception, the attacker receives its prior knowledge and its
//! entry foothold, and both strategies get their setup hooks.  Then the
//! clock starts, and every tick follows the same fixed order: finish due
//! actions, translate and deliver the resulting observations, let idle
//! agents decide their next move, start queued actions, score the goal.
//! All scheduling containers are ordered and all randomness flows from two
//! per-agent streams derived from the run seed, so a (scenario, seed) pair
//! fully determines the log.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Environment, GoalKind, Violation};
use crate::eventlog::{
    environment_digest, ActionRecord, EndRecord, EventLog, Header, Record, SCHEMA_VERSION,
};
use crate::events::{HighLevelEvent, HighLevelEventKind, LowLevelEvent};
use crate::graph::AttackGraph;
use crate::ids::{stable_fingerprint, Agent, AssetId, HostId, Location, Privilege, Tick};
use crate::kb::{known_host_from_env, KnowledgeBase};
use crate::kernel::{
    ActionKind, DeployPayload, DurationTable, Kernel, LowLevelAction, StartedAction,
};
use crate::planner::{BudgetUsed, CapabilityBudget, HighLevelAction, Planner};
use crate::strategy::{AgentCtx, Strategy};
use crate::telemetry::{translate, SensorCtx, TelemetryBus, TelemetryMode};

/// Ticks of total inactivity (nothing in flight, nothing queued) tolerated
/// before a run is declared over.  A few grace ticks let strategies with
/// internal patience counters wake up and switch phases.
const QUIESCENT_PATIENCE: Tick = 8;

/// Hard cap on initialization rounds, against strategies whose setup never
/// settles.
const MAX_INIT_BATCHES: usize = 1000;

/// Builds the attacker once its prior knowledge is known.  The prior is the
/// list of hosts the attacker believes are worth going after; strategies
/// that don't use one simply ignore it.
pub type AttackerFactory = Box<dyn FnOnce(Vec<HostId>) -> Box<dyn Strategy>>;

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub scenario: String,
    pub seed: u64,
    /// Run length in ticks; defaults to the environment's goal time limit.
    pub horizon: Option<Tick>,
    pub telemetry_mode: TelemetryMode,
    pub durations: DurationTable,
    /// Explicit attacker prior.  When absent, the prior is what the
    /// defender advertises, or failing that the true goal targets.
    pub attacker_prior: Option<Vec<HostId>>,
}

impl RunSettings {
    pub fn new(scenario: impl Into<String>, seed: u64) -> Self {
        RunSettings {
            scenario: scenario.into(),
            seed,
            horizon: None,
            telemetry_mode: TelemetryMode::FineGrained,
            durations: DurationTable::default(),
            attacker_prior: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("environment failed validation: {0:?}")]
    InvalidEnvironment(Vec<Violation>),
    #[error("attacker prior references unknown host `{0}`")]
    UnknownPriorHost(HostId),
    #[error("strategy subscribes to unknown event kind `{0}`")]
    BadSubscription(String),
}

/// How a run ended.
pub const END_GOAL_MET: &str = "goal-met";
pub const END_HORIZON: &str = "horizon";
pub const END_QUIESCENT: &str = "quiescent";

/// One simulation, ready to run.
pub struct Simulation {
    kernel: Kernel,
    bus: TelemetryBus,
    defender_kb: KnowledgeBase,
    attacker_kb: KnowledgeBase,
    graph: AttackGraph,
    defender: Box<dyn Strategy>,
    attacker: Box<dyn Strategy>,
    defender_rng: ChaCha8Rng,
    attacker_rng: ChaCha8Rng,
    defender_planner: Planner,
    attacker_planner: Planner,
    log: EventLog,
    horizon: Tick,
    /// Hosts the attacker has held at any point; the infection goal counts
    /// ever-held ground even if the defender later evicts the implant.
    ever_infected: BTreeSet<HostId>,
    goal_tick: Option<Tick>,
}

impl Simulation {
    /// Assemble a run: validate the environment, set up both agents, apply
    /// the defender's deception, seed the attacker's prior and entry
    /// foothold, and run both setup hooks.  After this the first call to
    /// [`Simulation::run`] starts the clock at tick 1.
    pub fn new(
        env: Environment,
        mut defender: Box<dyn Strategy>,
        attacker: AttackerFactory,
        defender_budget: CapabilityBudget,
        settings: RunSettings,
    ) -> Result<Simulation, SetupError> {
        let horizon = settings.horizon.unwrap_or(env.goals.time_limit);
        let digest = environment_digest(&env);
        let (goal_kind, goal_assets, goal_hosts) = match &env.goals.kind {
            GoalKind::ExfiltrateAssets { assets } => {
                ("exfiltrate-assets", assets.clone(), Vec::new())
            }
            GoalKind::InfectHosts { hosts } => ("infect-hosts", Vec::new(), hosts.clone()),
        };
        let critical_assets: Vec<AssetId> = env
            .assets
            .values()
            .filter(|a| a.critical && !a.is_decoy)
            .map(|a| a.id.clone())
            .collect();
        let entry = match &env.attacker_entry {
            crate::env::AttackerEntry::ExternalScan => Location::External,
            crate::env::AttackerEntry::FootholdOnHost { host } => Location::Host(host.clone()),
        };
        let header = Header {
            schema_version: SCHEMA_VERSION,
            scenario: settings.scenario.clone(),
            seed: settings.seed,
            env_digest: digest,
            horizon,
            telemetry_mode: settings.telemetry_mode,
            goal_kind: goal_kind.to_string(),
            goal_assets,
            goal_hosts,
            critical_assets,
            entry: entry.clone(),
        };

        let mut defender_kb = KnowledgeBase::for_defender(&env);
        let mut defender_rng = agent_rng(Agent::Defender, settings.seed);
        let mut defender_planner = Planner::new(Agent::Defender, defender_budget);
        let mut bus = TelemetryBus::new(settings.telemetry_mode);
        let mut log = EventLog::new(header);
        let mut kernel = Kernel::new(env, settings.seed, horizon, settings.durations.clone())
            .map_err(SetupError::InvalidEnvironment)?;

        // Defender setup: subscriptions, then deception, in as many batches
        // as the strategy needs.  Deploys apply instantly before the clock
        // starts and fold straight into the defender's books, so a later
        // batch can reference what an earlier one created.
        for kind in defender.subscriptions() {
            bus.subscribe(Agent::Defender, kind)
                .map_err(|_| SetupError::BadSubscription(kind.to_string()))?;
        }
        for _ in 0..MAX_INIT_BATCHES {
            let batch = {
                let mut ctx = AgentCtx {
                    kb: &defender_kb,
                    graph: None,
                    rng: &mut defender_rng,
                    now: 0,
                    horizon,
                };
                defender.on_init(&mut ctx)
            };
            if batch.is_empty() {
                break;
            }
            for intent in batch {
                let actions =
                    match defender_planner.plan(&intent, &defender_kb, &mut defender_rng) {
                        Ok(actions) => actions,
                        Err(_) => continue,
                    };
                for action in actions {
                    match action.kind {
                        ActionKind::Deploy { .. } | ActionKind::Noop => {
                            kernel.apply_at_init(action);
                        }
                        _ => {
                            let _ = kernel.enqueue(action);
                        }
                    }
                }
            }
            for payload in kernel.take_applied_deploys() {
                absorb_deploy(&mut defender_kb, kernel.env(), &payload);
            }
        }

        // The attacker's prior: explicit override, else whatever the
        // defender chose to advertise, else the true goal targets.
        let prior = match settings.attacker_prior {
            Some(hosts) => hosts,
            None => match defender.advertised_high_value(&defender_kb) {
                Some(hosts) => hosts,
                None => true_prior(kernel.env()),
            },
        };
        let prior: Vec<HostId> = prior
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut attacker_kb = KnowledgeBase::for_attacker(kernel.env());
        let attacker = attacker(prior.clone());
        for kind in attacker.subscriptions() {
            bus.subscribe(Agent::Attacker, kind)
                .map_err(|_| SetupError::BadSubscription(kind.to_string()))?;
        }
        bus.seal();

        // Seed the prior as plain sightings: host and subnet become known,
        // nothing else.  The attacker still has to find a way in.
        for host in &prior {
            let Some(h) = kernel.env().host(host) else {
                return Err(SetupError::UnknownPriorHost(host.clone()));
            };
            let subnet = h.subnet.clone();
            let seq = kernel.alloc_seq();
            let sighting = HighLevelEvent {
                seq,
                tick: 0,
                audience: Agent::Attacker,
                kind: HighLevelEventKind::FoundHost {
                    host: host.clone(),
                    subnet,
                },
                provenance: Vec::new(),
            };
            attacker_kb.record_observation(&sighting);
            log.push_high(sighting);
        }
        let graph = AttackGraph::build(&attacker_kb);

        let mut sim = Simulation {
            kernel,
            bus,
            defender_kb,
            attacker_kb,
            graph,
            defender,
            attacker,
            defender_rng,
            attacker_rng: agent_rng(Agent::Attacker, settings.seed),
            defender_planner,
            attacker_planner: Planner::new(Agent::Attacker, CapabilityBudget::default()),
            log,
            horizon,
            ever_infected: BTreeSet::new(),
            goal_tick: None,
        };

        // Entry foothold: a user-level implant on the designated host,
        // delivered through the normal sensor pipeline so the attacker's
        // own strategy sees the infection like any other.
        if let Location::Host(host) = entry {
            let events = sim.kernel.apply_at_init(LowLevelAction {
                actor: Agent::Attacker,
                source: Location::Host(host.clone()),
                kind: ActionKind::InstallImplant {
                    host,
                    privilege: Privilege::User,
                },
            });
            for low in events {
                sim.process_low_event(low, 0);
            }
        }

        // Attacker setup hook, after the foothold exists so init-time plans
        // have a vantage point.
        for _ in 0..MAX_INIT_BATCHES {
            let batch = {
                let mut ctx = AgentCtx {
                    kb: &sim.attacker_kb,
                    graph: Some(&sim.graph),
                    rng: &mut sim.attacker_rng,
                    now: 0,
                    horizon,
                };
                sim.attacker.on_init(&mut ctx)
            };
            if batch.is_empty() {
                break;
            }
            for intent in batch {
                sim.plan_and_enqueue(Agent::Attacker, &intent);
            }
        }

        Ok(sim)
    }

    /// Drive the run to its end and return the full log plus its report.
    pub fn run(mut self) -> (EventLog, RunReport) {
        let mut end_reason = END_HORIZON;
        let mut end_tick = self.horizon;
        let mut quiet: Tick = 0;

        for t in 1..=self.horizon {
            self.kernel.begin_tick(t);
            let completed = self.kernel.complete_due();
            for low in completed {
                self.process_low_event(low, t);
            }
            self.absorb_applied_deploys();
            // Actions chained back-to-back inside the completion pass
            // started at this tick; put them on the record before anything
            // else happens.
            for started in self.kernel.take_started_actions() {
                self.record_action(started);
            }

            // The run ends the moment the goal is met — before idle agents
            // get another word in, so a finished log carries no trailing
            // intents.
            if self.goal_tick.is_none() && self.goal_met() {
                self.goal_tick = Some(t);
                end_reason = END_GOAL_MET;
                end_tick = t;
                break;
            }

            for agent in [Agent::Defender, Agent::Attacker] {
                if !self.kernel.idle(agent) {
                    continue;
                }
                let intents = self.call_on_tick(agent, t);
                for intent in intents {
                    self.plan_and_enqueue(agent, &intent);
                }
            }

            self.kernel.start_pending();
            for started in self.kernel.take_started_actions() {
                self.record_action(started);
            }

            if self.kernel.has_work() {
                quiet = 0;
            } else {
                quiet += 1;
                if quiet >= QUIESCENT_PATIENCE {
                    end_reason = END_QUIESCENT;
                    end_tick = t;
                    break;
                }
            }
        }

        self.log.finish(EndRecord {
            reason: end_reason.to_string(),
            tick: end_tick,
            budget_used: self.defender_planner.used(),
        });
        let report = RunReport::from_log(&self.log);
        (self.log, report)
    }

    // -- per-tick plumbing --------------------------------------------------

    /// Log a raw event, translate it, fold each observation into its
    /// audience's books, grow the attack graph, and deliver to subscribers.
    fn process_low_event(&mut self, low: LowLevelEvent, now: Tick) {
        self.log.push_low(low.clone());
        let derived = {
            let ctx = SensorCtx {
                mode: self.bus.mode(),
                registry: self.defender_kb.registry_unchecked(),
                attacker: &self.attacker_kb,
                assets: &self.kernel.env().assets,
            };
            translate(&low, &ctx)
        };
        for obs in derived {
            let seq = self.kernel.alloc_seq();
            let high = HighLevelEvent {
                seq,
                tick: now,
                audience: obs.audience,
                kind: obs.kind,
                provenance: obs.provenance,
            };
            let deltas = match obs.audience {
                Agent::Defender => self.defender_kb.record_observation(&high),
                Agent::Attacker => self.attacker_kb.record_observation(&high),
            };
            let new_steps = if obs.audience == Agent::Attacker {
                self.graph.update(&self.attacker_kb, &deltas)
            } else {
                Vec::new()
            };
            if obs.audience == Agent::Attacker {
                match &high.kind {
                    HighLevelEventKind::InfectedNewHost { host, .. }
                    | HighLevelEventKind::GotRootAccess { host } => {
                        self.ever_infected.insert(host.clone());
                    }
                    _ => {}
                }
            }
            self.log.push_high(high.clone());
            if self.bus.wants(obs.audience, high.kind.name()) {
                let intents = self.call_on_event(obs.audience, &high, &new_steps, now);
                for intent in intents {
                    self.plan_and_enqueue(obs.audience, &intent);
                }
            }
        }
    }

    fn call_on_tick(&mut self, agent: Agent, now: Tick) -> Vec<HighLevelAction> {
        let horizon = self.horizon;
        match agent {
            Agent::Defender => {
                let mut ctx = AgentCtx {
                    kb: &self.defender_kb,
                    graph: None,
                    rng: &mut self.defender_rng,
                    now,
                    horizon,
                };
                self.defender.on_tick(&mut ctx)
            }
            Agent::Attacker => {
                let mut ctx = AgentCtx {
                    kb: &self.attacker_kb,
                    graph: Some(&self.graph),
                    rng: &mut self.attacker_rng,
                    now,
                    horizon,
                };
                self.attacker.on_tick(&mut ctx)
            }
        }
    }

    fn call_on_event(
        &mut self,
        agent: Agent,
        event: &HighLevelEvent,
        new_steps: &[crate::graph::AttackStep],
        now: Tick,
    ) -> Vec<HighLevelAction> {
        let horizon = self.horizon;
        match agent {
            Agent::Defender => {
                let mut ctx = AgentCtx {
                    kb: &self.defender_kb,
                    graph: None,
                    rng: &mut self.defender_rng,
                    now,
                    horizon,
                };
                self.defender.on_event(event, new_steps, &mut ctx)
            }
            Agent::Attacker => {
                let mut ctx = AgentCtx {
                    kb: &self.attacker_kb,
                    graph: Some(&self.graph),
                    rng: &mut self.attacker_rng,
                    now,
                    horizon,
                };
                self.attacker.on_event(event, new_steps, &mut ctx)
            }
        }
    }

    /// Compile one intent and queue the result.  A plan that cannot be
    /// built — out of budget, stale references, no vantage point — is the
    /// agent's problem; the intent is dropped and the run moves on.
    fn plan_and_enqueue(&mut self, agent: Agent, intent: &HighLevelAction) {
        let actions = {
            let (planner, kb, rng) = match agent {
                Agent::Defender => (
                    &mut self.defender_planner,
                    &self.defender_kb,
                    &mut self.defender_rng,
                ),
                Agent::Attacker => (
                    &mut self.attacker_planner,
                    &self.attacker_kb,
                    &mut self.attacker_rng,
                ),
            };
            match planner.plan(intent, kb, rng) {
                Ok(actions) => actions,
                Err(_) => return,
            }
        };
        for action in actions {
            let _ = self.kernel.enqueue(action);
        }
    }

    /// Fold deception that has actually landed into the defender's books:
    /// the registry (private ground truth) plus the regular known maps.
    fn absorb_applied_deploys(&mut self) {
        for payload in self.kernel.take_applied_deploys() {
            absorb_deploy(&mut self.defender_kb, self.kernel.env(), &payload);
        }
    }

    fn record_action(&mut self, started: StartedAction) {
        let target = started.action.target_host().cloned();
        let on_decoy = target.as_ref().map_or(false, |h| {
            self.defender_kb
                .registry_unchecked()
                .hosts
                .contains_key(h)
        });
        self.log.push_action(ActionRecord {
            handle: started.handle.0,
            actor: started.action.actor,
            start: started.start,
            completes: started.completes,
            kind: started.action.kind.tag().to_string(),
            target,
            on_decoy,
        });
    }

    fn goal_met(&self) -> bool {
        match &self.kernel.env().goals.kind {
            GoalKind::ExfiltrateAssets { assets } => assets
                .iter()
                .all(|a| self.attacker_kb.exfiltrated.contains(a)),
            GoalKind::InfectHosts { hosts } => {
                hosts.iter().all(|h| self.ever_infected.contains(h))
            }
        }
    }
}

/// Per-agent random stream, decorrelated from the kernel's by a labeled
/// fingerprint.
fn agent_rng(agent: Agent, seed: u64) -> ChaCha8Rng {
    let label = match agent {
        Agent::Defender => format!("agent:defender:{seed}"),
        Agent::Attacker => format!("agent:attacker:{seed}"),
    };
    ChaCha8Rng::seed_from_u64(stable_fingerprint(label.as_bytes()))
}

/// The honest prior: the hosts the goals actually point at.
fn true_prior(env: &Environment) -> Vec<HostId> {
    match &env.goals.kind {
        GoalKind::ExfiltrateAssets { assets } => {
            let hosts: BTreeSet<HostId> = assets
                .iter()
                .filter_map(|a| env.asset(a).map(|d| d.host.clone()))
                .collect();
            hosts.into_iter().collect()
        }
        GoalKind::InfectHosts { hosts } => hosts.clone(),
    }
}

/// Fold one landed deploy into the defender's knowledge and registry.
fn absorb_deploy(kb: &mut KnowledgeBase, env: &Environment, payload: &DeployPayload) {
    match payload {
        DeployPayload::Host { host, assets, .. } => {
            kb.registry_mut_unchecked()
                .hosts
                .insert(host.id.clone(), host.subnet.clone());
            if let Some(h) = env.host(&host.id) {
                kb.hosts.insert(h.id.clone(), known_host_from_env(env, h));
            }
            for asset in assets {
                kb.registry_mut_unchecked().assets.insert(asset.id.clone());
                kb.assets.insert(
                    asset.id.clone(),
                    crate::kb::KnownAsset {
                        id: asset.id.clone(),
                        host: asset.host.clone(),
                        size_units: asset.size_units,
                    },
                );
            }
        }
        DeployPayload::Credential { credential, on } => {
            kb.registry_mut_unchecked()
                .credentials
                .insert(credential.id.clone());
            let target_subnet = env
                .host(&credential.target_host)
                .map(|h| h.subnet.clone())
                .unwrap_or_else(|| crate::ids::SubnetId::new("unknown"));
            kb.credentials.insert(
                credential.id.clone(),
                crate::kb::KnownCredential {
                    id: credential.id.clone(),
                    target_host: credential.target_host.clone(),
                    target_subnet,
                    privilege: credential.privilege,
                    found_on: on.clone(),
                },
            );
        }
        DeployPayload::Data { asset } => {
            kb.registry_mut_unchecked().assets.insert(asset.id.clone());
            kb.assets.insert(
                asset.id.clone(),
                crate::kb::KnownAsset {
                    id: asset.id.clone(),
                    host: asset.host.clone(),
                    size_units: asset.size_units,
                },
            );
        }
        DeployPayload::User { host, name } => {
            kb.registry_mut_unchecked()
                .users
                .insert((host.clone(), name.clone()));
        }
        DeployPayload::HoneyService { host, service } => {
            kb.registry_mut_unchecked()
                .honey_services
                .insert((host.clone(), service.name.clone()));
        }
    }
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Everything worth comparing about a finished run.  Derived purely from
/// the log, so replaying a log always reproduces the report bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub end_reason: String,
    pub end_tick: Tick,
    /// Share of goal targets attained, as a percentage in [0, 100].
    pub goals_achieved_pct: f64,
    /// Tick at which the last goal target was attained, if ever.
    pub time_to_goal: Option<Tick>,
    /// True when the run ended with the goal unmet.
    pub goal_capped: bool,
    /// Share of real critical assets exfiltrated, as a percentage.
    pub data_exfiltrated_pct: f64,
    /// Attacker actions aimed at decoy hosts, over all attacker actions.
    pub decoy_interaction_rate: f64,
    pub attacker_actions: u64,
    pub decoy_actions: u64,
    pub low_events: u64,
    pub high_events: u64,
    pub defender_budget_used: BudgetUsed,
}

impl RunReport {
    /// Score a log.  This is the only scoring path: live runs call it on
    /// the log they just produced.
    pub fn from_log(log: &EventLog) -> RunReport {
        let header = log.header();
        let goal_assets: BTreeSet<&AssetId> = header.goal_assets.iter().collect();
        let goal_hosts: BTreeSet<&HostId> = header.goal_hosts.iter().collect();
        let critical: BTreeSet<&AssetId> = header.critical_assets.iter().collect();
        let goal_total = goal_assets.len() + goal_hosts.len();

        let mut exfiltrated: BTreeSet<&AssetId> = BTreeSet::new();
        let mut ever_infected: BTreeSet<&HostId> = BTreeSet::new();
        let mut attacker_actions = 0u64;
        let mut decoy_actions = 0u64;
        let mut low_events = 0u64;
        let mut high_events = 0u64;
        let mut time_to_goal = None;
        let mut end_reason = String::new();
        let mut end_tick = 0;
        let mut budget_used = BudgetUsed::default();

        let attained = |exf: &BTreeSet<&AssetId>, inf: &BTreeSet<&HostId>| {
            exf.intersection(&goal_assets).count() + inf.intersection(&goal_hosts).count()
        };

        for record in log.records() {
            match record {
                Record::Header(_) => {}
                Record::Action(a) => {
                    if a.actor == Agent::Attacker {
                        attacker_actions += 1;
                        if a.on_decoy {
                            decoy_actions += 1;
                        }
                    }
                }
                Record::Low { .. } => low_events += 1,
                Record::High { event } => {
                    high_events += 1;
                    if event.audience == Agent::Attacker {
                        match &event.kind {
                            HighLevelEventKind::ExfiltratedData { asset } => {
                                if let Some(a) = goal_assets.get(asset) {
                                    exfiltrated.insert(a);
                                }
                                if let Some(a) = critical.get(asset) {
                                    exfiltrated.insert(a);
                                }
                            }
                            HighLevelEventKind::InfectedNewHost { host, .. }
                            | HighLevelEventKind::GotRootAccess { host } => {
                                if let Some(h) = goal_hosts.get(host) {
                                    ever_infected.insert(h);
                                }
                            }
                            _ => {}
                        }
                        if time_to_goal.is_none()
                            && goal_total > 0
                            && attained(&exfiltrated, &ever_infected) == goal_total
                        {
                            time_to_goal = Some(event.tick);
                        }
                    }
                }
                Record::End(end) => {
                    end_reason = end.reason.clone();
                    end_tick = end.tick;
                    budget_used = end.budget_used;
                }
            }
        }

        let goals_achieved_pct = if goal_total == 0 {
            0.0
        } else {
            100.0 * attained(&exfiltrated, &ever_infected) as f64 / goal_total as f64
        };
        let data_exfiltrated_pct = if critical.is_empty() {
            0.0
        } else {
            100.0 * exfiltrated.intersection(&critical).count() as f64 / critical.len() as f64
        };
        let decoy_interaction_rate = if attacker_actions == 0 {
            0.0
        } else {
            decoy_actions as f64 / attacker_actions as f64
        };

        RunReport {
            scenario: header.scenario.clone(),
            seed: header.seed,
            end_reason,
            end_tick,
            goals_achieved_pct,
            time_to_goal,
            goal_capped: time_to_goal.is_none(),
            data_exfiltrated_pct,
            decoy_interaction_rate,
            attacker_actions,
            decoy_actions,
            low_events,
            high_events,
            defender_budget_used: budget_used,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::builders::{build_environment, BuildParams};
    use crate::strategies::{build_attacker, build_defender};

    fn run_once(scenario: &str, size: u32, attacker: &str, defender: &str, seed: u64) -> (EventLog, RunReport) {
        let params = BuildParams {
            size: Some(size),
            seed,
            ..BuildParams::default()
        };
        let env = build_environment(scenario, &params).unwrap();
        let budget = CapabilityBudget::default();
        let def = build_defender(defender, budget, None).unwrap();
        let attacker = attacker.to_string();
        let factory: AttackerFactory =
            Box::new(move |prior| build_attacker(&attacker, prior).unwrap());
        let sim = Simulation::new(
            env,
            def,
            factory,
            budget,
            RunSettings::new(scenario, seed),
        )
        .unwrap();
        sim.run()
    }

    #[test]
    fn depth_first_attacker_clears_a_small_ring() {
        let (log, report) = run_once("chain", 4, "dfs", "none", 11);
        assert_eq!(report.end_reason, END_GOAL_MET);
        assert_eq!(report.goals_achieved_pct, 100.0);
        assert_eq!(report.data_exfiltrated_pct, 100.0);
        assert!(!report.goal_capped);
        assert_eq!(report.time_to_goal, Some(report.end_tick));
        assert!(log.end().is_some());
    }

    #[test]
    fn identical_runs_produce_identical_bytes() {
        let (log_a, report_a) = run_once("chain", 4, "dfs", "none", 3);
        let (log_b, report_b) = run_once("chain", 4, "dfs", "none", 3);
        assert_eq!(log_a.to_jsonl(), log_b.to_jsonl());
        assert_eq!(report_a, report_b);
    }

    #[test]
    fn replaying_a_log_reproduces_its_report() {
        let (log, report) = run_once("chain", 4, "dfs", "none", 5);
        let parsed = EventLog::parse(&log.to_jsonl()).unwrap();
        assert_eq!(RunReport::from_log(&parsed), report);
    }

    #[test]
    fn decoys_remain_standing_without_contact() {
        // A defended small ring: the run still terminates one way or the
        // other, and the defender's spend is visible in the end record.
        let (log, report) = run_once("chain", 4, "dfs", "layered", 11);
        assert!(report.defender_budget_used.total() > 0);
        assert!(log.end().is_some());
        assert!(report.end_tick <= 4500);
    }
}
