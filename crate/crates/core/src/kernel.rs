//! Deterministic discrete-event engine.
//!
//! The kernel owns the ground-truth world: the environment (including any
//! decoys folded in by deploys) and per-host runtime state.  Agents feed it
//! low-level actions; it serializes them per agent, charges each a duration,
//! and applies the effects at the completion tick, emitting low-level events.
//! One tick is one simulated second.
//!
//! Scheduling discipline:
//! - Each agent has a FIFO pipeline: one action in flight at a time, the
//!   next starting at the predecessor's completion tick.
//! - An action entering an idle, empty pipeline starts on the tick after it
//!   was issued (observe-then-act latency).
//! - Same-tick completions dispatch in scheduling order.
//!
//! Failure discipline:
//! - Conditions visible when an action starts (dead source, downed target)
//!   fail fast: the action collapses to a one-tick `action-failed`.
//! - Conditions arising mid-flight (the source host restored under the
//!   attacker's feet) surface as `action-failed` at the scheduled completion
//!   tick — the time was already spent.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{
    Credential, DataAsset, Environment, Host, NetEndpoint, Service, Violation, Vulnerability,
};
use crate::events::{
    AssetRecord, CommandSummary, CredentialRecord, FailureReason, LowLevelEvent,
    LowLevelEventKind, ScanEntry, ServiceBanner, VulnBanner,
};
use crate::ids::{
    Agent, AssetId, CredentialId, HostId, Location, Privilege, Protocol, SubnetId, Tick, VulnId,
};

/// Simulation clock: current tick and the hard stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub now: Tick,
    pub horizon: Tick,
}

/// Tick costs per action kind.  Only relative magnitudes matter for the
/// time metrics; every value can be overridden from the scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct DurationTable {
    pub scan_subnet: Tick,
    pub probe_host: Tick,
    pub exploit: Tick,
    pub use_credential: Tick,
    pub read_local_files: Tick,
    /// Copying charges this much per size unit per hop.
    pub copy_per_unit: Tick,
    pub restore: Tick,
    pub shutdown: Tick,
    /// Deploys are free at initialization and cost this much mid-run.
    pub deploy: Tick,
}

impl Default for DurationTable {
    fn default() -> Self {
        DurationTable {
            scan_subnet: 30,
            probe_host: 5,
            exploit: 60,
            use_credential: 30,
            read_local_files: 20,
            copy_per_unit: 10,
            restore: 30,
            shutdown: 5,
            deploy: 30,
        }
    }
}

/// A decoy entity a deploy action drops into the world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeployPayload {
    /// A whole fake host, with any vulnerability definitions it needs that
    /// the environment does not already carry.
    Host {
        host: Host,
        vuln_defs: Vec<Vulnerability>,
        assets: Vec<DataAsset>,
    },
    /// A credential file planted on an existing host.
    Credential { credential: Credential, on: HostId },
    /// A fake data file planted on an existing host.
    Data { asset: DataAsset },
    /// A fake user account added to an existing host.
    User { host: HostId, name: String },
    /// A banner-only service added to an existing host.
    HoneyService { host: HostId, service: Service },
}

/// What the kernel is asked to do, with per-kind parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionKind {
    ScanSubnet { subnet: SubnetId },
    ProbeHost { target: HostId },
    Exploit { target: HostId, vuln: VulnId },
    UseCredential { target: HostId, credential: CredentialId },
    ReadLocalFiles { host: HostId },
    /// One hop of an asset copy: from `source` to `to`.
    CopyAsset {
        asset: AssetId,
        to: Location,
        protocol: Protocol,
    },
    InstallImplant { host: HostId, privilege: Privilege },
    RestoreHost { host: HostId },
    ShutdownHost { host: HostId },
    Deploy { payload: DeployPayload },
    Noop,
}

/// A low-level action: who acts, from where, and what.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowLevelAction {
    pub actor: Agent,
    pub source: Location,
    pub kind: ActionKind,
}

impl ActionKind {
    /// Short machine-readable label for logs.
    pub fn tag(&self) -> &'static str {
        kind_tag(self)
    }
}

impl LowLevelAction {
    /// The host the action operates on, when there is a single one.
    pub fn target_host(&self) -> Option<&HostId> {
        match &self.kind {
            ActionKind::ProbeHost { target } => Some(target),
            ActionKind::Exploit { target, .. } => Some(target),
            ActionKind::UseCredential { target, .. } => Some(target),
            ActionKind::ReadLocalFiles { host } => Some(host),
            ActionKind::InstallImplant { host, .. } => Some(host),
            ActionKind::RestoreHost { host } => Some(host),
            ActionKind::ShutdownHost { host } => Some(host),
            ActionKind::CopyAsset { to: Location::Host(h), .. } => Some(h),
            _ => None,
        }
    }
}

/// Mutable per-host world state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HostRuntime {
    pub up: bool,
    /// Implants present, per agent.  Empty whenever the host is down.
    pub infections: BTreeMap<Agent, Privilege>,
    /// Asset copies staged here by exfiltration hops.
    pub staged: BTreeSet<AssetId>,
    /// Traces left by completed actions (visible to forensics-style
    /// strategies); wiped by restore.
    pub action_markers: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionHandle(pub u64);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("cannot schedule at tick {at}: clock is already at {now}")]
    InPast { at: Tick, now: Tick },
    #[error("action references unknown entity: {0}")]
    UnknownEntity(String),
    #[error("agent pipeline is busy; direct scheduling needs an idle pipeline")]
    Busy,
}

#[derive(Debug, Clone)]
struct InFlight {
    handle: ActionHandle,
    action: LowLevelAction,
    completes: Tick,
    /// Failure determined at start; the action burns one tick and reports it.
    early_failure: Option<FailureReason>,
}

#[derive(Debug, Clone)]
struct Queued {
    handle: ActionHandle,
    action: LowLevelAction,
    enqueued_at: Tick,
}

/// Notice that an action left the queue, for run logging.
#[derive(Debug, Clone)]
pub struct StartedAction {
    pub handle: ActionHandle,
    pub action: LowLevelAction,
    pub start: Tick,
    pub completes: Tick,
}

/// The world runtime and action engine.
pub struct Kernel {
    env: Environment,
    runtime: BTreeMap<HostId, HostRuntime>,
    clock: SimClock,
    started: bool,
    queues: BTreeMap<Agent, VecDeque<Queued>>,
    in_flight: BTreeMap<Agent, InFlight>,
    durations: DurationTable,
    next_handle: u64,
    next_seq: u64,
    /// Deploy payloads applied since the runner last drained them.
    applied_deploys: Vec<DeployPayload>,
    /// Actions started since the runner last drained them.
    started_actions: Vec<StartedAction>,
    #[allow(dead_code)]
    rng: ChaCha8Rng,
}

impl Kernel {
    /// Build a kernel over a validated environment.  All hosts start up.
    pub fn new(
        env: Environment,
        seed: u64,
        horizon: Tick,
        durations: DurationTable,
    ) -> Result<Kernel, Vec<Violation>> {
        let violations = env.validate();
        if !violations.is_empty() {
            return Err(violations);
        }
        let runtime = env
            .hosts
            .keys()
            .map(|h| {
                (
                    h.clone(),
                    HostRuntime {
                        up: true,
                        ..HostRuntime::default()
                    },
                )
            })
            .collect();
        Ok(Kernel {
            env,
            runtime,
            clock: SimClock { now: 0, horizon },
            started: false,
            queues: BTreeMap::new(),
            in_flight: BTreeMap::new(),
            durations,
            next_handle: 0,
            next_seq: 0,
            applied_deploys: Vec::new(),
            started_actions: Vec::new(),
            rng: rand::SeedableRng::seed_from_u64(seed),
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn durations(&self) -> &DurationTable {
        &self.durations
    }

    pub fn runtime(&self, host: &HostId) -> Option<&HostRuntime> {
        self.runtime.get(host)
    }

    /// Next global event sequence number (shared with high-level events so
    /// the log has one total order).
    pub fn alloc_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    /// True when the agent has nothing in flight and nothing queued.
    pub fn idle(&self, agent: Agent) -> bool {
        !self.in_flight.contains_key(&agent)
            && self.queues.get(&agent).map_or(true, VecDeque::is_empty)
    }

    /// True when any agent still has work scheduled or queued.
    pub fn has_work(&self) -> bool {
        !self.in_flight.is_empty() || self.queues.values().any(|q| !q.is_empty())
    }

    pub fn take_applied_deploys(&mut self) -> Vec<DeployPayload> {
        std::mem::take(&mut self.applied_deploys)
    }

    pub fn take_started_actions(&mut self) -> Vec<StartedAction> {
        std::mem::take(&mut self.started_actions)
    }

    /// Apply an initialization-time action: deploys, entry implants, and
    /// noops complete instantly at tick 0, before the clock starts.
    pub fn apply_at_init(&mut self, action: LowLevelAction) -> Vec<LowLevelEvent> {
        assert!(
            !self.started,
            "initialization actions are only valid before the first tick"
        );
        match &action.kind {
            ActionKind::Deploy { payload } => {
                self.apply_deploy(payload.clone());
                Vec::new()
            }
            ActionKind::InstallImplant { host, privilege } => {
                let rt = self.runtime.get_mut(host).expect("entry host exists");
                let prev = rt.infections.get(&action.actor).copied();
                rt.infections
                    .insert(action.actor, prev.map_or(*privilege, |p| p.max(*privilege)));
                vec![self.emit(
                    action.actor,
                    LowLevelEventKind::ImplantInstalled {
                        host: host.clone(),
                        privilege: *privilege,
                    },
                )]
            }
            ActionKind::Noop => Vec::new(),
            other => panic!("{other:?} cannot run at initialization"),
        }
    }

    /// Queue an action on the actor's pipeline.
    pub fn enqueue(&mut self, action: LowLevelAction) -> Result<ActionHandle, ScheduleError> {
        self.check_references(&action)?;
        let handle = self.fresh_handle();
        self.queues.entry(action.actor).or_default().push_back(Queued {
            handle,
            action,
            enqueued_at: self.clock.now,
        });
        Ok(handle)
    }

    /// Start an action directly at a given tick, bypassing the queue.  The
    /// pipeline must be idle.  Mainly useful for tests and single-shot runs.
    pub fn schedule_at(
        &mut self,
        action: LowLevelAction,
        at: Tick,
    ) -> Result<ActionHandle, ScheduleError> {
        if at < self.clock.now {
            return Err(ScheduleError::InPast {
                at,
                now: self.clock.now,
            });
        }
        self.check_references(&action)?;
        if self.in_flight.contains_key(&action.actor)
            || self.queues.get(&action.actor).is_some_and(|q| !q.is_empty())
        {
            return Err(ScheduleError::Busy);
        }
        let handle = self.fresh_handle();
        self.begin_action(handle, action, at);
        Ok(handle)
    }

    /// Advance the clock to `t`.
    pub fn begin_tick(&mut self, t: Tick) {
        assert!(t >= self.clock.now, "clock cannot move backwards");
        assert!(t <= self.clock.horizon, "clock cannot pass the horizon");
        self.started = true;
        self.clock.now = t;
    }

    /// Dispatch every action completing at the current tick, in scheduling
    /// order, and return the emitted events.
    pub fn complete_due(&mut self) -> Vec<LowLevelEvent> {
        let now = self.clock.now;
        let mut due: Vec<InFlight> = Vec::new();
        let agents: Vec<Agent> = self.in_flight.keys().copied().collect();
        for agent in agents {
            if self.in_flight[&agent].completes == now {
                due.push(self.in_flight.remove(&agent).unwrap());
            }
        }
        due.sort_by_key(|f| f.handle);

        let mut events = Vec::new();
        for flight in due {
            events.extend(self.execute(&flight));
            // Back-to-back chaining: the successor starts at the completion
            // tick.
            self.start_next(flight.action.actor, now);
        }
        events
    }

    /// Start queued actions for agents that are idle.  Actions issued this
    /// tick start on the next one.
    pub fn start_pending(&mut self) {
        for agent in [Agent::Defender, Agent::Attacker] {
            self.start_next(agent, self.clock.now + 1);
        }
    }

    fn start_next(&mut self, agent: Agent, at: Tick) {
        if self.in_flight.contains_key(&agent) {
            return;
        }
        let Some(queue) = self.queues.get_mut(&agent) else {
            return;
        };
        let Some(next) = queue.pop_front() else {
            return;
        };
        // Respect the observe-then-act latency: an action issued at tick t
        // can start at t+1 at the earliest.
        let start = at.max(next.enqueued_at + 1);
        self.begin_action(next.handle, next.action, start);
    }

    fn begin_action(&mut self, handle: ActionHandle, action: LowLevelAction, start: Tick) {
        let early_failure = self.start_failure(&action);
        let duration = if early_failure.is_some() {
            1
        } else {
            self.duration_of(&action.kind)
        };
        self.started_actions.push(StartedAction {
            handle,
            action: action.clone(),
            start,
            completes: start + duration,
        });
        self.in_flight.insert(
            action.actor,
            InFlight {
                handle,
                action,
                completes: start + duration,
                early_failure,
            },
        );
    }

    fn fresh_handle(&mut self) -> ActionHandle {
        let h = ActionHandle(self.next_handle);
        self.next_handle += 1;
        h
    }

    fn duration_of(&self, kind: &ActionKind) -> Tick {
        let d = &self.durations;
        match kind {
            ActionKind::ScanSubnet { .. } => d.scan_subnet,
            ActionKind::ProbeHost { .. } => d.probe_host,
            ActionKind::Exploit { .. } => d.exploit,
            ActionKind::UseCredential { .. } => d.use_credential,
            ActionKind::ReadLocalFiles { .. } => d.read_local_files,
            ActionKind::CopyAsset { asset, .. } => {
                let units = self.env.asset(asset).map_or(1, |a| a.size_units.max(1));
                d.copy_per_unit * Tick::from(units)
            }
            ActionKind::InstallImplant { .. } | ActionKind::Noop => 1,
            ActionKind::RestoreHost { .. } => d.restore,
            ActionKind::ShutdownHost { .. } => d.shutdown,
            ActionKind::Deploy { .. } => d.deploy,
        }
    }

    fn check_references(&self, action: &LowLevelAction) -> Result<(), ScheduleError> {
        let unknown = |what: &str| Err(ScheduleError::UnknownEntity(what.to_string()));
        if let Location::Host(h) = &action.source {
            if self.env.host(h).is_none() {
                return unknown(&format!("source host {h}"));
            }
        }
        if let Some(t) = action.target_host() {
            if self.env.host(t).is_none() {
                return unknown(&format!("host {t}"));
            }
        }
        match &action.kind {
            ActionKind::ScanSubnet { subnet } => {
                if self.env.subnet(subnet).is_none() {
                    return unknown(&format!("subnet {subnet}"));
                }
            }
            ActionKind::Exploit { vuln, .. } => {
                if self.env.vulnerability(vuln).is_none() {
                    return unknown(&format!("vulnerability {vuln}"));
                }
            }
            ActionKind::UseCredential { credential, .. } => {
                if self.env.credential(credential).is_none() {
                    return unknown(&format!("credential {credential}"));
                }
            }
            ActionKind::CopyAsset { asset, .. } => {
                if self.env.asset(asset).is_none() {
                    return unknown(&format!("asset {asset}"));
                }
            }
            ActionKind::Deploy { payload } => self.check_deploy(payload)?,
            _ => {}
        }
        Ok(())
    }

    fn check_deploy(&self, payload: &DeployPayload) -> Result<(), ScheduleError> {
        let unknown = |what: String| Err(ScheduleError::UnknownEntity(what));
        match payload {
            DeployPayload::Host { host, .. } => {
                if self.env.host(&host.id).is_some() {
                    return unknown(format!("host id {} already taken", host.id));
                }
                if self.env.subnet(&host.subnet).is_none() {
                    return unknown(format!("subnet {}", host.subnet));
                }
            }
            DeployPayload::Credential { credential, on } => {
                if self.env.host(on).is_none() {
                    return unknown(format!("host {on}"));
                }
                if self.env.credential(&credential.id).is_some() {
                    return unknown(format!("credential id {} already taken", credential.id));
                }
            }
            DeployPayload::Data { asset } => {
                if self.env.host(&asset.host).is_none() {
                    return unknown(format!("host {}", asset.host));
                }
                if self.env.asset(&asset.id).is_some() {
                    return unknown(format!("asset id {} already taken", asset.id));
                }
            }
            DeployPayload::User { host, .. } | DeployPayload::HoneyService { host, .. } => {
                if self.env.host(host).is_none() {
                    return unknown(format!("host {host}"));
                }
            }
        }
        Ok(())
    }

    /// Conditions visible at start time that fail the action fast.
    fn start_failure(&self, action: &LowLevelAction) -> Option<FailureReason> {
        if let Location::Host(src) = &action.source {
            let rt = self.runtime.get(src)?;
            if !rt.up {
                return Some(FailureReason::SourceLost);
            }
            if action.actor == Agent::Attacker && !rt.infections.contains_key(&Agent::Attacker) {
                return Some(FailureReason::SourceLost);
            }
        }
        let target_must_be_up = !matches!(
            action.kind,
            ActionKind::RestoreHost { .. } | ActionKind::Deploy { .. } | ActionKind::Noop
        );
        if target_must_be_up {
            if let Some(t) = action.target_host() {
                if self.runtime.get(t).is_some_and(|rt| !rt.up) {
                    return Some(FailureReason::TargetDown);
                }
            }
        }
        None
    }

    fn emit(&mut self, actor: Agent, kind: LowLevelEventKind) -> LowLevelEvent {
        LowLevelEvent {
            seq: self.alloc_seq(),
            tick: self.clock.now,
            actor,
            kind,
        }
    }

    fn fail(
        &mut self,
        action: &LowLevelAction,
        reason: FailureReason,
    ) -> LowLevelEvent {
        let target = action.target_host().cloned().map(Location::Host);
        self.emit(
            action.actor,
            LowLevelEventKind::ActionFailed {
                reason,
                source: Some(action.source.clone()),
                target,
            },
        )
    }

    fn infected_by(&self, host: &HostId, agent: Agent) -> bool {
        self.runtime
            .get(host)
            .is_some_and(|rt| rt.up && rt.infections.contains_key(&agent))
    }

    fn endpoint_of(&self, loc: &Location) -> Option<NetEndpoint> {
        match loc {
            Location::External => Some(NetEndpoint::External),
            Location::Host(h) => self
                .env
                .host(h)
                .map(|host| NetEndpoint::Subnet(host.subnet.clone())),
        }
    }

    /// Apply a due action's effects and return the events, in emission order.
    fn execute(&mut self, flight: &InFlight) -> Vec<LowLevelEvent> {
        let action = &flight.action;
        if let Some(reason) = flight.early_failure {
            let ev = self.fail(action, reason);
            self.leave_marker(action, "failed");
            return vec![ev];
        }
        // Mid-flight re-check: the acting host must still be alive and, for
        // attackers, still carry the implant.
        if let Location::Host(src) = &action.source {
            let alive = self.runtime.get(src).is_some_and(|rt| rt.up);
            let still_owned =
                action.actor != Agent::Attacker || self.infected_by(src, Agent::Attacker);
            if !alive || !still_owned {
                return vec![self.fail(action, FailureReason::SourceLost)];
            }
        }
        let events = match &action.kind.clone() {
            ActionKind::ScanSubnet { subnet } => self.exec_scan(action, subnet),
            ActionKind::ProbeHost { target } => self.exec_probe(action, target),
            ActionKind::Exploit { target, vuln } => self.exec_exploit(action, target, vuln),
            ActionKind::UseCredential { target, credential } => {
                self.exec_use_credential(action, target, credential)
            }
            ActionKind::ReadLocalFiles { host } => self.exec_read_local(action, host),
            ActionKind::CopyAsset { asset, to, protocol } => {
                self.exec_copy(action, asset, to, protocol)
            }
            ActionKind::InstallImplant { host, privilege } => {
                self.exec_implant(action, host, *privilege)
            }
            ActionKind::RestoreHost { host } => self.exec_restore(action, host),
            ActionKind::ShutdownHost { host } => self.exec_shutdown(action, host),
            ActionKind::Deploy { payload } => {
                self.apply_deploy(payload.clone());
                Vec::new()
            }
            ActionKind::Noop => Vec::new(),
        };
        self.leave_marker(action, "done");
        events
    }

    fn leave_marker(&mut self, action: &LowLevelAction, outcome: &str) {
        // A restore rolls the machine back to its snapshot: it leaves no
        // trace of itself.
        if matches!(action.kind, ActionKind::RestoreHost { .. }) {
            return;
        }
        if let Some(t) = action.target_host().cloned() {
            let tag = format!("{}:{outcome}", kind_tag(&action.kind));
            if let Some(rt) = self.runtime.get_mut(&t) {
                rt.action_markers.insert(tag);
            }
        }
    }

    fn exec_scan(&mut self, action: &LowLevelAction, subnet: &SubnetId) -> Vec<LowLevelEvent> {
        let Some(from_ep) = self.endpoint_of(&action.source) else {
            return vec![self.fail(action, FailureReason::NotReachable)];
        };
        let to_ep = NetEndpoint::Subnet(subnet.clone());
        let visible = self.env.permitted_protocols(&from_ep, &to_ep);
        if visible.is_empty() {
            return vec![self.fail(action, FailureReason::NotReachable)];
        }
        let mut entries = Vec::new();
        for (hid, host) in &self.env.hosts {
            if &host.subnet != subnet || !self.runtime[hid].up {
                continue;
            }
            entries.push(scan_entry(&self.env, host, Some(&visible)));
        }
        vec![self.emit(
            action.actor,
            LowLevelEventKind::ScanOutput {
                subnet: subnet.clone(),
                entries,
            },
        )]
    }

    fn exec_probe(&mut self, action: &LowLevelAction, target: &HostId) -> Vec<LowLevelEvent> {
        let host = self.env.host(target).expect("checked at enqueue").clone();
        let Some(from_ep) = self.endpoint_of(&action.source) else {
            return vec![self.fail(action, FailureReason::NotReachable)];
        };
        let to_ep = NetEndpoint::Subnet(host.subnet.clone());
        let visible = self.env.permitted_protocols(&from_ep, &to_ep);
        let Some(proto) = visible.iter().next().cloned() else {
            return vec![self.fail(action, FailureReason::NotReachable)];
        };
        let entry = scan_entry(&self.env, &host, Some(&visible));
        vec![
            self.emit(
                action.actor,
                LowLevelEventKind::Connection {
                    src: action.source.clone(),
                    dst: Location::Host(target.clone()),
                    protocol: proto,
                },
            ),
            self.emit(
                action.actor,
                LowLevelEventKind::ScanOutput {
                    subnet: host.subnet.clone(),
                    entries: vec![entry],
                },
            ),
        ]
    }

    fn exec_exploit(
        &mut self,
        action: &LowLevelAction,
        target: &HostId,
        vuln: &VulnId,
    ) -> Vec<LowLevelEvent> {
        let host = self.env.host(target).expect("checked").clone();
        if !self.runtime[target].up {
            return vec![self.fail(action, FailureReason::TargetDown)];
        }
        let vuln_def = self.env.vulnerability(vuln).expect("checked").clone();
        let local = action.source == Location::Host(target.clone());

        if local {
            // Escalation in place: no network traffic.
            if !host.vulnerabilities.contains(vuln) {
                return vec![self.fail(action, FailureReason::NotVulnerable)];
            }
            return self.install(action.actor, target, vuln_def.grants);
        }

        let service = host
            .services
            .iter()
            .find(|s| s.name == vuln_def.target_service)
            .cloned();
        let Some(service) = service else {
            return vec![self.fail(action, FailureReason::NotVulnerable)];
        };
        let Some(from_ep) = self.endpoint_of(&action.source) else {
            return vec![self.fail(action, FailureReason::NotReachable)];
        };
        let to_ep = NetEndpoint::Subnet(host.subnet.clone());
        if !self.env.allows(&from_ep, &to_ep, &service.protocol) {
            return vec![self.fail(action, FailureReason::NotReachable)];
        }
        let mut events = vec![self.emit(
            action.actor,
            LowLevelEventKind::Connection {
                src: action.source.clone(),
                dst: Location::Host(target.clone()),
                protocol: service.protocol.clone(),
            },
        )];
        if !host.vulnerabilities.contains(vuln) || !vuln_def.remote {
            events.push(self.fail(action, FailureReason::NotVulnerable));
            return events;
        }
        events.extend(self.install(action.actor, target, vuln_def.grants));
        events
    }

    fn exec_use_credential(
        &mut self,
        action: &LowLevelAction,
        target: &HostId,
        credential: &CredentialId,
    ) -> Vec<LowLevelEvent> {
        let cred = self.env.credential(credential).expect("checked").clone();
        let src_host = match &action.source {
            Location::Host(h) => h.clone(),
            Location::External => {
                // Credentials are presented from a host holding the file.
                return vec![self.fail(action, FailureReason::InvalidCredential)];
            }
        };
        let mut events = vec![self.emit(
            action.actor,
            LowLevelEventKind::SyscallCredentialUse {
                host: src_host.clone(),
                credential: credential.clone(),
            },
        )];
        if !self.runtime[target].up {
            events.push(self.fail(action, FailureReason::TargetDown));
            return events;
        }
        let from_ep = NetEndpoint::Subnet(self.env.host(&src_host).unwrap().subnet.clone());
        let to_ep = NetEndpoint::Subnet(self.env.host(target).unwrap().subnet.clone());
        if !self.env.allows(&from_ep, &to_ep, &Protocol::Ssh) {
            events.push(self.fail(action, FailureReason::NotReachable));
            return events;
        }
        if !cred.valid || &cred.target_host != target {
            // A bad login never completes a connection; nothing shows up in
            // network traces.
            events.push(self.fail(action, FailureReason::InvalidCredential));
            return events;
        }
        events.push(self.emit(
            action.actor,
            LowLevelEventKind::Connection {
                src: action.source.clone(),
                dst: Location::Host(target.clone()),
                protocol: Protocol::Ssh,
            },
        ));
        events.extend(self.install(action.actor, target, cred.privilege));
        events
    }

    fn install(&mut self, actor: Agent, host: &HostId, privilege: Privilege) -> Vec<LowLevelEvent> {
        let rt = self.runtime.get_mut(host).expect("checked");
        let prev = rt.infections.get(&actor).copied();
        rt.infections
            .insert(actor, prev.map_or(privilege, |p| p.max(privilege)));
        vec![self.emit(
            actor,
            LowLevelEventKind::ImplantInstalled {
                host: host.clone(),
                privilege,
            },
        )]
    }

    fn exec_read_local(&mut self, action: &LowLevelAction, host_id: &HostId) -> Vec<LowLevelEvent> {
        if action.source != Location::Host(host_id.clone()) {
            // Reading files requires being on the machine.
            return vec![self.fail(action, FailureReason::SourceLost)];
        }
        let host = self.env.host(host_id).expect("checked").clone();
        let mut events = Vec::new();

        let mut asset_ids: Vec<AssetId> = host.data_assets.clone();
        asset_ids.extend(self.runtime[host_id].staged.iter().cloned());
        let mut assets = Vec::new();
        for aid in &asset_ids {
            let Some(asset) = self.env.asset(aid) else {
                continue;
            };
            assets.push(AssetRecord {
                asset: aid.clone(),
                host: host_id.clone(),
                size_units: asset.size_units,
                markers: asset.markers.clone(),
            });
            events.push(self.emit(
                action.actor,
                LowLevelEventKind::SyscallFileRead {
                    host: host_id.clone(),
                    asset: aid.clone(),
                },
            ));
        }

        let mut credentials = Vec::new();
        for cid in &host.stored_credentials {
            let Some(cred) = self.env.credential(cid) else {
                continue;
            };
            let target_subnet = self
                .env
                .host(&cred.target_host)
                .map(|h| h.subnet.clone())
                .unwrap_or_else(|| host.subnet.clone());
            credentials.push(CredentialRecord {
                credential: cid.clone(),
                target_host: cred.target_host.clone(),
                target_subnet,
                privilege: cred.privilege,
            });
        }

        // Local (non-network) flaws show up in installed-package listings.
        let local_vulns: Vec<VulnBanner> = host
            .vulnerabilities
            .iter()
            .filter_map(|vid| self.env.vulnerability(vid))
            .filter(|v| !v.remote)
            .map(|v| VulnBanner {
                id: v.id.clone(),
                protocol: service_protocol(&host, &v.target_service),
                grants: v.grants,
                remote: false,
            })
            .collect();

        let summary = CommandSummary {
            credentials,
            assets,
            routes: self
                .env
                .routed_subnets(&NetEndpoint::Subnet(host.subnet.clone())),
            services: Vec::new(),
            vulnerabilities: local_vulns,
            note: None,
        };
        events.push(self.emit(
            action.actor,
            LowLevelEventKind::CommandOutput {
                host: host_id.clone(),
                summary,
            },
        ));
        events
    }

    fn exec_copy(
        &mut self,
        action: &LowLevelAction,
        asset: &AssetId,
        to: &Location,
        protocol: &Protocol,
    ) -> Vec<LowLevelEvent> {
        let Location::Host(src) = &action.source else {
            return vec![self.fail(action, FailureReason::SourceLost)];
        };
        let asset_def = self.env.asset(asset).expect("checked").clone();
        let present = asset_def.host == *src || self.runtime[src].staged.contains(asset);
        if !present {
            return vec![self.fail(action, FailureReason::AssetMissing)];
        }
        let from_ep = NetEndpoint::Subnet(self.env.host(src).unwrap().subnet.clone());
        let to_ep = match to {
            Location::External => NetEndpoint::External,
            Location::Host(h) => {
                if !self.runtime.get(h).is_some_and(|rt| rt.up) {
                    return vec![self.fail(action, FailureReason::TargetDown)];
                }
                NetEndpoint::Subnet(self.env.host(h).unwrap().subnet.clone())
            }
        };
        // A hop to one's own location (data already sitting at the egress
        // host) is pure packaging: no network traffic.
        let local = *to == action.source;
        if !local && !self.env.allows(&from_ep, &to_ep, protocol) {
            return vec![self.fail(action, FailureReason::NotReachable)];
        }
        if let Location::Host(h) = to {
            self.runtime.get_mut(h).unwrap().staged.insert(asset.clone());
        }
        let mut events = Vec::new();
        if !local {
            events.push(self.emit(
                action.actor,
                LowLevelEventKind::Connection {
                    src: action.source.clone(),
                    dst: to.clone(),
                    protocol: protocol.clone(),
                },
            ));
        }
        events.push(self.emit(
            action.actor,
            LowLevelEventKind::TransferComplete {
                asset: asset.clone(),
                from: action.source.clone(),
                to: to.clone(),
            },
        ));
        events
    }

    fn exec_implant(
        &mut self,
        action: &LowLevelAction,
        host: &HostId,
        privilege: Privilege,
    ) -> Vec<LowLevelEvent> {
        if !self.runtime[host].up {
            return vec![self.fail(action, FailureReason::TargetDown)];
        }
        self.install(action.actor, host, privilege)
    }

    fn exec_restore(&mut self, action: &LowLevelAction, host: &HostId) -> Vec<LowLevelEvent> {
        let rt = self.runtime.get_mut(host).expect("checked");
        rt.up = true;
        rt.infections.clear();
        rt.staged.clear();
        rt.action_markers.clear();
        vec![self.emit(
            action.actor,
            LowLevelEventKind::HostRestored { host: host.clone() },
        )]
    }

    fn exec_shutdown(&mut self, action: &LowLevelAction, host: &HostId) -> Vec<LowLevelEvent> {
        let rt = self.runtime.get_mut(host).expect("checked");
        rt.up = false;
        rt.infections.clear();
        vec![self.emit(
            action.actor,
            LowLevelEventKind::HostShutdown { host: host.clone() },
        )]
    }

    fn apply_deploy(&mut self, payload: DeployPayload) {
        match &payload {
            DeployPayload::Host {
                host,
                vuln_defs,
                assets,
            } => {
                for v in vuln_defs {
                    self.env
                        .vulnerabilities
                        .entry(v.id.clone())
                        .or_insert_with(|| v.clone());
                }
                for a in assets {
                    self.env.assets.insert(a.id.clone(), a.clone());
                }
                self.env.hosts.insert(host.id.clone(), host.clone());
                self.runtime.insert(
                    host.id.clone(),
                    HostRuntime {
                        up: true,
                        ..HostRuntime::default()
                    },
                );
            }
            DeployPayload::Credential { credential, on } => {
                self.env
                    .credentials
                    .insert(credential.id.clone(), credential.clone());
                self.env
                    .hosts
                    .get_mut(on)
                    .expect("checked")
                    .stored_credentials
                    .push(credential.id.clone());
            }
            DeployPayload::Data { asset } => {
                self.env.assets.insert(asset.id.clone(), asset.clone());
                self.env
                    .hosts
                    .get_mut(&asset.host)
                    .expect("checked")
                    .data_assets
                    .push(asset.id.clone());
            }
            DeployPayload::User { host, name } => {
                self.env
                    .hosts
                    .get_mut(host)
                    .expect("checked")
                    .users
                    .push(name.clone());
            }
            DeployPayload::HoneyService { host, service } => {
                self.env
                    .hosts
                    .get_mut(host)
                    .expect("checked")
                    .services
                    .push(service.clone());
            }
        }
        self.applied_deploys.push(payload);
    }
}

fn kind_tag(kind: &ActionKind) -> &'static str {
    match kind {
        ActionKind::ScanSubnet { .. } => "scan-subnet",
        ActionKind::ProbeHost { .. } => "probe-host",
        ActionKind::Exploit { .. } => "exploit",
        ActionKind::UseCredential { .. } => "use-credential",
        ActionKind::ReadLocalFiles { .. } => "read-local-files",
        ActionKind::CopyAsset { .. } => "copy-asset",
        ActionKind::InstallImplant { .. } => "install-implant",
        ActionKind::RestoreHost { .. } => "restore-host",
        ActionKind::ShutdownHost { .. } => "shutdown-host",
        ActionKind::Deploy { .. } => "deploy",
        ActionKind::Noop => "noop",
    }
}

fn service_protocol(host: &Host, service_name: &str) -> Protocol {
    host.services
        .iter()
        .find(|s| s.name == service_name)
        .map(|s| s.protocol.clone())
        .unwrap_or(Protocol::Ssh)
}

/// Scan record for one host: its services (filtered to protocols the
/// scanner can actually speak across the network path) and the
/// remotely-visible vulnerability banners on those services.
fn scan_entry(env: &Environment, host: &Host, visible: Option<&BTreeSet<Protocol>>) -> ScanEntry {
    let services: Vec<ServiceBanner> = host
        .services
        .iter()
        .filter(|s| visible.map_or(true, |v| v.contains(&s.protocol)))
        .map(|s| ServiceBanner {
            name: s.name.clone(),
            protocol: s.protocol.clone(),
            port: s.port,
        })
        .collect();
    let listed: BTreeSet<&str> = services.iter().map(|s| s.name.as_str()).collect();
    let vulnerabilities: Vec<VulnBanner> = host
        .vulnerabilities
        .iter()
        .filter_map(|vid| env.vulnerability(vid))
        .filter(|v| v.remote && listed.contains(v.target_service.as_str()))
        .map(|v| VulnBanner {
            id: v.id.clone(),
            protocol: service_protocol(host, &v.target_service),
            grants: v.grants,
            remote: true,
        })
        .collect();
    ScanEntry {
        host: host.id.clone(),
        subnet: host.subnet.clone(),
        services,
        vulnerabilities,
    }
}
