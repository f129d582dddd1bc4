//! Half-step simulator.
//!
//! Every edge traversal takes two half-steps, node to midpoint and midpoint to node. Each tick
//! the scheduler picks which of the agents able to move take their next half-step. Agents meet
//! when they share a node or the midpoint of an edge after a tick in which one of them moved, or
//! when they swap places across one edge in the same tick.

pub mod experiments;
pub mod scheduler;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{enumerate_trails, Configuration};
use crate::memory::{MemId, Token};
use crate::protocol::machine::{AgentState, Decision, Protocol, Status};
use crate::protocol::triples::{build_triple_sequence, TripleSequence};
use crate::trail::Trail;
use crate::view::truncated_view;

pub use scheduler::{Candidate, Scheduler, SchedulerRegistry};

/// Version of the trace line format.
pub const TRACE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_ticks: u64,
    pub max_memory_nodes: usize,
    pub max_trail_nodes: usize,
    /// Cap on the trail family enumerated for stage schedules.
    pub trail_cap: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_ticks: 100_000, max_memory_nodes: 2_000_000, max_trail_nodes: 2_000_000, trail_cap: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Location {
    Node { node: usize },
    /// Midpoint of an edge, endpoints in increasing order.
    Edge { u: usize, pu: u32, v: usize, pv: u32 },
}

impl Location {
    fn edge(a: usize, pa: u32, b: usize, pb: u32) -> Location {
        if (a, pa) <= (b, pb) {
            Location::Edge { u: a, pu: pa, v: b, pv: pb }
        } else {
            Location::Edge { u: b, pu: pb, v: a, pv: pa }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventKind {
    Wake { node: usize, degree: u32 },
    Depart { node: usize, port: u32 },
    Mid { edge: Location },
    Arrive { node: usize, port: u32 },
    Meet { participants: Vec<usize>, location: Location },
    Phase { phase: usize },
    Stage { phase: usize, stage: usize },
    Elect { trail: Trail, node: usize },
    Stopped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub schema: u32,
    pub tick: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub agent: Option<usize>,
    #[serde(flatten)]
    pub event: EventKind,
}

/// A decision taken by an agent at a node, with the memory it was taken from and the number
/// of schedules published at the time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecisionRecord {
    pub tick: u64,
    pub agent: usize,
    pub mem: MemId,
    pub catalogs: usize,
    pub decision: Decision,
}

/// An agent back home at the end of a stage; stage 0 of phase 1 is the end of exploration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageEnd {
    pub agent: usize,
    pub phase: usize,
    pub stage: usize,
    pub mem: MemId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Elected,
    BudgetStopped,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentReport {
    pub home: usize,
    pub at: Location,
    pub status: Status,
    pub memory_tokens: usize,
    pub trail_len: u64,
    /// Marked view nodes in the current mapping.
    pub marks: usize,
    /// Marks, over all mappings held, on view nodes whose graph node has no agent.
    pub false_marks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leader_trail: Option<Trail>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leader_node: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub scheduler: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub ticks: u64,
    pub meetings: u64,
    pub agents: Vec<AgentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
    /// Number of stages in each published schedule.
    pub schedules: Vec<usize>,
    pub memory_nodes: usize,
    pub trail_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Node(usize),
    Mid { from: usize, port: u32, to: usize, entry: u32 },
}

impl Pos {
    fn location(self) -> Location {
        match self {
            Pos::Node(v) => Location::Node { node: v },
            Pos::Mid { from, port, to, entry } => Location::edge(from, port, to, entry),
        }
    }
}

struct Agent {
    home: usize,
    pos: Pos,
    state: AgentState,
    pending: Vec<MemId>,
    elected: Option<(Trail, usize)>,
    last_record: Option<(MemId, usize)>,
    last_phase: usize,
}

pub struct Simulation {
    cfg: Configuration,
    proto: Protocol,
    agents: Vec<Agent>,
    scheduler: Box<dyn Scheduler>,
    budget: Budget,
    tick: u64,
    trace: Vec<TraceEvent>,
    keep_trace: bool,
    decisions: Vec<DecisionRecord>,
    stage_ends: Vec<StageEnd>,
    trails: Option<Arc<Vec<Trail>>>,
    finished: Option<(RunStatus, Option<String>)>,
    meetings: u64,
    branching: Vec<usize>,
}

impl Simulation {
    pub fn new(cfg: &Configuration, scheduler: Box<dyn Scheduler>, budget: Budget) -> Result<Self> {
        if cfg.agent_count() < 2 {
            return Err(Error::Precondition("simulation needs at least two agents".into()));
        }
        let mut proto = Protocol::new(cfg.bound_n(), budget.max_trail_nodes)?;
        let mut agents = Vec::new();
        let mut trace = Vec::new();
        for (i, home) in cfg.occupied_nodes().into_iter().enumerate() {
            let degree = cfg.degree(home) as u32;
            let state = proto.wake(degree);
            trace.push(TraceEvent { schema: TRACE_SCHEMA, tick: 0, agent: Some(i), event: EventKind::Wake { node: home, degree } });
            agents.push(Agent {
                home,
                pos: Pos::Node(home),
                state,
                pending: Vec::new(),
                elected: None,
                last_record: None,
                last_phase: 0,
            });
        }
        Ok(Simulation {
            cfg: cfg.clone(),
            proto,
            agents,
            scheduler,
            budget,
            tick: 0,
            trace,
            keep_trace: true,
            decisions: Vec::new(),
            stage_ends: Vec::new(),
            trails: None,
            finished: None,
            meetings: 0,
            branching: Vec::new(),
        })
    }

    /// Stops recording trace events (decisions and stage ends are still kept).
    pub fn without_trace(mut self) -> Self {
        self.keep_trace = false;
        self.trace.clear();
        self
    }

    pub fn config(&self) -> &Configuration {
        &self.cfg
    }

    pub fn protocol(&self) -> &Protocol {
        &self.proto
    }

    pub fn protocol_mut(&mut self) -> &mut Protocol {
        &mut self.proto
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_state(&self, i: usize) -> &AgentState {
        &self.agents[i].state
    }

    pub fn agent_home(&self, i: usize) -> usize {
        self.agents[i].home
    }

    pub fn memories(&self) -> Vec<MemId> {
        self.agents.iter().map(|a| a.state.mem()).collect()
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.trace)
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    pub fn stage_ends(&self) -> &[StageEnd] {
        &self.stage_ends
    }

    /// Schedules published so far, in phase order.
    pub fn schedules(&self) -> Vec<TripleSequence> {
        self.proto.oracle.catalogs().iter().map(|c| (**c).clone()).collect()
    }

    /// Number of candidates offered to the scheduler at each tick so far.
    pub fn branching(&self) -> &[usize] {
        &self.branching
    }

    pub fn is_finished(&self) -> bool {
        self.finished.is_some()
    }

    fn emit(&mut self, agent: Option<usize>, event: EventKind) {
        if self.keep_trace {
            self.trace.push(TraceEvent { schema: TRACE_SCHEMA, tick: self.tick, agent, event });
        }
    }

    fn finish(&mut self, status: RunStatus, reason: Option<String>) {
        if let Some(r) = &reason {
            self.emit(None, EventKind::Stopped { reason: r.clone() });
        }
        self.finished = Some((status, reason));
    }

    /// Runs one tick. Returns false once the run is over.
    pub fn step(&mut self) -> bool {
        if self.finished.is_some() {
            return false;
        }
        if self.tick >= self.budget.max_ticks {
            self.finish(RunStatus::BudgetStopped, Some("tick budget exhausted".into()));
            return false;
        }
        self.tick += 1;
        match self.tick_inner() {
            Ok(()) => {}
            Err(e @ (Error::Budget(_) | Error::EnumerationCap { .. })) => {
                self.finish(RunStatus::BudgetStopped, Some(e.to_string()));
            }
            Err(e) => self.finish(RunStatus::Failed, Some(e.to_string())),
        }
        self.finished.is_none()
    }

    pub fn run(&mut self) -> RunOutcome {
        while self.step() {}
        self.outcome()
    }

    fn trail_family(&mut self) -> Result<Arc<Vec<Trail>>> {
        if self.trails.is_none() {
            let t = enumerate_trails(&self.cfg, self.cfg.bound_n(), true, self.budget.trail_cap)?;
            self.trails = Some(Arc::new(t));
        }
        Ok(self.trails.clone().unwrap())
    }

    fn publish_ready(&mut self) -> Result<()> {
        loop {
            let k = self.proto.catalog_count();
            if k >= 3 {
                return Ok(());
            }
            for a in &mut self.agents {
                if matches!(a.pos, Pos::Node(_)) {
                    self.proto.settle(&mut a.state)?;
                }
            }
            if !self.agents.iter().all(|a| a.state.status() == Status::Waiting(k + 1)) {
                return Ok(());
            }
            let labels: Vec<_> = self.agents.iter().map(|a| (*a.state.labels()[k]).clone()).collect();
            let trails = self.trail_family()?;
            self.proto.publish(build_triple_sequence(&labels, trails)?)?;
        }
    }

    fn tick_inner(&mut self) -> Result<()> {
        self.publish_ready()?;
        let k = self.proto.catalog_count();
        let mut candidates = Vec::new();
        let mut exits = vec![None; self.agents.len()];
        for i in 0..self.agents.len() {
            let a = &mut self.agents[i];
            let Pos::Node(v) = a.pos else {
                candidates.push(Candidate { agent: i, planned: a.state.planned(), mid_edge: true });
                continue;
            };
            let d = self.proto.decide(&mut a.state)?;
            let key = (a.state.mem(), k);
            if a.last_record != Some(key) {
                a.last_record = Some(key);
                self.decisions.push(DecisionRecord { tick: self.tick, agent: i, mem: key.0, catalogs: k, decision: d.clone() });
            }
            let phase = a.state.phase();
            let phase_changed = phase != a.last_phase;
            a.last_phase = phase;
            if phase_changed && (1..=3).contains(&phase) {
                self.emit(Some(i), EventKind::Phase { phase });
            }
            let a = &mut self.agents[i];
            match d {
                Decision::Exit(q) => {
                    exits[i] = Some(q);
                    candidates.push(Candidate { agent: i, planned: a.state.planned(), mid_edge: false });
                }
                Decision::Elect(trail) => {
                    if a.elected.is_none() {
                        let node = self
                            .cfg
                            .trail_end(v, trail.ports())
                            .ok_or_else(|| Error::Protocol("leader trail is infeasible".into()))?;
                        a.elected = Some((trail.clone(), node));
                        self.emit(Some(i), EventKind::Elect { trail, node });
                    }
                }
                Decision::Stay => {}
            }
        }
        if candidates.is_empty() {
            if self.agents.iter().all(|a| a.elected.is_some()) {
                self.finish(RunStatus::Elected, None);
                return Ok(());
            }
            return Err(Error::Protocol("no agent can move".into()));
        }
        self.branching.push(candidates.len());
        let mut picked = self.scheduler.select(self.tick, &candidates);
        picked.sort_unstable();
        picked.dedup();
        if picked.is_empty() || picked.iter().any(|&p| p >= candidates.len()) {
            return Err(Error::Protocol(format!("scheduler {} made an invalid choice", self.scheduler.name())));
        }

        let mut moved = vec![false; self.agents.len()];
        // state before entering a node, for agents that swapped places across an edge
        let mut before_enter: Vec<Option<(AgentState, u32)>> = vec![None; self.agents.len()];
        for &c in &picked {
            let i = candidates[c].agent;
            moved[i] = true;
            match self.agents[i].pos {
                Pos::Node(v) => {
                    let q = exits[i].expect("node candidates decided to exit");
                    let (u, p) = self.cfg.traverse_port(v, q)?;
                    let before = self.agents[i].state.progress();
                    self.proto.feed(&mut self.agents[i].state, Token::Exit(q))?;
                    let after = self.agents[i].state.progress();
                    self.agents[i].pos = Pos::Mid { from: v, port: q, to: u, entry: p };
                    self.emit(Some(i), EventKind::Depart { node: v, port: q });
                    if after != before {
                        self.emit(Some(i), EventKind::Stage { phase: after.phase, stage: after.stage });
                    }
                    self.emit(Some(i), EventKind::Mid { edge: Location::edge(v, q, u, p) });
                }
                Pos::Mid { to, entry, .. } => {
                    let prev = self.agents[i].state.clone();
                    let degree = self.cfg.degree(to) as u32;
                    self.proto.feed(&mut self.agents[i].state, Token::Enter(entry, degree))?;
                    self.agents[i].pos = Pos::Node(to);
                    self.emit(Some(i), EventKind::Arrive { node: to, port: entry });
                    let st = &self.agents[i].state;
                    let explored = prev.status() == Status::Exploring && st.status() != Status::Exploring;
                    let finished_stage = prev.route_position().is_some_and(|(pos, len)| pos + 1 == len);
                    if explored {
                        self.stage_ends.push(StageEnd { agent: i, phase: 1, stage: 0, mem: st.mem() });
                    } else if finished_stage {
                        let (phase, stage) = prev.planned();
                        self.stage_ends.push(StageEnd { agent: i, phase, stage, mem: st.mem() });
                    }
                    before_enter[i] = Some((prev, entry));
                }
            }
        }

        let mut snapshots: Vec<Vec<MemId>> = vec![Vec::new(); self.agents.len()];
        let mut groups: BTreeMap<Location, Vec<usize>> = BTreeMap::new();
        for (i, a) in self.agents.iter().enumerate() {
            groups.entry(a.pos.location()).or_default().push(i);
        }
        let mut met = Vec::new();
        for (loc, group) in &groups {
            if group.len() < 2 || !group.iter().any(|&i| moved[i]) {
                continue;
            }
            for &i in group {
                for &j in group {
                    if i != j {
                        snapshots[i].push(self.agents[j].state.mem());
                    }
                }
            }
            for &j in group {
                self.proto.register(&self.agents[j].state);
            }
            met.push((group.clone(), *loc));
        }
        // swaps across one edge: one agent arrived at y by the port the other just left y by
        for i in 0..self.agents.len() {
            let Some((prev, arrived_by)) = &before_enter[i] else { continue };
            let Pos::Node(y) = self.agents[i].pos else { continue };
            for j in 0..self.agents.len() {
                if j == i || !moved[j] || before_enter[j].is_some() {
                    continue;
                }
                let Pos::Mid { from, port, to, entry } = self.agents[j].pos else { continue };
                if from == y && port == *arrived_by {
                    let prev = prev.clone();
                    self.proto.register(&prev);
                    self.proto.register(&self.agents[j].state);
                    snapshots[i].push(self.agents[j].state.mem());
                    snapshots[j].push(prev.mem());
                    met.push((vec![i.min(j), i.max(j)], Location::edge(from, port, to, entry)));
                }
            }
        }
        for (group, loc) in met {
            self.meetings += 1;
            self.emit(None, EventKind::Meet { participants: group, location: loc });
        }
        for (i, snaps) in snapshots.into_iter().enumerate() {
            let a = &mut self.agents[i];
            for s in snaps {
                if !a.pending.contains(&s) {
                    a.pending.push(s);
                }
            }
        }
        for a in &mut self.agents {
            if matches!(a.pos, Pos::Node(_)) && !a.pending.is_empty() {
                let list = std::mem::take(&mut a.pending);
                self.proto.feed(&mut a.state, Token::Meet(list))?;
            }
        }
        if self.proto.mem.node_count() > self.budget.max_memory_nodes {
            return Err(Error::Budget(format!("memory exceeds {} nodes", self.budget.max_memory_nodes)));
        }
        Ok(())
    }

    pub fn outcome(&self) -> RunOutcome {
        let n = self.cfg.bound_n();
        let depth = 3 * (n - 1);
        let agents: Vec<AgentReport> = self
            .agents
            .iter()
            .map(|a| {
                let st = &a.state;
                let mut false_marks = 0;
                let mut marks = 0;
                if let Some(f) = st.mapping() {
                    let truth = truncated_view(&self.cfg, a.home, depth);
                    let bad = |m: &crate::view::BinaryMapping| {
                        (0..truth.len())
                            .filter(|&x| m.get(x) && !self.cfg.is_occupied(truth.oracle_origin(x).unwrap()))
                            .count()
                    };
                    marks = f.count();
                    false_marks = bad(f) + st.labels().iter().map(|l| l.mappings.iter().map(bad).sum::<usize>()).sum::<usize>();
                }
                AgentReport {
                    home: a.home,
                    at: a.pos.location(),
                    status: st.status(),
                    memory_tokens: self.proto.mem.len(st.mem()),
                    trail_len: self.proto.mem.trail_len(st.mem()),
                    marks,
                    false_marks,
                    leader_trail: a.elected.as_ref().map(|e| e.0.clone()),
                    leader_node: a.elected.as_ref().map(|e| e.1),
                }
            })
            .collect();
        let (status, reason) = self.finished.clone().unwrap_or((RunStatus::BudgetStopped, Some("not finished".into())));
        let consistent = (status == RunStatus::Elected)
            .then(|| agents.windows(2).all(|w| w[0].leader_node == w[1].leader_node));
        RunOutcome {
            scheduler: self.scheduler.name().to_string(),
            status,
            reason,
            ticks: self.tick,
            meetings: self.meetings,
            agents,
            consistent,
            diagnosis: (consistent == Some(false)).then(|| "agents resolved different leaders".to_string()),
            schedules: self.proto.oracle.catalogs().iter().map(|c| c.len()).collect(),
            memory_nodes: self.proto.mem.node_count(),
            trail_nodes: self.proto.oracle.arena.node_count(),
        }
    }
}

/// Stack size for threads that replay memories; nested meetings recurse.
pub const REPLAY_STACK: usize = 512 << 20;

/// Runs `f` on a thread with a large stack.
pub fn with_large_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(REPLAY_STACK)
        .spawn(f)
        .expect("spawn simulation thread")
        .join()
        .expect("simulation thread panicked")
}

/// Runs the protocol on `cfg` under the named scheduler.
pub fn simulate(cfg: &Configuration, scheduler: &str, seed: u64, budget: Budget) -> Result<(RunOutcome, Vec<TraceEvent>)> {
    let sched = SchedulerRegistry::standard().create(scheduler, seed)?;
    let cfg = cfg.clone();
    with_large_stack(move || {
        let mut sim = Simulation::new(&cfg, sched, budget)?;
        let out = sim.run();
        Ok((out, sim.take_trace()))
    })
}

/// Replays every recorded decision from its memory alone, in contexts that only know the
/// schedules published when the decision was taken. Returns the number of mismatches.
pub fn replay_decisions(sim: &Simulation) -> Result<usize> {
    let schedules = sim.schedules();
    let mut by_count: BTreeMap<usize, Vec<&DecisionRecord>> = BTreeMap::new();
    for r in sim.decisions() {
        by_count.entry(r.catalogs).or_default().push(r);
    }
    let mut bad = 0;
    for (k, records) in by_count {
        let mut fresh = Protocol::new(sim.proto.n(), usize::MAX)?;
        fresh.mem = sim.proto.mem.clone();
        for s in &schedules[..k] {
            fresh.publish(s.clone())?;
        }
        for r in records {
            if fresh.decide_memory(r.mem)? != r.decision {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExhaustiveReport {
    pub runs: u64,
    pub elected: u64,
    pub budget_stopped: u64,
    /// Elected runs in which agents resolved different leaders.
    pub inconsistent: u64,
    /// Scripts and reasons of failed runs.
    pub failed: Vec<(Vec<usize>, String)>,
}

/// Runs the protocol under every schedule that moves one agent per tick, up to `max_ticks`
/// ticks. Fails with an enumeration cap error past `cap` runs.
pub fn enumerate_runs(cfg: &Configuration, max_ticks: u64, cap: u64) -> Result<ExhaustiveReport> {
    let cfg = cfg.clone();
    with_large_stack(move || {
        let budget = Budget { max_ticks, ..Budget::default() };
        let mut report = ExhaustiveReport::default();
        let mut script: Vec<usize> = Vec::new();
        loop {
            if report.runs >= cap {
                return Err(Error::EnumerationCap { count: report.runs as u128 + 1, cap: cap as u128 });
            }
            let sched = Box::new(scheduler::Scripted::new(script.clone()));
            let mut sim = Simulation::new(&cfg, sched, budget)?.without_trace();
            let out = sim.run();
            report.runs += 1;
            match out.status {
                RunStatus::Elected => {
                    report.elected += 1;
                    if out.consistent == Some(false) {
                        report.inconsistent += 1;
                    }
                }
                RunStatus::BudgetStopped => report.budget_stopped += 1,
                RunStatus::Failed => report.failed.push((script.clone(), out.reason.unwrap_or_default())),
            }
            let branching = sim.branching();
            let choice = |k: usize| script.get(k).copied().unwrap_or(0);
            let Some(k) = (0..branching.len()).rev().find(|&k| choice(k) + 1 < branching[k]) else {
                return Ok(report);
            };
            let mut next: Vec<usize> = (0..k).map(choice).collect();
            next.push(choice(k) + 1);
            script = next;
        }
    })
}
