//! Adversarial schedulers, registered by name and picked at run time.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An agent that could take a half-step this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub agent: usize,
    /// Phase and stage the agent is working on; `(0, 0)` while exploring.
    pub planned: (usize, usize),
    pub mid_edge: bool,
}

pub trait Scheduler: Send {
    fn name(&self) -> &'static str;

    /// Positions in `candidates` of the agents that move now. Must be non-empty when
    /// `candidates` is.
    fn select(&mut self, tick: u64, candidates: &[Candidate]) -> Vec<usize>;
}

/// Everybody moves every tick.
#[derive(Debug, Default)]
pub struct Synchronous;

impl Scheduler for Synchronous {
    fn name(&self) -> &'static str {
        "synchronous"
    }

    fn select(&mut self, _tick: u64, candidates: &[Candidate]) -> Vec<usize> {
        (0..candidates.len()).collect()
    }
}

/// Each candidate moves with probability one half; one is forced if none was drawn.
#[derive(Debug)]
pub struct RandomScheduler {
    rng: ChaCha8Rng,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        RandomScheduler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Scheduler for RandomScheduler {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&mut self, _tick: u64, candidates: &[Candidate]) -> Vec<usize> {
        let mut out: Vec<usize> = (0..candidates.len()).filter(|_| self.rng.gen_bool(0.5)).collect();
        if out.is_empty() && !candidates.is_empty() {
            out.push(self.rng.gen_range(0..candidates.len()));
        }
        out
    }
}

/// One agent at a time: the one furthest behind in (phase, stage), lowest ordinal first.
#[derive(Debug, Default)]
pub struct StageBarrierSerial;

impl Scheduler for StageBarrierSerial {
    fn name(&self) -> &'static str {
        "stage-barrier-serial"
    }

    fn select(&mut self, _tick: u64, candidates: &[Candidate]) -> Vec<usize> {
        candidates
            .iter()
            .enumerate()
            .min_by_key(|(_, c)| (c.planned, c.agent))
            .map(|(i, _)| vec![i])
            .unwrap_or_default()
    }
}

/// One agent per tick, following a script of choices; past the script it takes the first
/// candidate. Records the number of options at every tick so callers can enumerate scripts.
#[derive(Debug, Default, Clone)]
pub struct Scripted {
    pub script: Vec<usize>,
    pub branching: Vec<usize>,
}

impl Scripted {
    pub fn new(script: Vec<usize>) -> Self {
        Scripted { script, branching: Vec::new() }
    }
}

impl Scheduler for Scripted {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn select(&mut self, _tick: u64, candidates: &[Candidate]) -> Vec<usize> {
        if candidates.is_empty() {
            return Vec::new();
        }
        let k = self.branching.len();
        self.branching.push(candidates.len());
        let pick = self.script.get(k).copied().unwrap_or(0).min(candidates.len() - 1);
        vec![pick]
    }
}

pub type Factory = fn(u64) -> Box<dyn Scheduler>;

/// Scheduler constructors by name. Each takes the run seed.
#[derive(Clone)]
pub struct SchedulerRegistry {
    entries: BTreeMap<&'static str, Factory>,
}

impl SchedulerRegistry {
    pub fn empty() -> Self {
        SchedulerRegistry { entries: BTreeMap::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register("synchronous", |_| Box::new(Synchronous));
        r.register("random", |seed| Box::new(RandomScheduler::new(seed)));
        r.register("stage-barrier-serial", |_| Box::new(StageBarrierSerial));
        r.register("exhaustive", |_| Box::new(Scripted::default()));
        r
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn create(&self, name: &str, seed: u64) -> Result<Box<dyn Scheduler>> {
        let f = self.entries.get(name).ok_or_else(|| {
            Error::Precondition(format!("unknown scheduler {name:?}; known: {}", self.names().join(", ")))
        })?;
        Ok(f(seed))
    }
}
