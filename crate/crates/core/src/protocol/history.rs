//! Histories: the trail an agent with a given label has walked by the end of a given stage.
//!
//! A history depends only on the label, the stage and the published stage schedules, so any agent
//! can compute the history of any label it reads in a schedule.

use std::collections::HashMap;
use std::sync::Arc;

use crate::compressed::{AutomatonRunner, Handle, TrailArena};
use crate::error::{Error, Result};
use crate::protocol::label::Label;
use crate::protocol::triples::TripleSequence;
use crate::view::{TruncatedView, ViewAutomaton, ViewCode};

#[derive(Debug, Clone)]
pub struct ViewEntry {
    pub view: Arc<TruncatedView>,
    pub automaton: ViewAutomaton,
    pub dfs: Handle,
    runner: AutomatonRunner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Change {
    pub stage: u32,
    pub history: Handle,
    pub route: Handle,
}

#[derive(Debug, Clone, Default)]
struct PhaseHistory {
    done: usize,
    base: Vec<Handle>,
    current: Vec<Handle>,
    changes: Vec<Vec<Change>>,
}

/// Histories of every label appearing in the published schedules.
#[derive(Debug, Clone)]
pub struct HistoryOracle {
    n: usize,
    pub arena: TrailArena,
    views: Vec<ViewEntry>,
    view_index: HashMap<ViewCode, usize>,
    catalogs: Vec<Arc<TripleSequence>>,
    phases: Vec<PhaseHistory>,
}

impl HistoryOracle {
    pub fn new(n: usize, max_trail_nodes: usize) -> Self {
        HistoryOracle {
            n,
            arena: TrailArena::new(max_trail_nodes),
            views: Vec::new(),
            view_index: HashMap::new(),
            catalogs: Vec::new(),
            phases: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Registers the view behind a code; returns its index.
    pub fn intern_view(&mut self, code: &ViewCode) -> Result<usize> {
        if let Some(&i) = self.view_index.get(code) {
            return Ok(i);
        }
        let view = TruncatedView::decode(code)?;
        let need = 3 * self.n.saturating_sub(1);
        if view.depth() != need {
            return Err(Error::Precondition(format!("label view has depth {}, expected {need}", view.depth())));
        }
        let automaton = ViewAutomaton::new(&view, self.n)?;
        let dfs = self.arena.leaf(view.dfs_trail().ports())?;
        let i = self.views.len();
        self.views.push(ViewEntry { view: Arc::new(view), automaton, dfs, runner: AutomatonRunner::new() });
        self.view_index.insert(code.clone(), i);
        Ok(i)
    }

    pub fn view(&self, i: usize) -> &ViewEntry {
        &self.views[i]
    }

    pub fn catalogs(&self) -> &[Arc<TripleSequence>] {
        &self.catalogs
    }

    pub fn catalog(&self, phase: usize) -> Option<&Arc<TripleSequence>> {
        self.catalogs.get(phase.wrapping_sub(1))
    }

    /// Publishes the schedule of the next phase.
    pub fn publish(&mut self, seq: TripleSequence) -> Result<()> {
        let phase = self.catalogs.len() + 1;
        if seq.phase() != phase {
            return Err(Error::Precondition(format!("schedule for phase {} published as phase {phase}", seq.phase())));
        }
        if phase > 3 {
            return Err(Error::Precondition("only three phases".into()));
        }
        for l in seq.labels() {
            self.intern_view(&l.code)?;
        }
        let k = seq.labels().len();
        self.catalogs.push(Arc::new(seq));
        self.phases.push(PhaseHistory {
            done: 0,
            base: Vec::new(),
            current: Vec::new(),
            changes: vec![Vec::new(); k],
        });
        Ok(())
    }

    fn label_slot(&self, label: &Label) -> Result<(usize, u32)> {
        let p = label.length();
        let cat = self
            .catalog(p)
            .ok_or_else(|| Error::Precondition(format!("no schedule published for phase {p}")))?;
        let i = cat
            .label_index(label)
            .ok_or_else(|| Error::Precondition("label not in the phase schedule".into()))?;
        Ok((p, i))
    }

    fn init_phase(&mut self, p: usize) -> Result<()> {
        if !self.phases[p - 1].base.is_empty() {
            return Ok(());
        }
        let cat = self.catalogs[p - 1].clone();
        let mut base = Vec::with_capacity(cat.labels().len());
        for l in cat.labels() {
            let h = if p == 1 {
                let v = self.intern_view(&l.code)?;
                self.views[v].dfs
            } else {
                let prev = l.prefix(p - 1);
                let last = self.catalogs[p - 2].len();
                self.history(&prev, last)?
            };
            base.push(h);
        }
        let ph = &mut self.phases[p - 1];
        ph.current = base.clone();
        ph.base = base;
        Ok(())
    }

    /// Extends the computed histories of phase `p` through stage `target`.
    fn ensure(&mut self, p: usize, target: usize) -> Result<()> {
        self.init_phase(p)?;
        let cat = self.catalogs[p - 1].clone();
        let target = target.min(cat.len());
        while self.phases[p - 1].done < target {
            let s = self.phases[p - 1].done + 1;
            let t = cat.stage(s);
            let trail = cat.trail(t.trail).clone();
            let old_a = self.phases[p - 1].current[t.first as usize];
            let old_b = self.phases[p - 1].current[t.second as usize];
            let tf = self.arena.leaf(trail.ports())?;
            let tr = self.arena.leaf(trail.reversed().ports())?;
            // first label: T, then the partner's history reversed, then T reversed
            let va = self.intern_view(&cat.label(t.first).code)?;
            let mut new = Vec::new();
            if self.feasible(va, trail.ports(), old_b.reversed())? {
                let route = self.arena.concat_all(&[tf, old_b.reversed(), tr])?;
                new.push((t.first, route, old_a));
            }
            if t.second != t.first {
                let vb = self.intern_view(&cat.label(t.second).code)?;
                if self.feasible(vb, trail.reversed().ports(), old_a.reversed())? {
                    let route = self.arena.concat_all(&[tr, old_a.reversed(), tf])?;
                    new.push((t.second, route, old_b));
                }
            }
            for (who, route, old) in new {
                let h = self.arena.concat(old, route)?;
                let ph = &mut self.phases[p - 1];
                ph.current[who as usize] = h;
                ph.changes[who as usize].push(Change { stage: s as u32, history: h, route });
            }
            self.phases[p - 1].done = s;
        }
        Ok(())
    }

    /// Whether `head` followed by `tail` is feasible from the root of view `v`.
    fn feasible(&mut self, v: usize, head: &[u32], tail: Handle) -> Result<bool> {
        let ViewEntry { automaton, runner, .. } = &mut self.views[v];
        let Some(s) = automaton.run(automaton.root(), head) else {
            return Ok(false);
        };
        Ok(runner.run(&self.arena, automaton, tail, s).is_some())
    }

    /// Feasibility of an arbitrary compressed trail from the root of view `v`.
    pub fn feasible_from(&mut self, v: usize, h: Handle) -> bool {
        let ViewEntry { automaton, runner, .. } = &mut self.views[v];
        let root = automaton.root();
        runner.run(&self.arena, automaton, h, root).is_some()
    }

    /// End state of `h` from the root of view `v`, as a view-automaton state.
    pub fn end_state(&mut self, v: usize, h: Handle) -> Option<u32> {
        let ViewEntry { automaton, runner, .. } = &mut self.views[v];
        let root = automaton.root();
        runner.run(&self.arena, automaton, h, root)
    }

    /// The history of `label` at the end of stage `s` of its phase; stage 0 is the start of the
    /// phase.
    pub fn history(&mut self, label: &Label, s: usize) -> Result<Handle> {
        let (p, i) = self.label_slot(label)?;
        self.ensure(p, s)?;
        let ph = &self.phases[p - 1];
        let ch = &ph.changes[i as usize];
        let k = ch.partition_point(|c| c.stage as usize <= s);
        Ok(if k == 0 { ph.base[i as usize] } else { ch[k - 1].history })
    }

    /// The route an agent with `label` follows in stage `s`, or `None` when it stays.
    pub fn stage_route(&mut self, label: &Label, s: usize) -> Result<Option<Handle>> {
        let (p, i) = self.label_slot(label)?;
        self.ensure(p, s)?;
        let ch = &self.phases[p - 1].changes[i as usize];
        Ok(ch.binary_search_by_key(&(s as u32), |c| c.stage).ok().map(|k| ch[k].route))
    }

    /// First stage at or after `from` in which `label` moves.
    pub fn next_moving_stage(&mut self, label: &Label, from: usize) -> Result<Option<(usize, Handle)>> {
        let (p, i) = self.label_slot(label)?;
        let total = self.catalogs[p - 1].len();
        let mut upto = from.min(total);
        loop {
            self.ensure(p, upto)?;
            let ch = &self.phases[p - 1].changes[i as usize];
            let k = ch.partition_point(|c| (c.stage as usize) < from);
            if let Some(c) = ch.get(k) {
                return Ok(Some((c.stage as usize, c.route)));
            }
            if upto >= total {
                return Ok(None);
            }
            upto = (upto * 2).max(upto + 64).min(total);
        }
    }

    /// Moving stages of `label` in its phase with the history length after each.
    ///
    /// Lengths come from the shared trail store without expanding any trail. Every moving
    /// stage appends a partner's whole history, so lengths grow at least like a Fibonacci
    /// sequence and following the schedule to its end is out of reach even on four nodes:
    ///
    /// ```
    /// use std::sync::Arc;
    /// use anonelect::fixtures;
    /// use anonelect::graph::enumerate_trails;
    /// use anonelect::protocol::{build_triple_sequence, initial_label, HistoryOracle};
    /// use anonelect::view::truncated_view;
    ///
    /// // two agents facing each other across an oriented four-ring
    /// let cfg = fixtures::oriented_ring(4).with_occupied(&[0, 2]).unwrap();
    /// let n = cfg.bound_n();
    /// let labels: Vec<_> = cfg
    ///     .occupied_nodes()
    ///     .into_iter()
    ///     .map(|v| initial_label(&truncated_view(&cfg, v, 3 * (n - 1)), n).unwrap())
    ///     .collect();
    /// let trails = Arc::new(enumerate_trails(&cfg, n, true, 1 << 20).unwrap());
    /// let mut oracle = HistoryOracle::new(n, 1 << 22);
    /// oracle.publish(build_triple_sequence(&labels, trails).unwrap()).unwrap();
    ///
    /// let lengths: Vec<u64> = oracle.moving_stage_lengths(&labels[0]).unwrap().iter().map(|m| m.1).collect();
    /// assert!(lengths.len() >= 30);
    /// for k in 2..lengths.len() {
    ///     assert!(lengths[k] >= lengths[k - 1] + lengths[k - 2]);
    /// }
    /// // far past anything a walk could cover
    /// assert!(*lengths.last().unwrap() > 1 << 32);
    /// ```
    pub fn moving_stage_lengths(&mut self, label: &Label) -> Result<Vec<(usize, u64)>> {
        let (p, i) = self.label_slot(label)?;
        let total = self.catalogs[p - 1].len();
        self.ensure(p, total)?;
        Ok(self.phases[p - 1].changes[i as usize]
            .iter()
            .map(|c| (c.stage as usize, self.arena.len(c.history)))
            .collect())
    }
}
