//! The agent state machine.
//!
//! An agent's state is a function of its memory alone, given the published stage schedules.
//! [`Protocol`] replays memories token by token, caching states at registered memories, and
//! answers what an agent with a given memory does next.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::compressed::Handle;
use crate::error::{Error, Result};
use crate::memory::{MemId, MemoryArena, Token};
use crate::protocol::history::HistoryOracle;
use crate::protocol::label::Label;
use crate::protocol::leader::choose_leader;
use crate::protocol::triples::TripleSequence;
use crate::trail::Trail;
use crate::view::{compute_transition, BinaryMapping, TruncatedView, ViewCode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Stay,
    Exit(u32),
    Elect(Trail),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Exploring,
    /// Waiting for the schedule of this phase.
    Waiting(usize),
    Moving { phase: usize, stage: usize },
    Done,
}

/// Trail of complete edges of a memory, optionally without its last edge or with one more
/// edge appended.
#[derive(Debug, Clone, Copy)]
struct Walk {
    mem: MemId,
    cut: bool,
    extra: Option<[u32; 2]>,
}

impl Walk {
    fn len(&self, arena: &MemoryArena) -> u64 {
        let base = arena.trail_len(self.mem);
        match (self.cut, self.extra) {
            (true, _) => base - 2,
            (false, Some(_)) => base + 2,
            _ => base,
        }
    }

    /// Last `k` ports.
    fn suffix(&self, arena: &MemoryArena, k: usize) -> Vec<u32> {
        if self.cut {
            let mut v = arena.trail_suffix(self.mem, k + 2);
            v.truncate(v.len() - 2);
            return v;
        }
        match self.extra {
            Some(e) => {
                let mut v = arena.trail_suffix(self.mem, k.saturating_sub(2));
                v.extend(e);
                v.drain(..v.len().saturating_sub(k));
                v
            }
            None => arena.trail_suffix(self.mem, k),
        }
    }
}

#[derive(Debug, Clone)]
struct Frame {
    degree: u32,
    next: u32,
    entry: u32,
}

/// Depth-first exploration of the view, run before the first phase.
#[derive(Debug, Clone)]
struct Exploration {
    stack: Vec<Frame>,
    code: Vec<u32>,
    last_exit: u32,
    descending: bool,
}

impl Exploration {
    fn next_exit(&self, depth: usize) -> u32 {
        let top = self.stack.last().expect("root frame");
        if self.stack.len() - 1 < depth && top.next < top.degree {
            top.next
        } else {
            top.entry
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cursor {
    stage: usize,
    route: Handle,
    pos: u64,
    len: u64,
    start: u64,
}

/// Phase and stage of the last stage the agent has started moving in, with the trail length
/// at its start. `(0, 0)` before any move of a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Progress {
    pub phase: usize,
    pub stage: usize,
    pub start: u64,
}

impl Progress {
    fn key(&self) -> (usize, usize) {
        (self.phase, self.stage)
    }
}

#[derive(Debug, Clone)]
pub struct AgentState {
    mem: MemId,
    explore: Option<Exploration>,
    view: Option<usize>,
    labels: Vec<Arc<Label>>,
    phase: usize,
    next_stage: usize,
    route: Option<Cursor>,
    progress: Progress,
    acc: Option<Arc<BinaryMapping>>,
    completion: Option<Arc<BinaryMapping>>,
    deferred: Vec<(MemId, MemId)>,
    leader: Option<Trail>,
}

impl AgentState {
    pub fn mem(&self) -> MemId {
        self.mem
    }

    /// Current phase: 0 while exploring, 4 once the leader is chosen.
    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn labels(&self) -> &[Arc<Label>] {
        &self.labels
    }

    pub fn progress(&self) -> Progress {
        self.progress
    }

    /// Stage planned or under way, for schedulers.
    pub fn planned(&self) -> (usize, usize) {
        match &self.route {
            Some(c) => (self.phase, c.stage),
            None => (self.phase, self.next_stage.saturating_sub(1)),
        }
    }

    pub fn view_index(&self) -> Option<usize> {
        self.view
    }

    /// Marks derived from all meetings so far.
    pub fn mapping(&self) -> Option<&BinaryMapping> {
        self.acc.as_deref()
    }

    pub fn leader(&self) -> Option<&Trail> {
        self.leader.as_ref()
    }

    /// Number of ports of the current route already taken, and its length.
    pub fn route_position(&self) -> Option<(u64, u64)> {
        self.route.map(|c| (c.pos, c.len))
    }

    pub fn status(&self) -> Status {
        if self.explore.is_some() {
            Status::Exploring
        } else if self.phase > 3 {
            Status::Done
        } else if let Some(c) = &self.route {
            Status::Moving { phase: self.phase, stage: c.stage }
        } else {
            Status::Waiting(self.phase)
        }
    }
}

/// What a meeting confirms, as seen from one of the two agents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Confirmation {
    /// The agent's own part of the confirmed trail, when the agent confirms.
    pub own: Option<Trail>,
    /// The partner's part, when the partner confirms.
    pub partner: Option<Trail>,
}

/// Shared context: memories, schedules, histories and cached states.
pub struct Protocol {
    n: usize,
    depth: usize,
    pub mem: MemoryArena,
    pub oracle: HistoryOracle,
    states: HashMap<MemId, Arc<AgentState>>,
    near: HashMap<usize, (Arc<TruncatedView>, Arc<Vec<usize>>)>,
}

impl Protocol {
    pub fn new(n: usize, max_trail_nodes: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition("the size bound must be at least 2".into()));
        }
        Ok(Protocol {
            n,
            depth: 3 * (n - 1),
            mem: MemoryArena::new(),
            oracle: HistoryOracle::new(n, max_trail_nodes),
            states: HashMap::new(),
            near: HashMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn publish(&mut self, seq: TripleSequence) -> Result<()> {
        self.oracle.publish(seq)
    }

    pub fn catalog_count(&self) -> usize {
        self.oracle.catalogs().len()
    }

    pub fn wake(&mut self, degree: u32) -> AgentState {
        let mem = self.mem.wake(degree);
        AgentState {
            mem,
            explore: Some(Exploration {
                stack: vec![Frame { degree, next: 0, entry: 0 }],
                code: vec![degree],
                last_exit: 0,
                descending: false,
            }),
            view: None,
            labels: Vec::new(),
            phase: 0,
            next_stage: 1,
            route: None,
            progress: Progress { phase: 0, stage: 0, start: 0 },
            acc: None,
            completion: None,
            deferred: Vec::new(),
            leader: None,
        }
    }

    /// Caches `st` as the state of its memory.
    pub fn register(&mut self, st: &AgentState) {
        self.states.entry(st.mem).or_insert_with(|| Arc::new(st.clone()));
    }

    /// The state of an agent whose memory is `m`.
    pub fn state_at(&mut self, m: MemId) -> Result<AgentState> {
        if let Some(s) = self.states.get(&m) {
            return Ok((**s).clone());
        }
        let mut tail = Vec::new();
        let mut cur = m;
        let mut st = loop {
            if let Some(s) = self.states.get(&cur) {
                break (**s).clone();
            }
            match self.mem.prev(cur) {
                Some(p) => {
                    tail.push(cur);
                    cur = p;
                }
                None => match self.mem.token(cur) {
                    Token::Wake(d) => {
                        let d = *d;
                        break self.wake(d);
                    }
                    _ => return Err(Error::InvalidMemory("memory does not start with a wake token".into())),
                },
            }
        };
        for id in tail.into_iter().rev() {
            let tok = self.mem.token(id).clone();
            self.feed(&mut st, tok)?;
            debug_assert_eq!(st.mem, id);
        }
        self.states.insert(m, Arc::new(st.clone()));
        Ok(st)
    }

    /// What an agent with memory `m` does next.
    pub fn decide_memory(&mut self, m: MemId) -> Result<Decision> {
        let mut st = self.state_at(m)?;
        self.decide(&mut st)
    }

    /// Binary mapping computed from everything recorded in `m`.
    pub fn update_label(&mut self, m: MemId) -> Result<BinaryMapping> {
        let st = self.state_at(m)?;
        st.acc
            .map(|a| (*a).clone())
            .ok_or_else(|| Error::Precondition("the agent has not finished exploring".into()))
    }

    pub fn decide(&mut self, st: &mut AgentState) -> Result<Decision> {
        if let Some(e) = &st.explore {
            return Ok(Decision::Exit(e.next_exit(self.depth)));
        }
        self.settle(st)?;
        if let Some(c) = &st.route {
            let p = self.oracle.arena.port_at(c.route, c.pos).ok_or_else(|| Error::Protocol("route cursor out of range".into()))?;
            return Ok(Decision::Exit(p));
        }
        if let Some(t) = &st.leader {
            return Ok(Decision::Elect(t.clone()));
        }
        Ok(Decision::Stay)
    }

    /// Advances through stages that need no move, phases that are over, and into the next
    /// route, as far as the published schedules allow.
    pub fn settle(&mut self, st: &mut AgentState) -> Result<()> {
        loop {
            if st.explore.is_some() || st.route.is_some() || st.phase > 3 {
                return Ok(());
            }
            let p = st.phase;
            if self.oracle.catalog(p).is_none() {
                return Ok(());
            }
            let label = st.labels[p - 1].clone();
            match self.oracle.next_moving_stage(&label, st.next_stage)? {
                Some((s, route)) => {
                    let len = self.oracle.arena.len(route);
                    st.route = Some(Cursor { stage: s, route, pos: 0, len, start: self.mem.trail_len(st.mem) });
                    st.next_stage = s + 1;
                    return Ok(());
                }
                None => {
                    let f = st.completion.clone().expect("completion set after exploring");
                    st.labels.push(Arc::new(label.extended((*f).clone())));
                    st.phase += 1;
                    st.next_stage = 1;
                    if st.phase == 4 {
                        let view = self.oracle.view(st.view.expect("view known")).view.clone();
                        let choice = choose_leader(&st.labels[3], &view, self.n)?;
                        st.leader = Some(choice.trail);
                    }
                }
            }
        }
    }

    /// Appends `token` to the agent's memory and updates its state.
    pub fn feed(&mut self, st: &mut AgentState, token: Token) -> Result<()> {
        let prev = st.mem;
        match &token {
            Token::Wake(_) => return Err(Error::InvalidMemory("wake after start".into())),
            Token::Exit(q) => {
                let q = *q;
                if let Some(e) = &mut st.explore {
                    let want = e.next_exit(self.depth);
                    if q != want {
                        return Err(Error::Protocol(format!("exploration expects port {want}, got {q}")));
                    }
                    let top = e.stack.last().unwrap();
                    e.descending = e.stack.len() - 1 < self.depth && top.next < top.degree;
                    e.last_exit = q;
                } else {
                    self.settle(st)?;
                    let Some(c) = &mut st.route else {
                        return Err(Error::Protocol("exit while no route is planned".into()));
                    };
                    let want = self.oracle.arena.port_at(c.route, c.pos);
                    if want != Some(q) {
                        return Err(Error::Protocol(format!("route expects port {want:?}, got {q}")));
                    }
                    if c.pos == 0 {
                        st.progress = Progress { phase: st.phase, stage: c.stage, start: c.start };
                    }
                    c.pos += 1;
                }
                st.mem = self.mem.push(prev, token)?;
            }
            Token::Enter(p, d) => {
                let (p, d) = (*p, *d);
                st.mem = self.mem.push(prev, token)?;
                if st.explore.is_some() {
                    self.explore_enter(st, p, d)?;
                } else if let Some(c) = &mut st.route {
                    let want = self.oracle.arena.port_at(c.route, c.pos);
                    if want != Some(p) {
                        return Err(Error::Protocol(format!("route expects entry {want:?}, got {p}")));
                    }
                    c.pos += 1;
                    if c.pos == c.len {
                        st.route = None;
                        st.completion = st.acc.clone();
                    }
                } else {
                    return Err(Error::Protocol("entry while no route is planned".into()));
                }
            }
            Token::Meet(_) => {
                st.mem = self.mem.push(prev, token)?;
                let Token::Meet(list) = self.mem.token(st.mem).clone() else { unreachable!() };
                for partner in list {
                    if st.view.is_some() {
                        self.contribute(st, prev, partner)?;
                    } else {
                        st.deferred.push((prev, partner));
                    }
                }
            }
        }
        Ok(())
    }

    fn explore_enter(&mut self, st: &mut AgentState, p: u32, d: u32) -> Result<()> {
        let depth = self.depth;
        let e = st.explore.as_mut().unwrap();
        if e.descending {
            let child_depth = e.stack.len();
            e.stack.last_mut().unwrap().next += 1;
            e.code.extend([e.last_exit, p, if child_depth < depth { d } else { 0 }]);
            e.stack.push(Frame { degree: d, next: 0, entry: p });
        } else {
            let child = e.stack.pop().ok_or_else(|| Error::Protocol("returned past the start".into()))?;
            let parent = e.stack.last().ok_or_else(|| Error::Protocol("returned past the start".into()))?;
            if p + 1 != parent.next || d != parent.degree {
                return Err(Error::Protocol("exploration returned to an unexpected node".into()));
            }
            e.code.extend([child.entry, p]);
        }
        let root = &e.stack[0];
        if e.stack.len() == 1 && root.next == root.degree {
            let code = ViewCode(std::mem::take(&mut e.code));
            st.explore = None;
            let v = self.oracle.intern_view(&code)?;
            let view = self.oracle.view(v).view.clone();
            let f = BinaryMapping::root_only(view.len());
            st.view = Some(v);
            st.labels = vec![Arc::new(Label { code, mappings: vec![f.clone()] })];
            st.acc = Some(Arc::new(f));
            st.phase = 1;
            st.next_stage = 1;
            for (own, partner) in std::mem::take(&mut st.deferred) {
                self.contribute(st, own, partner)?;
            }
            st.completion = st.acc.clone();
        }
        Ok(())
    }

    /// Decides whether the agent with memory `own` (the memory just before the meeting block)
    /// or its partner with memory `partner` confirms a trail at this meeting.
    pub fn confirms(&mut self, own: MemId, partner: MemId) -> Result<Confirmation> {
        let me = self.state_at(own)?;
        let other = self.state_at(partner)?;
        self.confirms_with(&me, own, &other, partner)
    }

    fn confirms_with(
        &mut self,
        me: &AgentState,
        own: MemId,
        other: &AgentState,
        partner: MemId,
    ) -> Result<Confirmation> {
        let a = Walk { mem: own, cut: false, extra: None };
        let b = Walk { mem: partner, cut: false, extra: None };
        // Trails as walked up to the meeting point, with the edge of a midpoint meeting counted
        // once. The agent's own memory is always taken after entering a node.
        let (own_view, partner_view) = match self.mem.dangling(partner) {
            None => ((a, b), (b, a)),
            Some(q) => {
                if self.mem.trail_len(own) < 2 {
                    return Ok(Confirmation::default());
                }
                let last = self.mem.trail_suffix(own, 2);
                let (ex, en) = (last[0], last[1]);
                let cut = Walk { mem: own, cut: true, extra: None };
                match (q == en, q == ex) {
                    (true, false) => ((a, b), (Walk { mem: partner, cut: false, extra: Some([q, ex]) }, cut)),
                    (false, true) => ((cut, b), (b, cut)),
                    // the direction of travel cannot be told apart
                    _ => return Ok(Confirmation::default()),
                }
            }
        };
        let own_t = if other.progress.key() <= me.progress.key() {
            self.check(me, own_view.0, own_view.1)?
        } else {
            None
        };
        let partner_t = if me.progress.key() <= other.progress.key() {
            self.check(other, partner_view.0, partner_view.1)?
        } else {
            None
        };
        Ok(Confirmation { own: own_t, partner: partner_t })
    }

    /// Clauses (ii) and (iii) for the agent in state `st` with walked trail `mine`, having met
    /// an agent that walked `theirs`. Returns the agent's part of the confirmed trail.
    fn check(&mut self, st: &AgentState, mine: Walk, theirs: Walk) -> Result<Option<Trail>> {
        let Progress { phase: p, stage: s, start } = st.progress;
        if p == 0 || s == 0 {
            return Ok(None);
        }
        let label = st.labels[p - 1].clone();
        let cat = self.oracle.catalog(p).ok_or_else(|| Error::Protocol("stage in unpublished phase".into()))?.clone();
        let Some(li) = cat.label_index(&label) else { return Ok(None) };
        let t = cat.stage(s);
        let trail = cat.trail(t.trail);
        let (tp, beta) = if li == t.first {
            (trail.clone(), t.second)
        } else if li == t.second {
            (trail.reversed(), t.first)
        } else {
            return Ok(None);
        };
        let (mine_len, theirs_len) = (mine.len(&self.mem), theirs.len(&self.mem));
        if mine_len < start {
            return Ok(None);
        }
        let h = self.oracle.history(cat.label(beta), s - 1)?;
        let hl = self.oracle.arena.len(h);
        if mine_len - start + theirs_len != (tp.len() as u64).saturating_add(hl) {
            return Ok(None);
        }
        let mine = mine.suffix(&self.mem, (mine_len - start) as usize);
        let theirs = theirs.suffix(&self.mem, theirs_len as usize);
        let hist = self.oracle.arena.materialize(h, hl).expect("length checked");
        let left = mine.iter().chain(theirs.iter().rev());
        let right = tp.ports().iter().chain(hist.iter().rev());
        Ok(left.eq(right).then_some(tp))
    }

    fn near_view(&mut self, v: usize) -> (Arc<TruncatedView>, Arc<Vec<usize>>) {
        let rel = 2 * (self.n - 1);
        let full = self.oracle.view(v).view.clone();
        self.near
            .entry(v)
            .or_insert_with(|| (Arc::new(full.truncate(rel)), Arc::new(full.nodes_within(rel).collect())))
            .clone()
    }

    /// Marks learned from one met memory, merged into the agent's mapping.
    fn contribute(&mut self, st: &mut AgentState, own: MemId, partner: MemId) -> Result<()> {
        // a meeting block changes neither progress nor labels
        let me = st.clone();
        let other = self.state_at(partner)?;
        let conf = self.confirms_with(&me, own, &other, partner)?;
        let v = st.view.expect("view known");
        let view = self.oracle.view(v).view.clone();
        // (node in own view of the partner's start, trail from the partner's start back to ours)
        let mut found = Vec::new();
        if let Some(tp) = conf.own {
            found.push((tp.clone(), tp.reversed()));
        }
        if let Some(tp) = conf.partner {
            found.push((tp.reversed(), tp));
        }
        for (to_partner, back) in found {
            let x = view
                .node_at_trail_end(&to_partner)?
                .ok_or_else(|| Error::Protocol("confirmed trail leaves the view".into()))?;
            let acc = Arc::make_mut(st.acc.as_mut().expect("mapping"));
            acc.set(x);
            if to_partner.edges() > self.n - 1 {
                continue;
            }
            let (Some(pv), Some(pf)) = (other.view, other.acc.clone()) else { continue };
            let pview = self.oracle.view(pv).view.clone();
            let anchor = pview
                .node_at_trail_end(&back)?
                .ok_or_else(|| Error::Protocol("confirmed trail leaves the partner's view".into()))?;
            let (near, index) = self.near_view(v);
            let phi = compute_transition(&near, &pview, anchor, self.n)?;
            let acc = Arc::make_mut(st.acc.as_mut().expect("mapping"));
            for (y, &full) in index.iter().enumerate() {
                if pf.get(phi.image(y)) {
                    acc.set(full);
                }
            }
        }
        Ok(())
    }
}
