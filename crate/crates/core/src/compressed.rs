//! Hash-consed port sequences with constant-time concatenation and reversal.
//!
//! Stage routes append the partner's whole history, so lengths grow exponentially with the number
//! of moving stages. Sequences are kept as a DAG of leaves and concatenations; reversal is a flag
//! on the handle. Lengths are cached and saturate at `u64::MAX`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::view::ViewAutomaton;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle {
    id: u32,
    rev: bool,
}

impl Handle {
    pub fn reversed(self) -> Handle {
        Handle { id: self.id, rev: !self.rev }
    }

    pub fn id(self) -> u32 {
        self.id
    }

    pub fn is_reversed(self) -> bool {
        self.rev
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Leaf(Arc<[u32]>),
    Concat(Handle, Handle),
}

#[derive(Debug, Clone)]
pub struct TrailArena {
    nodes: Vec<Node>,
    lens: Vec<u64>,
    index: HashMap<Node, u32>,
    max_nodes: usize,
}

impl Default for TrailArena {
    fn default() -> Self {
        Self::new(usize::MAX)
    }
}

impl TrailArena {
    pub fn new(max_nodes: usize) -> Self {
        let mut a = TrailArena { nodes: Vec::new(), lens: Vec::new(), index: HashMap::new(), max_nodes };
        let empty = Node::Leaf(Arc::from(Vec::new()));
        a.index.insert(empty.clone(), 0);
        a.nodes.push(empty);
        a.lens.push(0);
        a
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn empty(&self) -> Handle {
        Handle { id: 0, rev: false }
    }

    fn intern(&mut self, node: Node, len: u64) -> Result<Handle> {
        if let Some(&id) = self.index.get(&node) {
            return Ok(Handle { id, rev: false });
        }
        if self.nodes.len() >= self.max_nodes {
            return Err(Error::Budget(format!("trail arena exceeds {} nodes", self.max_nodes)));
        }
        let id = self.nodes.len() as u32;
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        self.lens.push(len);
        Ok(Handle { id, rev: false })
    }

    pub fn leaf(&mut self, ports: &[u32]) -> Result<Handle> {
        if ports.is_empty() {
            return Ok(self.empty());
        }
        self.intern(Node::Leaf(Arc::from(ports)), ports.len() as u64)
    }

    pub fn concat(&mut self, a: Handle, b: Handle) -> Result<Handle> {
        if self.len(a) == 0 {
            return Ok(b);
        }
        if self.len(b) == 0 {
            return Ok(a);
        }
        let len = self.len(a).saturating_add(self.len(b));
        self.intern(Node::Concat(a, b), len)
    }

    pub fn concat_all(&mut self, parts: &[Handle]) -> Result<Handle> {
        let mut acc = self.empty();
        for &p in parts {
            acc = self.concat(acc, p)?;
        }
        Ok(acc)
    }

    pub fn len(&self, h: Handle) -> u64 {
        self.lens[h.id as usize]
    }

    /// Children in reading order, `None` for leaves.
    fn children(&self, h: Handle) -> Option<(Handle, Handle)> {
        match &self.nodes[h.id as usize] {
            Node::Leaf(_) => None,
            Node::Concat(a, b) => Some(if h.rev { (b.reversed(), a.reversed()) } else { (*a, *b) }),
        }
    }

    /// Port at position `i`.
    pub fn port_at(&self, h: Handle, mut i: u64) -> Option<u32> {
        if i >= self.len(h) {
            return None;
        }
        let mut cur = h;
        loop {
            match self.children(cur) {
                Some((a, b)) => {
                    let la = self.len(a);
                    if i < la {
                        cur = a;
                    } else {
                        i -= la;
                        cur = b;
                    }
                }
                None => {
                    let Node::Leaf(p) = &self.nodes[cur.id as usize] else { unreachable!() };
                    let k = if cur.rev { p.len() - 1 - i as usize } else { i as usize };
                    return Some(p[k]);
                }
            }
        }
    }

    /// Calls `f` on every port in `[start, end)`, in order.
    pub fn for_each_in(&self, h: Handle, start: u64, end: u64, f: &mut dyn FnMut(u32)) {
        let end = end.min(self.len(h));
        if start >= end {
            return;
        }
        // (handle, offset of its first port)
        let mut stack = vec![(h, 0u64)];
        while let Some((cur, off)) = stack.pop() {
            let len = self.len(cur);
            if off >= end || off + len <= start {
                continue;
            }
            match self.children(cur) {
                Some((a, b)) => {
                    stack.push((b, off + self.len(a)));
                    stack.push((a, off));
                }
                None => {
                    let Node::Leaf(p) = &self.nodes[cur.id as usize] else { unreachable!() };
                    let lo = start.saturating_sub(off) as usize;
                    let hi = (end - off).min(len) as usize;
                    if cur.rev {
                        for k in lo..hi {
                            f(p[p.len() - 1 - k]);
                        }
                    } else {
                        for &x in &p[lo..hi] {
                            f(x);
                        }
                    }
                }
            }
        }
    }

    /// The whole sequence, or `None` when longer than `limit`.
    pub fn materialize(&self, h: Handle, limit: u64) -> Option<Vec<u32>> {
        let len = self.len(h);
        if len > limit {
            return None;
        }
        let mut out = Vec::with_capacity(len as usize);
        self.for_each_in(h, 0, len, &mut |p| out.push(p));
        Some(out)
    }
}

/// Runs compressed trails through a view automaton, memoized per DAG node and start state.
#[derive(Debug, Default, Clone)]
pub struct AutomatonRunner {
    memo: HashMap<(u32, bool, u32), Option<u32>>,
}

enum Frame {
    Enter(Handle, u32),
    Mid(Handle, u32, Handle),
    Finish(Handle, u32),
}

impl AutomatonRunner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Final state after following `h` from `state`, or `None` if infeasible.
    pub fn run(&mut self, arena: &TrailArena, aut: &ViewAutomaton, h: Handle, state: u32) -> Option<u32> {
        let mut stack = vec![Frame::Enter(h, state)];
        let mut results: Vec<Option<u32>> = Vec::new();
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Enter(cur, s) => {
                    if let Some(&r) = self.memo.get(&(cur.id, cur.rev, s)) {
                        results.push(r);
                        continue;
                    }
                    match arena.children(cur) {
                        Some((a, b)) => {
                            stack.push(Frame::Mid(cur, s, b));
                            stack.push(Frame::Enter(a, s));
                        }
                        None => {
                            let Node::Leaf(p) = &arena.nodes[cur.id as usize] else { unreachable!() };
                            let r = if cur.rev {
                                let v: Vec<u32> = p.iter().rev().copied().collect();
                                aut.run(s, &v)
                            } else {
                                aut.run(s, p)
                            };
                            self.memo.insert((cur.id, cur.rev, s), r);
                            results.push(r);
                        }
                    }
                }
                Frame::Mid(cur, s, b) => match results.pop().unwrap() {
                    None => {
                        self.memo.insert((cur.id, cur.rev, s), None);
                        results.push(None);
                    }
                    Some(t) => {
                        stack.push(Frame::Finish(cur, s));
                        stack.push(Frame::Enter(b, t));
                    }
                },
                Frame::Finish(cur, s) => {
                    let r = *results.last().unwrap();
                    self.memo.insert((cur.id, cur.rev, s), r);
                }
            }
        }
        results.pop().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::view::truncated_view;

    #[test]
    fn concat_and_reverse() {
        let mut a = TrailArena::default();
        let x = a.leaf(&[0, 1]).unwrap();
        let y = a.leaf(&[2, 3, 4, 5]).unwrap();
        let xy = a.concat(x, y).unwrap();
        assert_eq!(a.len(xy), 6);
        assert_eq!(a.materialize(xy, 100).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(a.materialize(xy.reversed(), 100).unwrap(), vec![5, 4, 3, 2, 1, 0]);
        assert_eq!(xy.reversed().reversed(), xy);
        let z = a.concat(xy.reversed(), x).unwrap();
        assert_eq!(a.materialize(z, 100).unwrap(), vec![5, 4, 3, 2, 1, 0, 0, 1]);
        for i in 0..8 {
            assert_eq!(a.port_at(z, i), Some(a.materialize(z, 100).unwrap()[i as usize]));
        }
        assert_eq!(a.port_at(z, 8), None);
        assert!(a.materialize(z, 7).is_none());
    }

    #[test]
    fn hash_consing_shares_nodes() {
        let mut a = TrailArena::default();
        let x = a.leaf(&[0, 0]).unwrap();
        let before = a.node_count();
        let y = a.leaf(&[0, 0]).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.node_count(), before);
    }

    #[test]
    fn doubling_lengths_saturate() {
        let mut a = TrailArena::default();
        let mut h = a.leaf(&[0, 0]).unwrap();
        for _ in 0..70 {
            h = a.concat(h, h.reversed()).unwrap();
        }
        assert_eq!(a.len(h), u64::MAX);
        assert_eq!(a.port_at(h, 1 << 40), Some(0));
    }

    #[test]
    fn budget_is_enforced() {
        let mut a = TrailArena::new(3);
        let x = a.leaf(&[0, 0]).unwrap();
        let y = a.leaf(&[1, 1]).unwrap();
        assert!(matches!(a.concat(x, y), Err(Error::Budget(_))));
    }

    #[test]
    fn automaton_runs_agree_with_graph() {
        let p3 = fixtures::p3(&[0]);
        let v = truncated_view(&p3, 0, 5);
        let aut = ViewAutomaton::new(&v, 3).unwrap();
        let mut arena = TrailArena::default();
        let mut runner = AutomatonRunner::new();
        let go = arena.leaf(&[0, 0, 1, 0]).unwrap();
        let back = go.reversed();
        let round = arena.concat(go, back).unwrap();
        let mut big = round;
        for _ in 0..30 {
            big = arena.concat(big, big).unwrap();
        }
        assert_eq!(runner.run(&arena, &aut, big, aut.root()), Some(aut.root()));
        let s = runner.run(&arena, &aut, go, aut.root()).unwrap();
        assert_eq!(runner.run(&arena, &aut, back, s), Some(aut.root()));
        let bad = arena.leaf(&[0, 1]).unwrap();
        assert_eq!(runner.run(&arena, &aut, bad, aut.root()), None);
    }
}
