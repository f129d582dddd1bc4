//! Agent memory states.
//!
//! A memory state is the sequence of everything an agent has observed: its starting degree, every
//! exit and entry port, and blocks of memory states of agents it met. States are cons cells in a
//! hash-consed arena, so equal states have equal ids and shared prefixes are stored once.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct MemId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    /// Degree of the starting node.
    Wake(u32),
    /// Entry port and degree of the node entered.
    Enter(u32, u32),
    /// Exit port taken.
    Exit(u32),
    /// Memory states of the agents met, sorted canonically and deduplicated.
    Meet(Vec<MemId>),
}

impl Token {
    fn rank(&self) -> u8 {
        match self {
            Token::Wake(_) => 0,
            Token::Enter(..) => 1,
            Token::Exit(_) => 2,
            Token::Meet(_) => 3,
        }
    }
}

#[derive(Debug, Clone)]
struct Cell {
    prev: Option<MemId>,
    token: Token,
    len: u32,
    /// Number of complete exit/entry pairs so far, times two.
    ports: u64,
    /// Exit port of an edge not yet finished.
    dangling: Option<u32>,
    last_meet: Option<MemId>,
}

#[derive(Debug, Clone, Default)]
pub struct MemoryArena {
    cells: Vec<Cell>,
    index: HashMap<(Option<MemId>, Token), MemId>,
    cmp_memo: HashMap<(MemId, MemId), Ordering>,
}

impl MemoryArena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.cells.len()
    }

    fn cell(&self, m: MemId) -> &Cell {
        &self.cells[m.0 as usize]
    }

    pub fn wake(&mut self, degree: u32) -> MemId {
        self.intern(None, Token::Wake(degree)).expect("wake is always valid")
    }

    /// Appends `token` to `prev`. Meet lists are sorted and deduplicated here.
    pub fn push(&mut self, prev: MemId, token: Token) -> Result<MemId> {
        let token = match token {
            Token::Meet(mut list) => {
                list.sort_by(|a, b| self.compare(*a, *b));
                list.dedup();
                if list.is_empty() {
                    return Err(Error::InvalidMemory("empty meeting block".into()));
                }
                Token::Meet(list)
            }
            Token::Wake(_) => return Err(Error::InvalidMemory("wake after start".into())),
            t => t,
        };
        self.intern(Some(prev), token)
    }

    fn intern(&mut self, prev: Option<MemId>, token: Token) -> Result<MemId> {
        let key = (prev, token);
        if let Some(&id) = self.index.get(&key) {
            return Ok(id);
        }
        let (prev, token) = key;
        let base = prev.map(|p| self.cell(p).clone());
        let (len, mut ports, mut dangling, mut last_meet) = match &base {
            Some(c) => (c.len + 1, c.ports, c.dangling, c.last_meet),
            None => (1, 0, None, None),
        };
        match &token {
            Token::Wake(_) => {}
            Token::Exit(q) => {
                if dangling.is_some() {
                    return Err(Error::InvalidMemory("exit while on an edge".into()));
                }
                dangling = Some(*q);
            }
            Token::Enter(..) => {
                if dangling.take().is_none() {
                    return Err(Error::InvalidMemory("enter without exit".into()));
                }
                ports += 2;
            }
            Token::Meet(_) => {
                if dangling.is_some() {
                    return Err(Error::InvalidMemory("meeting block while on an edge".into()));
                }
            }
        }
        let id = MemId(self.cells.len() as u32);
        if matches!(token, Token::Meet(_)) {
            last_meet = Some(id);
        }
        self.cells.push(Cell { prev, token: token.clone(), len, ports, dangling, last_meet });
        self.index.insert((prev, token), id);
        Ok(id)
    }

    pub fn token(&self, m: MemId) -> &Token {
        &self.cell(m).token
    }

    pub fn prev(&self, m: MemId) -> Option<MemId> {
        self.cell(m).prev
    }

    /// Number of tokens.
    pub fn len(&self, m: MemId) -> usize {
        self.cell(m).len as usize
    }

    /// Length of the trail of complete edges.
    pub fn trail_len(&self, m: MemId) -> u64 {
        self.cell(m).ports
    }

    pub fn dangling(&self, m: MemId) -> Option<u32> {
        self.cell(m).dangling
    }

    /// The latest meeting block at or before `m`.
    pub fn last_meet(&self, m: MemId) -> Option<MemId> {
        self.cell(m).last_meet
    }

    /// Ancestor holding the first `len` tokens.
    pub fn ancestor(&self, mut m: MemId, len: usize) -> MemId {
        while self.len(m) > len {
            m = self.prev(m).expect("ancestor within length");
        }
        m
    }

    pub fn is_prefix(&self, a: MemId, b: MemId) -> bool {
        self.len(a) <= self.len(b) && self.ancestor(b, self.len(a)) == a
    }

    /// Ids from the start to `m`, in order.
    pub fn chain(&self, m: MemId) -> Vec<MemId> {
        let mut out = Vec::with_capacity(self.len(m));
        let mut cur = Some(m);
        while let Some(c) = cur {
            out.push(c);
            cur = self.prev(c);
        }
        out.reverse();
        out
    }

    /// Ids strictly after `from` up to `to`; `from` must be a prefix of `to`.
    pub fn chain_from(&self, from: MemId, to: MemId) -> Vec<MemId> {
        let mut out = Vec::new();
        let mut cur = to;
        while cur != from {
            out.push(cur);
            cur = self.prev(cur).expect("prefix");
        }
        out.reverse();
        out
    }

    /// Exit and entry ports of all complete edges, in order.
    pub fn trail(&self, m: MemId) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.trail_len(m) as usize);
        let mut pending_entry: Option<u32> = None;
        let mut cur = Some(m);
        while let Some(c) = cur {
            match &self.cell(c).token {
                Token::Enter(p, _) => pending_entry = Some(*p),
                Token::Exit(q) => {
                    if let Some(p) = pending_entry.take() {
                        out.push(p);
                        out.push(*q);
                    }
                }
                _ => {}
            }
            cur = self.prev(c);
        }
        out.reverse();
        out
    }

    /// The last `k` ports of the trail of complete edges (all of them if shorter).
    pub fn trail_suffix(&self, m: MemId, k: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(k.min(self.trail_len(m) as usize));
        let mut pending_entry: Option<u32> = None;
        let mut cur = Some(m);
        while let Some(c) = cur {
            if out.len() >= k {
                break;
            }
            match &self.cell(c).token {
                Token::Enter(p, _) => pending_entry = Some(*p),
                Token::Exit(q) => {
                    if let Some(p) = pending_entry.take() {
                        out.push(p);
                        out.push(*q);
                    }
                }
                _ => {}
            }
            cur = self.prev(c);
        }
        out.truncate(k);
        out.reverse();
        out
    }

    /// Canonical order: lexicographic over token sequences.
    pub fn compare(&mut self, a: MemId, b: MemId) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        if let Some(&o) = self.cmp_memo.get(&(a, b)) {
            return o;
        }
        let m = self.len(a).min(self.len(b));
        let (mut x, mut y) = (self.ancestor(a, m), self.ancestor(b, m));
        let o = if x == y {
            self.len(a).cmp(&self.len(b))
        } else {
            while self.prev(x) != self.prev(y) {
                x = self.prev(x).unwrap();
                y = self.prev(y).unwrap();
            }
            let (tx, ty) = (self.token(x).clone(), self.token(y).clone());
            self.compare_tokens(&tx, &ty)
        };
        self.cmp_memo.insert((a, b), o);
        self.cmp_memo.insert((b, a), o.reverse());
        o
    }

    fn compare_tokens(&mut self, x: &Token, y: &Token) -> Ordering {
        match (x, y) {
            (Token::Wake(a), Token::Wake(b)) => a.cmp(b),
            (Token::Enter(a, b), Token::Enter(c, d)) => (a, b).cmp(&(c, d)),
            (Token::Exit(a), Token::Exit(b)) => a.cmp(b),
            (Token::Meet(a), Token::Meet(b)) => {
                for (p, q) in a.iter().zip(b) {
                    let o = self.compare(*p, *q);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            _ => x.rank().cmp(&y.rank()),
        }
    }

    /// Canonical text form, nested meetings in brackets.
    pub fn to_text(&self, m: MemId) -> String {
        let mut s = String::new();
        self.write_text(m, &mut s);
        s
    }

    fn write_text(&self, m: MemId, s: &mut String) {
        for (i, c) in self.chain(m).into_iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            match self.token(c) {
                Token::Wake(d) => write!(s, "W{d}").unwrap(),
                Token::Enter(p, d) => write!(s, "E{p},{d}").unwrap(),
                Token::Exit(q) => write!(s, "X{q}").unwrap(),
                Token::Meet(list) => {
                    s.push_str("M[");
                    for (j, &o) in list.iter().enumerate() {
                        if j > 0 {
                            s.push('|');
                        }
                        self.write_text(o, s);
                    }
                    s.push(']');
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_makes_equal_states_equal_ids() {
        let mut a = MemoryArena::new();
        let w1 = a.wake(1);
        let w2 = a.wake(1);
        assert_eq!(w1, w2);
        let x1 = a.push(w1, Token::Exit(0)).unwrap();
        let x2 = a.push(w2, Token::Exit(0)).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(a.dangling(x1), Some(0));
        let e = a.push(x1, Token::Enter(0, 1)).unwrap();
        assert_eq!(a.trail(e), vec![0, 0]);
        assert_eq!(a.trail_len(e), 2);
        assert_eq!(a.trail(x1), Vec::<u32>::new());
        assert_eq!(a.trail_suffix(e, 1), vec![0]);
        assert_eq!(a.trail_suffix(e, 9), vec![0, 0]);
    }

    #[test]
    fn malformed_sequences_rejected() {
        let mut a = MemoryArena::new();
        let w = a.wake(2);
        assert!(a.push(w, Token::Enter(0, 1)).is_err());
        let x = a.push(w, Token::Exit(1)).unwrap();
        assert!(a.push(x, Token::Exit(0)).is_err());
        assert!(a.push(x, Token::Meet(vec![w])).is_err());
        assert!(a.push(w, Token::Wake(1)).is_err());
    }

    #[test]
    fn canonical_order_and_meet_dedup() {
        let mut a = MemoryArena::new();
        let w1 = a.wake(1);
        let w2 = a.wake(2);
        let x = a.push(w1, Token::Exit(0)).unwrap();
        assert_eq!(a.compare(w1, w2), Ordering::Less);
        assert_eq!(a.compare(w1, x), Ordering::Less);
        assert_eq!(a.compare(x, w2), Ordering::Less);
        let m = a.push(w1, Token::Meet(vec![w2, w1, w2])).unwrap();
        assert_eq!(a.token(m), &Token::Meet(vec![w1, w2]));
        assert_eq!(a.to_text(m), "W1 M[W1|W2]");
        assert_eq!(a.last_meet(m), Some(m));
    }

    #[test]
    fn prefix_and_chain() {
        let mut a = MemoryArena::new();
        let w = a.wake(1);
        let x = a.push(w, Token::Exit(0)).unwrap();
        let e = a.push(x, Token::Enter(0, 1)).unwrap();
        assert!(a.is_prefix(w, e));
        assert!(!a.is_prefix(e, w));
        assert_eq!(a.chain(e), vec![w, x, e]);
        assert_eq!(a.chain_from(w, e), vec![x, e]);
    }
}
