//! Truncated views, their integer codes, view extension and transitions.
//!
//! A view node at depth below the truncation depth is *internal* and has exactly one child per
//! port of the graph node it stands for. Nodes at the truncation depth form the frontier and
//! carry no degree, so two views compare equal exactly when their port-labeled trees agree.
//!
//! Nodes are stored in code order: a pre-order traversal visiting children by increasing port.
//! Binary mappings are indexed the same way.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::Configuration;
use crate::trail::Trail;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ViewNode {
    pub parent: u32,
    /// Port at the parent leading here.
    pub exit: u32,
    /// Port by which this node is entered from the parent.
    pub entry: u32,
    /// `Some(d)` for internal nodes, `None` on the frontier.
    pub degree: Option<u32>,
    pub depth: u32,
    /// Children indexed by port; empty on the frontier.
    pub children: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct TruncatedView {
    depth: usize,
    nodes: Vec<ViewNode>,
    /// Graph node behind each view node. Only views built from a configuration have it, and it
    /// is only exposed through [`TruncatedView::oracle_origin`].
    origin: Option<Vec<usize>>,
}

impl PartialEq for TruncatedView {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.nodes == other.nodes
    }
}

impl Eq for TruncatedView {}

/// The integer code of a truncated view.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ViewCode(pub Vec<u32>);

impl fmt::Display for ViewCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Trail(self.0.clone()).fmt(f)
    }
}

impl serde::Serialize for ViewCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One bit per view node, in code order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryMapping(pub Vec<bool>);

impl BinaryMapping {
    pub fn zeros(len: usize) -> Self {
        BinaryMapping(vec![false; len])
    }

    /// Marks the root only.
    pub fn root_only(len: usize) -> Self {
        let mut m = Self::zeros(len);
        if len > 0 {
            m.0[0] = true;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize) {
        self.0[i] = true;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &BinaryMapping) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| !a || *b)
    }

    pub fn union_with(&mut self, other: &BinaryMapping) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }

    pub fn bitstring(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// A view code together with a marking of the same view.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompleteIdentifier {
    pub code: ViewCode,
    pub marks: BinaryMapping,
}

impl TruncatedView {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, x: usize) -> &ViewNode {
        &self.nodes[x]
    }

    pub fn nodes(&self) -> &[ViewNode] {
        &self.nodes
    }

    pub fn node_depth(&self, x: usize) -> usize {
        self.nodes[x].depth as usize
    }

    pub fn child(&self, x: usize, port: u32) -> Option<usize> {
        self.nodes[x].children.get(port as usize).map(|&c| c as usize)
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        let p = self.nodes[x].parent;
        (p != NONE).then_some(p as usize)
    }

    /// Graph node a view node stands for. Test oracles only; agents never see this.
    pub fn oracle_origin(&self, x: usize) -> Option<usize> {
        self.origin.as_ref().map(|o| o[x])
    }

    pub fn has_origin(&self) -> bool {
        self.origin.is_some()
    }

    /// Trail from the root to `x`.
    pub fn path_to(&self, x: usize) -> Trail {
        let mut out = Vec::with_capacity(2 * self.node_depth(x));
        let mut cur = x;
        while let Some(p) = self.parent(cur) {
            out.push(self.nodes[cur].entry);
            out.push(self.nodes[cur].exit);
            cur = p;
        }
        out.reverse();
        Trail(out)
    }

    /// The node at the end of `t` from the root, `None` if `t` cannot be followed.
    pub fn node_at_trail_end(&self, t: &Trail) -> Result<Option<usize>> {
        self.node_at_ports_end(self.root(), t.ports())
    }

    /// Follows `ports` from `x`.
    pub fn node_at_ports_end(&self, x: usize, ports: &[u32]) -> Result<Option<usize>> {
        if ports.len() % 2 != 0 {
            return Err(Error::OddTrail(ports.len()));
        }
        let edges = ports.len() / 2;
        if self.node_depth(x) + edges > self.depth {
            return Err(Error::TrailTooLong { edges, depth: self.depth - self.node_depth(x) });
        }
        let mut cur = x;
        for c in ports.chunks(2) {
            match self.child(cur, c[0]) {
                Some(ch) if self.nodes[ch].entry == c[1] => cur = ch,
                _ => return Ok(None),
            }
        }
        Ok(Some(cur))
    }

    /// Code of the whole view.
    pub fn code(&self) -> ViewCode {
        self.subtree_code(self.root(), self.depth)
    }

    /// Code of the subtree rooted at `x`, cut `rel` levels below `x`.
    pub fn subtree_code(&self, x: usize, rel: usize) -> ViewCode {
        assert!(self.node_depth(x) + rel <= self.depth, "subtree deeper than the view");
        let mut out = Vec::new();
        if rel > 0 {
            let d = self.nodes[x].degree.expect("internal");
            out.push(d);
            self.encode_children(x, rel, &mut out);
        }
        ViewCode(out)
    }

    fn encode_children(&self, x: usize, rel: usize, out: &mut Vec<u32>) {
        for (p, &c) in self.nodes[x].children.iter().enumerate() {
            let c = c as usize;
            let entry = self.nodes[c].entry;
            out.push(p as u32);
            out.push(entry);
            if rel > 1 {
                out.push(self.nodes[c].degree.expect("internal"));
                self.encode_children(c, rel - 1, out);
            } else {
                out.push(0);
            }
            out.push(entry);
            out.push(p as u32);
        }
    }

    /// Rebuilds a view from its code.
    pub fn decode(code: &ViewCode) -> Result<TruncatedView> {
        let c = &code.0;
        let mut nodes = vec![ViewNode {
            parent: NONE,
            exit: 0,
            entry: 0,
            degree: None,
            depth: 0,
            children: Vec::new(),
        }];
        if c.is_empty() {
            return Ok(TruncatedView { depth: 0, nodes, origin: None });
        }
        let mut pos = 1;
        nodes[0].degree = Some(c[0]);
        let mut frontier: Option<u32> = None;
        decode_children(c, &mut pos, &mut nodes, 0, c[0], &mut frontier)?;
        if pos != c.len() {
            return Err(Error::InvalidCode(format!("trailing data at {pos}")));
        }
        let depth = match frontier {
            Some(d) => d as usize,
            None if c[0] == 0 => 1,
            None => return Err(Error::InvalidCode("no frontier".into())),
        };
        let view = TruncatedView { depth, nodes, origin: None };
        view.check_back_edges()?;
        Ok(view)
    }

    /// Every child reached through the entry port of its parent must lead back with the
    /// parent's exit port.
    fn check_back_edges(&self) -> Result<()> {
        for (x, n) in self.nodes.iter().enumerate() {
            if n.parent == NONE || n.degree.is_none() {
                continue;
            }
            if n.entry >= n.degree.unwrap() {
                return Err(Error::InvalidCode(format!("entry port {} out of range", n.entry)));
            }
            let back = n.children[n.entry as usize] as usize;
            if self.nodes[back].entry != n.exit {
                return Err(Error::InvalidCode(format!("inconsistent back edge below node {x}")));
            }
            if let (Some(a), Some(b)) = (self.nodes[back].degree, self.nodes[n.parent as usize].degree) {
                if a != b {
                    return Err(Error::InvalidCode("inconsistent degree on back edge".into()));
                }
            }
        }
        Ok(())
    }

    /// Closed depth-first traversal of the whole view.
    pub fn dfs_trail(&self) -> Trail {
        let mut out = Vec::new();
        self.dfs_into(self.root(), &mut out);
        Trail(out)
    }

    fn dfs_into(&self, x: usize, out: &mut Vec<u32>) {
        for (p, &c) in self.nodes[x].children.iter().enumerate() {
            let e = self.nodes[c as usize].entry;
            out.extend([p as u32, e]);
            self.dfs_into(c as usize, out);
            out.extend([e, p as u32]);
        }
    }

    /// The view cut at depth `l <= depth`.
    pub fn truncate(&self, l: usize) -> TruncatedView {
        assert!(l <= self.depth);
        self.subtree(self.root(), l)
    }

    /// The subtree at `x` cut `rel` levels below it, as a view of its own.
    pub fn subtree(&self, x: usize, rel: usize) -> TruncatedView {
        assert!(self.node_depth(x) + rel <= self.depth);
        let mut nodes = Vec::new();
        let mut origin = self.origin.as_ref().map(|_| Vec::new());
        self.copy_rec(x, NONE, 0, 0, 0, rel, &mut nodes, &mut origin);
        TruncatedView { depth: rel, nodes, origin }
    }

    #[allow(clippy::too_many_arguments)]
    fn copy_rec(
        &self,
        x: usize,
        parent: u32,
        exit: u32,
        entry: u32,
        depth: u32,
        rel: usize,
        nodes: &mut Vec<ViewNode>,
        origin: &mut Option<Vec<usize>>,
    ) -> u32 {
        let id = nodes.len() as u32;
        let internal = rel > 0;
        nodes.push(ViewNode {
            parent,
            exit,
            entry,
            degree: if internal { self.nodes[x].degree } else { None },
            depth,
            children: Vec::new(),
        });
        if let (Some(o), Some(src)) = (origin.as_mut(), self.origin.as_ref()) {
            o.push(src[x]);
        }
        if internal {
            let kids: Vec<u32> = self.nodes[x].children.clone();
            let mut out = Vec::with_capacity(kids.len());
            for (p, c) in kids.into_iter().enumerate() {
                let e = self.nodes[c as usize].entry;
                out.push(self.copy_rec(c as usize, id, p as u32, e, depth + 1, rel - 1, nodes, origin));
            }
            nodes[id as usize].children = out;
        }
        id
    }

    /// Restriction of a mapping on this view to the subtree at `x` cut `rel` levels below,
    /// in the subtree's own code order.
    pub fn restrict_mapping(&self, f: &BinaryMapping, x: usize, rel: usize) -> BinaryMapping {
        let mut out = Vec::new();
        self.restrict_rec(f, x, rel, &mut out);
        BinaryMapping(out)
    }

    fn restrict_rec(&self, f: &BinaryMapping, x: usize, rel: usize, out: &mut Vec<bool>) {
        out.push(f.get(x));
        if rel > 0 {
            for &c in &self.nodes[x].children {
                self.restrict_rec(f, c as usize, rel - 1, out);
            }
        }
    }

    /// Indices of the nodes at depth at most `l`, in code order.
    pub fn nodes_within(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&x| self.nodes[x].depth as usize <= l)
    }
}

fn decode_children(
    c: &[u32],
    pos: &mut usize,
    nodes: &mut Vec<ViewNode>,
    x: usize,
    degree: u32,
    frontier: &mut Option<u32>,
) -> Result<()> {
    let depth = nodes[x].depth;
    let mut kids = Vec::with_capacity(degree as usize);
    for p in 0..degree {
        let head = c
            .get(*pos..*pos + 3)
            .ok_or_else(|| Error::InvalidCode(format!("truncated at {pos}", pos = *pos)))?;
        if head[0] != p {
            return Err(Error::InvalidCode(format!("expected port {p} at {}", *pos)));
        }
        let (entry, tag) = (head[1], head[2]);
        *pos += 3;
        let id = nodes.len();
        nodes.push(ViewNode {
            parent: x as u32,
            exit: p,
            entry,
            degree: (tag > 0).then_some(tag),
            depth: depth + 1,
            children: Vec::new(),
        });
        if tag > 0 {
            decode_children(c, pos, nodes, id, tag, frontier)?;
        } else {
            match *frontier {
                None => *frontier = Some(depth + 1),
                Some(f) if f != depth + 1 => {
                    return Err(Error::InvalidCode("frontier at uneven depth".into()))
                }
                _ => {}
            }
        }
        let tail = c
            .get(*pos..*pos + 2)
            .ok_or_else(|| Error::InvalidCode(format!("truncated at {}", *pos)))?;
        if tail != [entry, p] {
            return Err(Error::InvalidCode(format!("bad return step at {}", *pos)));
        }
        *pos += 2;
        kids.push(id as u32);
    }
    nodes[x].children = kids;
    Ok(())
}

/// The view of depth `l` from `v`, annotated with graph nodes for oracle use.
pub fn truncated_view(cfg: &Configuration, v: usize, l: usize) -> TruncatedView {
    let mut nodes = Vec::new();
    let mut origin = Vec::new();
    build_rec(cfg, v, NONE, 0, 0, 0, l, &mut nodes, &mut origin);
    TruncatedView { depth: l, nodes, origin: Some(origin) }
}

#[allow(clippy::too_many_arguments)]
fn build_rec(
    cfg: &Configuration,
    v: usize,
    parent: u32,
    exit: u32,
    entry: u32,
    depth: u32,
    left: usize,
    nodes: &mut Vec<ViewNode>,
    origin: &mut Vec<usize>,
) -> u32 {
    let id = nodes.len() as u32;
    nodes.push(ViewNode {
        parent,
        exit,
        entry,
        degree: (left > 0).then(|| cfg.degree(v) as u32),
        depth,
        children: Vec::new(),
    });
    origin.push(v);
    if left > 0 {
        let mut kids = Vec::with_capacity(cfg.degree(v));
        for p in 0..cfg.degree(v) as u32 {
            let (u, q) = cfg.neighbor(v, p).expect("port");
            kids.push(build_rec(cfg, u, id, p, q, depth + 1, left - 1, nodes, origin));
        }
        nodes[id as usize].children = kids;
    }
    id
}

/// Oracle: compares the subtrees at `x` and `y`, `rel` levels deep, node by node.
pub fn subtrees_equal(a: &TruncatedView, x: usize, b: &TruncatedView, y: usize, rel: usize) -> bool {
    if rel == 0 {
        return true;
    }
    let (nx, ny) = (a.node(x), b.node(y));
    if nx.degree.is_none() || nx.degree != ny.degree {
        return false;
    }
    nx.children.iter().zip(&ny.children).all(|(&cx, &cy)| {
        a.node(cx as usize).entry == b.node(cy as usize).entry
            && subtrees_equal(a, cx as usize, b, cy as usize, rel - 1)
    })
}

/// Finite automaton on view nodes within depth `n-1`, derived from a view of depth at least
/// `2n-1`. Following a trail through it decides feasibility from the root for trails of any
/// length, and unfolding it rebuilds deeper truncations.
#[derive(Debug, Clone)]
pub struct ViewAutomaton {
    /// Per state: `(entry, next state)` for every port.
    trans: Vec<Vec<(u32, u32)>>,
    /// View node representing each state.
    reps: Vec<usize>,
    origin: Option<Vec<usize>>,
}

impl ViewAutomaton {
    pub fn new(view: &TruncatedView, n: usize) -> Result<Self> {
        let need = 2 * n.max(1) - 1;
        if view.depth() < need {
            return Err(Error::InsufficientDepth { have: view.depth(), need });
        }
        let key_depth = n.saturating_sub(1);
        let mut by_key: HashMap<ViewCode, u32> = HashMap::new();
        let mut reps = Vec::new();
        let mut state_of: HashMap<usize, u32> = HashMap::new();
        let mut order: Vec<usize> = view.nodes_within(n).collect();
        order.sort_by_key(|&x| view.node_depth(x));
        for &x in &order {
            let key = view.subtree_code(x, key_depth);
            let s = match by_key.get(&key) {
                Some(&s) => s,
                None => {
                    if view.node_depth(x) + 1 > n {
                        return Err(Error::Precondition(
                            "view has more distinct nodes than the size bound allows".into(),
                        ));
                    }
                    let s = reps.len() as u32;
                    reps.push(x);
                    by_key.insert(key, s);
                    s
                }
            };
            state_of.insert(x, s);
        }
        let trans = reps
            .iter()
            .map(|&y| {
                view.node(y)
                    .children
                    .iter()
                    .map(|&c| (view.node(c as usize).entry, state_of[&(c as usize)]))
                    .collect()
            })
            .collect();
        let origin = view.origin.as_ref().map(|o| reps.iter().map(|&r| o[r]).collect());
        Ok(ViewAutomaton { trans, reps, origin })
    }

    pub fn state_count(&self) -> usize {
        self.trans.len()
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn degree(&self, s: u32) -> usize {
        self.trans[s as usize].len()
    }

    /// One step `(exit, entry)` from state `s`.
    pub fn step(&self, s: u32, exit: u32, entry: u32) -> Option<u32> {
        match self.trans[s as usize].get(exit as usize) {
            Some(&(e, t)) if e == entry => Some(t),
            _ => None,
        }
    }

    /// Follows an even-length port sequence from `s`.
    pub fn run(&self, mut s: u32, ports: &[u32]) -> Option<u32> {
        for c in ports.chunks(2) {
            s = self.step(s, c[0], *c.get(1)?)?;
        }
        Some(s)
    }

    pub fn representative(&self, s: u32) -> usize {
        self.reps[s as usize]
    }

    /// The view of depth `l` from the root state.
    pub fn unfold(&self, l: usize) -> TruncatedView {
        let mut nodes = Vec::new();
        let mut origin = self.origin.as_ref().map(|_| Vec::new());
        self.unfold_rec(0, NONE, 0, 0, 0, l, &mut nodes, &mut origin);
        TruncatedView { depth: l, nodes, origin }
    }

    #[allow(clippy::too_many_arguments)]
    fn unfold_rec(
        &self,
        s: u32,
        parent: u32,
        exit: u32,
        entry: u32,
        depth: u32,
        left: usize,
        nodes: &mut Vec<ViewNode>,
        origin: &mut Option<Vec<usize>>,
    ) -> u32 {
        let id = nodes.len() as u32;
        nodes.push(ViewNode {
            parent,
            exit,
            entry,
            degree: (left > 0).then(|| self.degree(s) as u32),
            depth,
            children: Vec::new(),
        });
        if let (Some(o), Some(src)) = (origin.as_mut(), self.origin.as_ref()) {
            o.push(src[s as usize]);
        }
        if left > 0 {
            let mut kids = Vec::with_capacity(self.degree(s));
            for (p, &(e, t)) in self.trans[s as usize].iter().enumerate() {
                kids.push(self.unfold_rec(t, id, p as u32, e, depth + 1, left - 1, nodes, origin));
            }
            nodes[id as usize].children = kids;
        }
        id
    }
}

/// Rebuilds the truncation of depth `l` from a view of depth at least `2n-1`.
pub fn extend_view(view: &TruncatedView, l: usize, n: usize) -> Result<TruncatedView> {
    let need = 2 * n.max(1) - 1;
    if view.depth() < need {
        return Err(Error::InsufficientDepth { have: view.depth(), need });
    }
    if l <= view.depth() {
        return Ok(view.truncate(l));
    }
    Ok(ViewAutomaton::new(view, n)?.unfold(l))
}

/// Decides whether `t` is feasible from the root's graph node, for trails of any length.
pub fn view_trail_feasible(view: &TruncatedView, t: &Trail, n: usize) -> Result<bool> {
    if t.len() % 2 != 0 {
        return Err(Error::OddTrail(t.len()));
    }
    let a = ViewAutomaton::new(view, n)?;
    Ok(a.run(a.root(), t.ports()).is_some())
}

/// A map from the nodes of one view into another, preserving the graph node represented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub map: Vec<u32>,
}

impl Transition {
    pub fn image(&self, x: usize) -> usize {
        self.map[x] as usize
    }
}

/// Maps every node of `v_u` into `v_v`, sending the root of `v_u` to `anchor`. The anchor
/// must stand for the same graph node as the root of `v_u`; this is checked to depth `n-1`.
pub fn compute_transition(
    v_u: &TruncatedView,
    v_v: &TruncatedView,
    anchor: usize,
    n: usize,
) -> Result<Transition> {
    let room = v_v.depth() - v_v.node_depth(anchor);
    if room < v_u.depth() {
        return Err(Error::NoTransition(format!(
            "anchor leaves {room} levels, {} needed",
            v_u.depth()
        )));
    }
    let check = n.saturating_sub(1).min(v_u.depth());
    if !subtrees_equal(v_u, 0, v_v, anchor, check) {
        return Err(Error::NoTransition("anchor does not match the root".into()));
    }
    let mut map = vec![NONE; v_u.len()];
    map[0] = anchor as u32;
    for x in 0..v_u.len() {
        let img = map[x] as usize;
        for (p, &c) in v_u.node(x).children.iter().enumerate() {
            let cc = v_v.child(img, p as u32).ok_or_else(|| {
                Error::NoTransition(format!("port {p} missing below image of node {x}"))
            })?;
            if v_v.node(cc).entry != v_u.node(c as usize).entry {
                return Err(Error::NoTransition(format!("entry mismatch below node {x}")));
            }
            map[c as usize] = cc as u32;
        }
    }
    Ok(Transition { map })
}

/// Checks the defining property of a transition: the subtree at every image agrees with the
/// subtree at its preimage to depth `min(n-1, remaining)`.
pub fn transition_is_consistent(
    v_u: &TruncatedView,
    v_v: &TruncatedView,
    t: &Transition,
    n: usize,
) -> bool {
    (0..v_u.len()).all(|x| {
        let y = t.image(x);
        let rem = (v_u.depth() - v_u.node_depth(x)).min(v_v.depth() - v_v.node_depth(y));
        subtrees_equal(v_u, x, v_v, y, rem.min(n.saturating_sub(1)))
    })
}

/// Marks every view node whose graph node is occupied.
pub fn ground_truth_mapping(cfg: &Configuration, v: usize, l: usize) -> BinaryMapping {
    let view = truncated_view(cfg, v, l);
    ground_truth_of(cfg, &view)
}

/// Ground-truth marking of an annotated view.
pub fn ground_truth_of(cfg: &Configuration, view: &TruncatedView) -> BinaryMapping {
    let o = view.origin.as_ref().expect("annotated view");
    BinaryMapping(o.iter().map(|&g| cfg.is_occupied(g)).collect())
}

/// Code of the depth-`l` view from an occupied node together with its ground-truth marking.
pub fn identifier_at_depth(cfg: &Configuration, v: usize, l: usize) -> Result<CompleteIdentifier> {
    if !cfg.is_occupied(v) {
        return Err(Error::NotOccupied(v));
    }
    let view = truncated_view(cfg, v, l);
    Ok(CompleteIdentifier { code: view.code(), marks: ground_truth_of(cfg, &view) })
}

/// The complete identifier at depth `bound_n - 1`.
pub fn complete_identifier(cfg: &Configuration, v: usize) -> Result<CompleteIdentifier> {
    identifier_at_depth(cfg, v, cfg.bound_n() - 1)
}

/// Hash-consed view classes: `classes(cfg, l, marks)[v]` equal for two nodes exactly when
/// their depth-`l` views (with marks, if given) are equal.
pub fn view_classes(cfg: &Configuration, l: usize, marks: Option<&[bool]>) -> Vec<u32> {
    let m = cfg.node_count();
    let mark = |v: usize| marks.is_some_and(|mk| mk[v]);
    let mut table: HashMap<(bool, Vec<(u32, u32)>), u32> = HashMap::new();
    let mut cur: Vec<u32> = (0..m)
        .map(|v| {
            let k = (mark(v), Vec::new());
            let len = table.len() as u32;
            *table.entry(k).or_insert(len)
        })
        .collect();
    for _ in 0..l {
        table.clear();
        let next: Vec<u32> = (0..m)
            .map(|v| {
                let kids: Vec<(u32, u32)> = (0..cfg.degree(v) as u32)
                    .map(|p| {
                        let (u, q) = cfg.neighbor(v, p).unwrap();
                        (q, cur[u])
                    })
                    .collect();
                let k = (mark(v), kids);
                let len = table.len() as u32;
                *table.entry(k).or_insert(len)
            })
            .collect();
        cur = next;
        let mut remap: HashMap<u32, u32> = HashMap::new();
        for c in cur.iter_mut() {
            let len = remap.len() as u32;
            *c = *remap.entry(*c).or_insert(len);
        }
    }
    cur
}
