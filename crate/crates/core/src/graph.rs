//! Port-labeled graphs with an initial agent placement, plus routes and trails over them.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trail::Trail;

/// Default cap on the number of trails any enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// On-disk graph document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n_bound: usize,
    pub nodes: usize,
    pub edges: Vec<EdgeDocument>,
    pub occupied: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub u: usize,
    pub pu: u32,
    pub v: usize,
    pub pv: u32,
}

/// A connected port-labeled graph, the set of initially occupied nodes, and the size bound known
/// to the agents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    /// `adj[v][p] = (u, q)`: leaving `v` by port `p` enters `u` by port `q`.
    adj: Vec<Vec<(usize, u32)>>,
    occupied: Vec<bool>,
    bound_n: usize,
}

/// One traversed edge of a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub exit: u32,
    pub entry: u32,
    pub far: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub start: usize,
    pub steps: Vec<Step>,
}

impl Route {
    pub fn end(&self) -> usize {
        self.steps.last().map_or(self.start, |s| s.far)
    }

    pub fn is_closed(&self) -> bool {
        self.end() == self.start
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Nodes visited in order, starting node included.
    pub fn nodes(&self) -> Vec<usize> {
        std::iter::once(self.start)
            .chain(self.steps.iter().map(|s| s.far))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Route),
    /// Index into the trail of the first port that cannot be followed.
    Infeasible { index: usize },
}

impl Feasibility {
    pub fn route(self) -> Option<Route> {
        match self {
            Feasibility::Feasible(r) => Some(r),
            Feasibility::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

impl Configuration {
    /// Builds and validates a configuration from `(u, pu, v, pv)` edge tuples.
    pub fn new(
        nodes: usize,
        edges: &[(usize, u32, usize, u32)],
        occupied: &[usize],
        bound_n: usize,
    ) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::Malformed("graph has no nodes".into()));
        }
        let mut ports: Vec<Vec<Option<(usize, u32)>>> = vec![Vec::new(); nodes];
        for &(u, pu, v, pv) in edges {
            if u >= nodes || v >= nodes {
                return Err(Error::Malformed(format!("edge endpoint out of range: {u}-{v}")));
            }
            if u == v {
                return Err(Error::Malformed(format!("self-loop at node {u}")));
            }
            for (a, pa, b, pb) in [(u, pu, v, pv), (v, pv, u, pu)] {
                let slot = pa as usize;
                if ports[a].len() <= slot {
                    ports[a].resize(slot + 1, None);
                }
                if ports[a][slot].is_some() {
                    return Err(Error::PortLabeling { node: a });
                }
                ports[a][slot] = Some((b, pb));
            }
        }
        let mut adj = Vec::with_capacity(nodes);
        for (v, p) in ports.into_iter().enumerate() {
            let row: Option<Vec<_>> = p.into_iter().collect();
            adj.push(row.ok_or(Error::PortLabeling { node: v })?);
        }
        for (v, row) in adj.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &(u, _) in row {
                if !seen.insert(u) {
                    return Err(Error::Malformed(format!("parallel edges at node {v}")));
                }
            }
        }
        let mut occ = vec![false; nodes];
        for &o in occupied {
            if o >= nodes {
                return Err(Error::Malformed(format!("occupied node {o} out of range")));
            }
            if occ[o] {
                return Err(Error::Malformed(format!("node {o} occupied twice")));
            }
            occ[o] = true;
        }
        if occupied.is_empty() {
            return Err(Error::Malformed("no occupied node".into()));
        }
        if bound_n < nodes {
            return Err(Error::BoundTooSmall { bound: bound_n, nodes });
        }
        let cfg = Configuration { adj, occupied: occ, bound_n };
        if !cfg.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(cfg)
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        let edges: Vec<_> = doc.edges.iter().map(|e| (e.u, e.pu, e.v, e.pv)).collect();
        Configuration::new(doc.nodes, &edges, &doc.occupied, doc.n_bound)
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            n_bound: self.bound_n,
            nodes: self.node_count(),
            edges: self
                .edges()
                .into_iter()
                .map(|(u, pu, v, pv)| EdgeDocument { u, pu, v, pv })
                .collect(),
            occupied: self.occupied_nodes(),
        }
    }

    /// Same graph and bound, different agent placement.
    pub fn with_occupied(&self, occupied: &[usize]) -> Result<Self> {
        Configuration::new(self.node_count(), &self.edges(), occupied, self.bound_n)
    }

    pub fn with_bound(&self, bound_n: usize) -> Result<Self> {
        Configuration::new(self.node_count(), &self.edges(), &self.occupied_nodes(), bound_n)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.adj.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn bound_n(&self) -> usize {
        self.bound_n
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_occupied(&self, v: usize) -> bool {
        self.occupied[v]
    }

    pub fn occupied_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| self.occupied[v]).collect()
    }

    pub fn agent_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Each undirected edge once, as `(u, pu, v, pv)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, u32, usize, u32)> {
        let mut out = Vec::new();
        for (v, row) in self.adj.iter().enumerate() {
            for (p, &(u, q)) in row.iter().enumerate() {
                if v < u {
                    out.push((v, p as u32, u, q));
                }
            }
        }
        out
    }

    pub fn traverse_port(&self, v: usize, p: u32) -> Result<(usize, u32)> {
        self.adj[v]
            .get(p as usize)
            .copied()
            .ok_or(Error::PortOutOfRange { node: v, port: p, degree: self.degree(v) })
    }

    /// Unchecked neighbor lookup, `None` when the port does not exist.
    pub fn neighbor(&self, v: usize, p: u32) -> Option<(usize, u32)> {
        self.adj[v].get(p as usize).copied()
    }

    pub fn route_from_trail(&self, v: usize, t: &Trail) -> Result<Feasibility> {
        self.route_from_ports(v, t.ports())
    }

    pub fn route_from_ports(&self, v: usize, ports: &[u32]) -> Result<Feasibility> {
        if ports.len() % 2 != 0 {
            return Err(Error::OddTrail(ports.len()));
        }
        let mut cur = v;
        let mut steps = Vec::with_capacity(ports.len() / 2);
        for (i, c) in ports.chunks(2).enumerate() {
            let Some((u, q)) = self.neighbor(cur, c[0]) else {
                return Ok(Feasibility::Infeasible { index: 2 * i });
            };
            if q != c[1] {
                return Ok(Feasibility::Infeasible { index: 2 * i + 1 });
            }
            steps.push(Step { exit: c[0], entry: q, far: u });
            cur = u;
        }
        Ok(Feasibility::Feasible(Route { start: v, steps }))
    }

    /// End node of the route with trail `ports` from `v`, if feasible.
    pub fn trail_end(&self, v: usize, ports: &[u32]) -> Option<usize> {
        let mut cur = v;
        for c in ports.chunks(2) {
            let (u, q) = self.neighbor(cur, c[0])?;
            if c.len() < 2 || q != c[1] {
                return None;
            }
            cur = u;
        }
        Some(cur)
    }

    /// Closed depth-first traversal of the depth-limited view from `v`, smaller ports first.
    pub fn dfs_trail(&self, v: usize, depth: usize) -> Trail {
        let mut out = Vec::new();
        self.dfs_into(v, depth, &mut out);
        Trail(out)
    }

    fn dfs_into(&self, v: usize, depth: usize, out: &mut Vec<u32>) {
        if depth == 0 {
            return;
        }
        for (p, &(u, q)) in self.adj[v].iter().enumerate() {
            out.push(p as u32);
            out.push(q);
            self.dfs_into(u, depth - 1, out);
            out.push(q);
            out.push(p as u32);
        }
    }

    /// Every walk of `1..=max_edges` edges starting at `v`, reported with its trail and end.
    pub fn for_each_walk(&self, v: usize, max_edges: usize, f: &mut dyn FnMut(&[u32], usize)) {
        let mut buf = Vec::with_capacity(2 * max_edges);
        self.walk_rec(v, max_edges, &mut buf, f);
    }

    fn walk_rec(&self, v: usize, left: usize, buf: &mut Vec<u32>, f: &mut dyn FnMut(&[u32], usize)) {
        if left == 0 {
            return;
        }
        for (p, &(u, q)) in self.adj[v].iter().enumerate() {
            buf.push(p as u32);
            buf.push(q);
            f(buf, u);
            self.walk_rec(u, left - 1, buf, f);
            buf.truncate(buf.len() - 2);
        }
    }
}

/// Size of the full trail family for bound `n`: even lengths 2..=6(n-1), terms below n-1.
pub fn trail_family_size(n: usize) -> u128 {
    let base = (n as u128).saturating_sub(1).saturating_mul(n as u128 - 1);
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..3 * (n - 1) {
        pow = pow.saturating_mul(base);
        total = total.saturating_add(pow);
    }
    total
}

/// The trail family in canonical order. With `feasible_only`, only trails feasible from some
/// node of `config` are kept.
pub fn enumerate_trails(
    config: &Configuration,
    n: usize,
    feasible_only: bool,
    cap: u128,
) -> Result<Vec<Trail>> {
    if n < 2 {
        return Err(Error::Precondition("trail enumeration needs n >= 2".into()));
    }
    let max_edges = 3 * (n - 1);
    let max_port = (n - 2) as u32;
    if !feasible_only {
        let count = trail_family_size(n);
        if count > cap {
            return Err(Error::EnumerationCap { count, cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut cur = Vec::new();
        for len in 1..=max_edges {
            odometer(2 * len, max_port, &mut cur, &mut out);
        }
        return Ok(out);
    }
    let mut set = BTreeSet::new();
    let mut visited: u128 = 0;
    let mut overflow = false;
    for v in 0..config.node_count() {
        config.for_each_walk(v, max_edges, &mut |t, _| {
            visited += 1;
            if t.iter().all(|&p| p <= max_port) && set.len() as u128 <= cap {
                set.insert(Trail(t.to_vec()));
            }
        });
        if set.len() as u128 > cap {
            overflow = true;
            break;
        }
    }
    if overflow {
        return Err(Error::EnumerationCap { count: visited, cap });
    }
    Ok(set.into_iter().collect())
}

fn odometer(len: usize, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Trail>) {
    cur.clear();
    cur.resize(len, 0);
    loop {
        out.push(Trail(cur.clone()));
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < max {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn k2_loads() {
        let doc = r#"{"n_bound":2,"nodes":2,"edges":[{"u":0,"pu":0,"v":1,"pv":0}],"occupied":[0,1]}"#;
        let cfg = crate::load_configuration(doc).unwrap();
        assert_eq!(cfg.node_count(), 2);
        assert_eq!(cfg.agent_count(), 2);
        assert_eq!(cfg.traverse_port(0, 0).unwrap(), (1, 0));
    }

    #[test]
    fn bad_port_labeling_is_reported() {
        // node 1 has degree 2 with ports {0,2}
        let err = Configuration::new(3, &[(0, 0, 1, 0), (1, 2, 2, 0)], &[0], 3).unwrap_err();
        assert_eq!(err, Error::PortLabeling { node: 1 });
        assert_eq!(err.to_string(), "port labeling not 0..d-1 at node 1");
    }

    #[test]
    fn disconnected_and_small_bound() {
        assert_eq!(
            Configuration::new(4, &[(0, 0, 1, 0), (2, 0, 3, 0)], &[0], 4).unwrap_err(),
            Error::Disconnected
        );
        assert_eq!(
            Configuration::new(2, &[(0, 0, 1, 0)], &[0], 1).unwrap_err(),
            Error::BoundTooSmall { bound: 1, nodes: 2 }
        );
    }

    #[test]
    fn oriented_ring_is_valid() {
        let r = fixtures::oriented_ring(5);
        assert_eq!(r.agent_count(), 5);
        for v in 0..5 {
            assert_eq!(r.degree(v), 2);
        }
    }

    #[test]
    fn p3_traversal() {
        let p3 = fixtures::p3(&[0, 2]);
        assert_eq!(p3.traverse_port(1, 1).unwrap(), (2, 0));
        assert!(p3.traverse_port(0, 1).is_err());
    }

    #[test]
    fn p3_routes() {
        let p3 = fixtures::p3(&[0, 2]);
        let r = p3.route_from_trail(0, &Trail::from(vec![0, 0])).unwrap().route().unwrap();
        assert_eq!(r.nodes(), vec![0, 1]);
        assert_eq!(
            p3.route_from_trail(0, &Trail::from(vec![0, 1])).unwrap(),
            Feasibility::Infeasible { index: 1 }
        );
        let e = p3.route_from_trail(2, &Trail::empty()).unwrap().route().unwrap();
        assert!(e.is_empty() && e.end() == 2);
        assert!(p3.route_from_trail(0, &Trail::from(vec![0])).is_err());
    }

    #[test]
    fn trail_of_route_examples() {
        let p3 = fixtures::p3(&[0, 2]);
        let r = p3.route_from_trail(0, &Trail::from(vec![0, 0, 1, 0])).unwrap().route().unwrap();
        assert_eq!(r.nodes(), vec![0, 1, 2]);
        assert_eq!(crate::trail_of_route(&r), Trail::from(vec![0, 0, 1, 0]));
        let k2 = fixtures::k2(&[0, 1]);
        let r = Route {
            start: 0,
            steps: vec![Step { exit: 0, entry: 0, far: 1 }, Step { exit: 0, entry: 0, far: 0 }],
        };
        assert_eq!(crate::trail_of_route(&r), Trail::from(vec![0, 0, 0, 0]));
        assert!(k2.route_from_trail(0, &Trail::from(vec![0, 0, 0, 0])).unwrap().is_feasible());
        assert_eq!(crate::trail_of_route(&Route { start: 1, steps: vec![] }), Trail::empty());
    }

    #[test]
    fn dfs_examples() {
        let k2 = fixtures::k2(&[0, 1]);
        assert_eq!(k2.dfs_trail(0, 1), Trail::from(vec![0, 0, 0, 0]));
        let p3 = fixtures::p3(&[0, 2]);
        assert_eq!(p3.dfs_trail(1, 1), Trail::from(vec![0, 0, 0, 0, 1, 0, 0, 1]));
        assert_eq!(p3.dfs_trail(1, 0), Trail::empty());
    }

    #[test]
    fn enumeration_examples() {
        let k2 = fixtures::k2(&[0, 1]);
        let all = enumerate_trails(&k2, 2, false, DEFAULT_ENUMERATION_CAP).unwrap();
        let expect: Vec<Trail> =
            vec![vec![0, 0].into(), vec![0, 0, 0, 0].into(), vec![0; 6].into()];
        assert_eq!(all, expect);
        assert_eq!(enumerate_trails(&k2, 2, true, DEFAULT_ENUMERATION_CAP).unwrap(), expect);
        let p3 = fixtures::p3(&[0, 2]);
        let f = enumerate_trails(&p3, 3, true, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(f.contains(&Trail::from(vec![0, 0, 1, 0])));
        assert!(!f.contains(&Trail::from(vec![1, 1, 1, 1])));
        assert!(f.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_cap() {
        let k2 = fixtures::k2(&[0]);
        assert!(matches!(
            enumerate_trails(&k2, 6, false, 1000),
            Err(Error::EnumerationCap { .. })
        ));
        assert!(enumerate_trails(&k2, 1, false, 1000).is_err());
    }
}
