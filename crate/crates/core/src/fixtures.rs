//! Small named configurations used by tests, the CLI and documentation.

use crate::graph::Configuration;

/// Two nodes, one edge, ports 0/0.
pub fn k2(occupied: &[usize]) -> Configuration {
    Configuration::new(2, &[(0, 0, 1, 0)], occupied, 2).expect("k2")
}

/// Path a-b-c as nodes 0-1-2: {a,b} uses ports 0@a/0@b, {b,c} uses 1@b/0@c.
pub fn p3(occupied: &[usize]) -> Configuration {
    Configuration::new(3, &[(0, 0, 1, 0), (1, 1, 2, 0)], occupied, 3).expect("p3")
}

/// Ring of `m` nodes, port 0 clockwise and port 1 counterclockwise everywhere, fully occupied.
pub fn oriented_ring(m: usize) -> Configuration {
    let edges: Vec<_> = (0..m).map(|i| (i, 0, (i + 1) % m, 1)).collect();
    let occ: Vec<_> = (0..m).collect();
    Configuration::new(m, &edges, &occ, m).expect("ring")
}

/// Ring of five where node 0 has its ports reversed; agents at node 0 and its clockwise
/// neighbor 1.
pub fn c1_ring() -> Configuration {
    let edges = [(0, 1, 1, 1), (1, 0, 2, 1), (2, 0, 3, 1), (3, 0, 4, 1), (4, 0, 0, 0)];
    Configuration::new(5, &edges, &[0, 1], 5).expect("c1")
}

/// Path w-x-y-z (nodes 0..3) with equal ports on the middle edge.
pub fn path4(occupied: &[usize]) -> Configuration {
    Configuration::new(4, &[(0, 0, 1, 0), (1, 1, 2, 1), (2, 0, 3, 0)], occupied, 4).expect("path4")
}

/// Four-cycle a-b-d-c (nodes a=0, b=1, c=2, d=3) where each edge carries the same port at both
/// ends: 0 on {a,b} and {c,d}, 1 on {a,c} and {b,d}. All views coincide; agents at a, b and c
/// have pairwise distinct enhanced views. From c the trail (0,0,1,1) leads to b.
pub fn square_abc() -> Configuration {
    let edges = [(0, 0, 1, 0), (2, 0, 3, 0), (0, 1, 2, 1), (1, 1, 3, 1)];
    Configuration::new(4, &edges, &[0, 1, 2], 4).expect("square")
}
