//! Executable experiments: twins under a synchronous adversary, and meetings in tunnels.

use serde::Serialize;

use crate::eligibility::distinct_enhanced_views;
use crate::error::{Error, Result};
use crate::graph::Configuration;
use crate::sim::scheduler::Synchronous;
use crate::sim::{with_large_stack, Budget, Simulation};
use crate::trail::Trail;
use crate::view::view_classes;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwinDivergence {
    pub round: u64,
    pub nodes: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwinReport {
    /// Pairs of occupied nodes with equal enhanced views.
    pub twins: Vec<(usize, usize)>,
    pub rounds_requested: u64,
    /// Round boundaries reached before the run ended or the budget ran out.
    pub rounds_checked: u64,
    pub divergence: Option<TwinDivergence>,
}

impl TwinReport {
    pub fn identical(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Runs the protocol synchronously for `rounds` rounds (two half-steps each) and compares the
/// memory states of every pair of twins at each round boundary.
pub fn twin_experiment(cfg: &Configuration, rounds: u64) -> Result<TwinReport> {
    if distinct_enhanced_views(cfg).0 {
        return Err(Error::Precondition("all agents have distinct enhanced views; there are no twins".into()));
    }
    let occupied: Vec<bool> = (0..cfg.node_count()).map(|v| cfg.is_occupied(v)).collect();
    let classes = view_classes(cfg, 2 * cfg.node_count(), Some(&occupied));
    let homes = cfg.occupied_nodes();
    let mut pairs = Vec::new();
    for i in 0..homes.len() {
        for j in i + 1..homes.len() {
            if classes[homes[i]] == classes[homes[j]] {
                pairs.push((i, j));
            }
        }
    }
    let cfg = cfg.clone();
    with_large_stack(move || {
        let budget = Budget { max_ticks: 2 * rounds, ..Budget::default() };
        let mut sim = Simulation::new(&cfg, Box::new(Synchronous), budget)?.without_trace();
        let mut report = TwinReport {
            twins: pairs.iter().map(|&(i, j)| (homes[i], homes[j])).collect(),
            rounds_requested: rounds,
            rounds_checked: 0,
            divergence: None,
        };
        for round in 1..=rounds {
            sim.step();
            sim.step();
            if sim.tick() < 2 * round {
                break;
            }
            let mem = sim.memories();
            report.rounds_checked = round;
            if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| mem[i] != mem[j]) {
                report.divergence = Some(TwinDivergence { round, nodes: (homes[i], homes[j]) });
                break;
            }
        }
        Ok(report)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TunnelReport {
    /// Edges in the tunnel core.
    pub core: usize,
    pub interleavings: u64,
    pub with_meeting: u64,
    /// Interleavings with a meeting that splits the core between the two traversed prefixes.
    pub core_split: u64,
    /// Half-step order (agent 0 or 1 per step) of the first interleaving that failed.
    pub first_failure: Option<Vec<u8>>,
}

impl TunnelReport {
    pub fn all_meet(&self) -> bool {
        self.with_meeting == self.interleavings && self.core_split == self.interleavings
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Spot {
    Node(usize),
    Edge(usize, u32, usize, u32),
}

/// Positions after each half-step of the route from `start`.
fn half_steps(cfg: &Configuration, start: usize, route: &Trail) -> Result<Vec<Spot>> {
    if route.len() % 2 == 1 {
        return Err(Error::OddTrail(route.len()));
    }
    let mut out = vec![Spot::Node(start)];
    let mut v = start;
    for pair in route.ports().chunks(2) {
        let (u, entry) = cfg.traverse_port(v, pair[0])?;
        if entry != pair[1] {
            return Err(Error::Precondition(format!("route does not follow the graph at node {v}")));
        }
        out.push(if (v, pair[0]) <= (u, entry) { Spot::Edge(v, pair[0], u, entry) } else { Spot::Edge(u, entry, v, pair[0]) });
        out.push(Spot::Node(u));
        v = u;
    }
    Ok(out)
}

/// Edges of a route as (from, exit, to, entry).
fn edges(cfg: &Configuration, start: usize, route: &Trail) -> Result<Vec<(usize, u32, usize, u32)>> {
    let mut v = start;
    let mut out = Vec::new();
    for pair in route.ports().chunks(2) {
        let (u, entry) = cfg.traverse_port(v, pair[0])?;
        out.push((v, pair[0], u, entry));
        v = u;
    }
    Ok(out)
}

/// Number of edges of the tunnel core: the largest `i` such that the second route starts by
/// retracing the first `i` edges of the first route backwards. Zero if there is none.
pub fn tunnel_core(cfg: &Configuration, start1: usize, r1: &Trail, start2: usize, r2: &Trail) -> Result<usize> {
    let e1 = edges(cfg, start1, r1)?;
    let e2 = edges(cfg, start2, r2)?;
    let retraces = |i: usize| {
        i <= e2.len()
            && e1[i - 1].2 == start2
            && (0..i).all(|k| {
                let (a, pa, b, pb) = e1[i - 1 - k];
                e2[k] == (b, pb, a, pa)
            })
    };
    Ok((1..=e1.len()).rev().find(|&i| retraces(i)).unwrap_or(0))
}

/// Enumerates every interleaving of single half-steps of two agents following `r1` from
/// `start1` and `r2` from `start2`, and checks each for a meeting inside the tunnel core.
pub fn tunnel_experiment(
    cfg: &Configuration,
    start1: usize,
    r1: &Trail,
    start2: usize,
    r2: &Trail,
    cap: u64,
) -> Result<TunnelReport> {
    let c = tunnel_core(cfg, start1, r1, start2, r2)?;
    if c == 0 {
        return Err(Error::Precondition("routes do not form a tunnel".into()));
    }
    let p1 = half_steps(cfg, start1, r1)?;
    let p2 = half_steps(cfg, start2, r2)?;
    let (n1, n2) = (p1.len() - 1, p2.len() - 1);
    let total = binomial(n1 + n2, n1);
    if total > cap as u128 {
        return Err(Error::EnumerationCap { count: total, cap: cap as u128 });
    }
    let mut report = TunnelReport { core: c, interleavings: 0, with_meeting: 0, core_split: 0, first_failure: None };
    let mut order = Vec::with_capacity(n1 + n2);
    enumerate(&p1, &p2, c, 0, 0, (false, false), &mut order, &mut report);
    Ok(report)
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Whether a meeting after `h1` and `h2` half-steps splits the core: the edges started by the
/// two agents add up to the core, counting the edge they meet on once for each.
fn splits_core(c: usize, h1: usize, h2: usize) -> bool {
    let (k1, k2) = (h1.div_ceil(2), h2.div_ceil(2));
    k1 <= c && k2 <= c && (k1 + k2 == c || k1 + k2 == c + 1)
}

/// Depth-first over interleavings; `seen` tracks whether some meeting, and some meeting
/// splitting the core, happened so far.
#[allow(clippy::too_many_arguments)]
fn enumerate(
    p1: &[Spot],
    p2: &[Spot],
    c: usize,
    h1: usize,
    h2: usize,
    seen: (bool, bool),
    order: &mut Vec<u8>,
    report: &mut TunnelReport,
) {
    let (n1, n2) = (p1.len() - 1, p2.len() - 1);
    if h1 == n1 && h2 == n2 {
        report.interleavings += 1;
        report.with_meeting += seen.0 as u64;
        report.core_split += seen.1 as u64;
        if !seen.1 && report.first_failure.is_none() {
            report.first_failure = Some(order.clone());
        }
        return;
    }
    for (agent, (a, b)) in [(0u8, (h1 + 1, h2)), (1u8, (h1, h2 + 1))] {
        if a > n1 || b > n2 {
            continue;
        }
        let meet = p1[a] == p2[b];
        let next = (seen.0 || meet, seen.1 || (meet && splits_core(c, a, b)));
        order.push(agent);
        enumerate(p1, p2, c, a, b, next, order, report);
        order.pop();
    }
}
