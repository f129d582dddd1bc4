//! Exhaustive generation of small configurations.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Configuration;

/// Largest graph size the generator accepts.
pub const HARD_MAX_NODES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Occupancy {
    /// Every non-empty set of nodes.
    All,
    /// Up to `per_graph` distinct non-empty sets per graph, drawn with the given seed.
    Sampled { per_graph: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub max_nodes: usize,
    pub max_degree: Option<usize>,
    pub occupancy: Occupancy,
    /// Drop configurations isomorphic (ports and agents included) to an earlier one.
    pub dedup: bool,
    /// Keep only placements with at least this many agents.
    pub min_agents: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec { max_nodes: 4, max_degree: None, occupancy: Occupancy::All, dedup: true, min_agents: 1 }
    }
}

/// All configurations allowed by `spec`, graphs by size, then edge set, then port assignment,
/// then placement. The size bound of each configuration is its node count.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<Configuration>> {
    if spec.max_nodes > HARD_MAX_NODES {
        return Err(Error::EnumerationCap { count: spec.max_nodes as u128, cap: HARD_MAX_NODES as u128 });
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for m in 2..=spec.max_nodes {
        for edges in port_labeled_graphs(m, spec.max_degree) {
            for occ in placements(m, &spec.occupancy, out.len() as u64) {
                if occ.len() < spec.min_agents {
                    continue;
                }
                if spec.dedup && !seen.insert(canonical_form(m, &edges, &occ)) {
                    continue;
                }
                out.push(Configuration::new(m, &edges, &occ, m)?);
            }
        }
    }
    Ok(out)
}

/// A random connected configuration on `m` nodes: a random spanning tree plus each other edge
/// with probability `density`, random port orders, and a random non-empty set of agents.
pub fn random_configuration(m: usize, density: f64, seed: u64) -> Result<Configuration> {
    if m == 0 {
        return Err(Error::Precondition("a graph needs at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for v in 1..m {
        pairs.push((rng.gen_range(0..v), v));
    }
    for u in 0..m {
        for v in u + 1..m {
            if !pairs.contains(&(u, v)) && rng.gen_bool(density) {
                pairs.push((u, v));
            }
        }
    }
    let mut ports: Vec<Vec<u32>> = (0..m)
        .map(|v| {
            let d = pairs.iter().filter(|&&(a, b)| a == v || b == v).count() as u32;
            let mut p: Vec<u32> = (0..d).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let edges: Vec<Edge> = pairs
        .iter()
        .map(|&(u, v)| {
            let pu = ports[u].pop().unwrap();
            let pv = ports[v].pop().unwrap();
            (u, pu, v, pv)
        })
        .collect();
    let occupied: Vec<usize> = loop {
        let occ: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
        if !occ.is_empty() {
            break occ;
        }
    };
    Configuration::new(m, &edges, &occupied, m)
}

type Edge = (usize, u32, usize, u32);

fn port_labeled_graphs(m: usize, max_degree: Option<usize>) -> Vec<Vec<Edge>> {
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << pairs.len()) {
        let chosen: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        if !connected(m, &chosen) {
            continue;
        }
        let incident: Vec<Vec<usize>> = (0..m)
            .map(|v| (0..chosen.len()).filter(|&e| chosen[e].0 == v || chosen[e].1 == v).collect())
            .collect();
        if max_degree.is_some_and(|d| incident.iter().any(|i| i.len() > d)) {
            continue;
        }
        let perms: Vec<Vec<Vec<u32>>> = incident.iter().map(|i| permutations(i.len())).collect();
        let mut idx = vec![0usize; m];
        loop {
            let mut ports = vec![(0u32, 0u32); chosen.len()];
            for v in 0..m {
                for (k, &e) in incident[v].iter().enumerate() {
                    let p = perms[v][idx[v]][k];
                    if chosen[e].0 == v {
                        ports[e].0 = p;
                    } else {
                        ports[e].1 = p;
                    }
                }
            }
            out.push(chosen.iter().zip(&ports).map(|(&(u, v), &(pu, pv))| (u, pu, v, pv)).collect());
            let mut v = m;
            loop {
                if v == 0 {
                    break;
                }
                v -= 1;
                idx[v] += 1;
                if idx[v] < perms[v].len() {
                    break;
                }
                idx[v] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    out
}

fn connected(m: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == v && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// All orderings of `0..k`, lexicographic.
fn permutations(k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (0..k as u32).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else { return out };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

fn placements(m: usize, occupancy: &Occupancy, salt: u64) -> Vec<Vec<usize>> {
    let all: Vec<Vec<usize>> =
        (1u32..(1 << m)).map(|mask| (0..m).filter(|&v| mask >> v & 1 == 1).collect()).collect();
    match occupancy {
        Occupancy::All => all,
        Occupancy::Sampled { per_graph, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
            let mut picked: Vec<Vec<usize>> = all.choose_multiple(&mut rng, *per_graph).cloned().collect();
            picked.sort();
            picked
        }
    }
}

fn canonical_form(m: usize, edges: &[Edge], occ: &[usize]) -> (Vec<Edge>, Vec<usize>) {
    let mut best: Option<(Vec<Edge>, Vec<usize>)> = None;
    for perm in permutations(m) {
        let map = |v: usize| perm[v] as usize;
        let mut es: Vec<Edge> = edges
            .iter()
            .map(|&(u, pu, v, pv)| {
                let (a, b) = (map(u), map(v));
                if a < b {
                    (a, pu, b, pv)
                } else {
                    (b, pv, a, pu)
                }
            })
            .collect();
        es.sort();
        let mut os: Vec<usize> = occ.iter().map(|&v| map(v)).collect();
        os.sort();
        let cand = (es, os);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.unwrap()
}
