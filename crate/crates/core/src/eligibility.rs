//! Brute-force eligibility checker.
//!
//! A configuration is eligible when all enhanced views are distinct and either two agents have
//! different views or some palindromic trail is non-uniform: it leads from one agent to another
//! and, started at some agent, ends at an empty node.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Configuration;
use crate::trail::Trail;
use crate::view::view_classes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Eligible,
    NotEligible,
    TriviallyEligibleSingleton,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Eligible => "eligible",
            Verdict::NotEligible => "not-eligible",
            Verdict::TriviallyEligibleSingleton => "trivially-eligible-singleton",
        }
    }
}

/// A palindromic trail leading from one agent to another and, from some agent, to an empty node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PalindromeWitness {
    pub trail: Trail,
    /// Start and end of a route between two occupied nodes.
    pub occupied_to_occupied: (usize, usize),
    /// Start and end of a route from an occupied node to an empty one.
    pub occupied_to_unoccupied: (usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Witnesses {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twins: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub view_distinct: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub palindrome: Option<PalindromeWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EligibilityReport {
    pub verdict: Verdict,
    pub clause_alpha: bool,
    pub clause_beta: bool,
    pub clause_gamma: bool,
    pub witnesses: Witnesses,
}

fn first_pair_with(cfg: &Configuration, classes: &[u32], equal: bool) -> Option<(usize, usize)> {
    let occ = cfg.occupied_nodes();
    for (i, &u) in occ.iter().enumerate() {
        for &v in &occ[i + 1..] {
            if (classes[u] == classes[v]) == equal {
                return Some((u, v));
            }
        }
    }
    None
}

fn norris_depth(cfg: &Configuration) -> usize {
    cfg.node_count().saturating_sub(1)
}

/// True when all agents have pairwise different enhanced views. Otherwise returns a twin pair.
pub fn distinct_enhanced_views(cfg: &Configuration) -> (bool, Option<(usize, usize)>) {
    let marks: Vec<bool> = (0..cfg.node_count()).map(|v| cfg.is_occupied(v)).collect();
    let classes = view_classes(cfg, norris_depth(cfg), Some(&marks));
    let twins = first_pair_with(cfg, &classes, true);
    (twins.is_none(), twins)
}

/// True when two agents have different views, with such a pair.
pub fn exists_view_asymmetry(cfg: &Configuration) -> (bool, Option<(usize, usize)>) {
    let classes = view_classes(cfg, norris_depth(cfg), None);
    let pair = first_pair_with(cfg, &classes, false);
    (pair.is_some(), pair)
}

/// Searches palindromic trails of up to `3(n-1)` edges, `n` the size bound, for a non-uniform
/// one. Returns the first in canonical order.
pub fn find_non_uniform_palindrome(cfg: &Configuration, cap: u128) -> Result<Option<PalindromeWitness>> {
    let n = cfg.bound_n();
    palindrome_search(cfg, 3 * n.saturating_sub(1), cap)
}

/// Palindrome search with an explicit edge bound.
pub fn palindrome_search(
    cfg: &Configuration,
    max_edges: usize,
    cap: u128,
) -> Result<Option<PalindromeWitness>> {
    let occ = cfg.occupied_nodes();
    let mut generated: u128 = 0;
    for edges in 1..=max_edges {
        let mut candidates = std::collections::BTreeSet::new();
        for &u in &occ {
            palindromes_from(cfg, u, edges, &mut |t| {
                generated += 1;
                candidates.insert(Trail(t.to_vec()));
            });
            if generated > cap {
                return Err(Error::EnumerationCap { count: generated, cap });
            }
        }
        for t in candidates {
            let mut to_occ = None;
            let mut to_free = None;
            for &u in &occ {
                match cfg.trail_end(u, t.ports()) {
                    Some(e) if cfg.is_occupied(e) => to_occ = to_occ.or(Some((u, e))),
                    Some(e) => to_free = to_free.or(Some((u, e))),
                    None => {}
                }
            }
            if let (Some(a), Some(b)) = (to_occ, to_free) {
                return Ok(Some(PalindromeWitness {
                    trail: t,
                    occupied_to_occupied: a,
                    occupied_to_unoccupied: b,
                }));
            }
        }
    }
    Ok(None)
}

/// Every palindromic trail of exactly `edges` edges feasible from `v`. The first half is a free
/// walk; an odd middle edge must leave and enter by the same port; the rest is forced.
fn palindromes_from(cfg: &Configuration, v: usize, edges: usize, out: &mut dyn FnMut(&[u32])) {
    let half = edges / 2;
    let mut buf = Vec::with_capacity(2 * edges);
    half_walks(cfg, v, half, edges % 2 == 1, &mut buf, out);
}

fn half_walks(
    cfg: &Configuration,
    v: usize,
    left: usize,
    odd: bool,
    buf: &mut Vec<u32>,
    out: &mut dyn FnMut(&[u32]),
) {
    if left == 0 {
        let base = buf.len();
        if odd {
            for p in 0..cfg.degree(v) as u32 {
                let (u, q) = cfg.neighbor(v, p).unwrap();
                if q == p {
                    buf.extend([p, p]);
                    close(cfg, u, base, buf, out);
                    buf.truncate(base);
                }
            }
            return;
        }
        close(cfg, v, base, buf, out);
        return;
    }
    for p in 0..cfg.degree(v) as u32 {
        let (u, q) = cfg.neighbor(v, p).unwrap();
        buf.extend([p, q]);
        half_walks(cfg, u, left - 1, odd, buf, out);
        buf.truncate(buf.len() - 2);
    }
}

/// Appends the mirror of `buf[..half]` if it can be walked from `at`.
fn close(cfg: &Configuration, at: usize, half: usize, buf: &mut Vec<u32>, out: &mut dyn FnMut(&[u32])) {
    let tail: Vec<u32> = buf[..half].iter().rev().copied().collect();
    if cfg.trail_end(at, &tail).is_some() {
        let keep = buf.len();
        buf.extend_from_slice(&tail);
        out(buf);
        buf.truncate(keep);
    }
}

/// Assembles the full report.
pub fn check_ec(cfg: &Configuration) -> Result<EligibilityReport> {
    check_ec_with_cap(cfg, crate::graph::DEFAULT_ENUMERATION_CAP)
}

pub fn check_ec_with_cap(cfg: &Configuration, cap: u128) -> Result<EligibilityReport> {
    let (alpha, twins) = distinct_enhanced_views(cfg);
    let (beta, view_distinct) = exists_view_asymmetry(cfg);
    let palindrome = find_non_uniform_palindrome(cfg, cap)?;
    let gamma = palindrome.is_some();
    let verdict = if cfg.agent_count() == 1 {
        Verdict::TriviallyEligibleSingleton
    } else if alpha && (beta || gamma) {
        Verdict::Eligible
    } else {
        Verdict::NotEligible
    };
    Ok(EligibilityReport {
        verdict,
        clause_alpha: alpha,
        clause_beta: beta,
        clause_gamma: gamma,
        witnesses: Witnesses { twins, view_distinct, palindrome },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::view::{complete_identifier, truncated_view};

    const CAP: u128 = 10_000_000;

    #[test]
    fn k2_twins() {
        let k2 = fixtures::k2(&[0, 1]);
        assert_eq!(distinct_enhanced_views(&k2), (false, Some((0, 1))));
        assert_eq!(find_non_uniform_palindrome(&k2, CAP).unwrap(), None);
        assert_eq!(check_ec(&k2).unwrap().verdict, Verdict::NotEligible);
    }

    #[test]
    fn p3_ends_eligible() {
        let p3 = fixtures::p3(&[0, 2]);
        assert!(distinct_enhanced_views(&p3).0);
        assert!(exists_view_asymmetry(&p3).0);
        let r = check_ec(&p3).unwrap();
        assert_eq!(r.verdict, Verdict::Eligible);
    }

    #[test]
    fn singleton_verdict() {
        let r = check_ec(&fixtures::p3(&[1])).unwrap();
        assert!(r.clause_alpha);
        assert_eq!(r.verdict, Verdict::TriviallyEligibleSingleton);
    }

    #[test]
    fn ring_and_c1() {
        let ring = fixtures::oriented_ring(5);
        assert!(!exists_view_asymmetry(&ring).0);
        assert_eq!(check_ec(&ring).unwrap().verdict, Verdict::NotEligible);
        let c1 = fixtures::c1_ring();
        let r = check_ec(&c1).unwrap();
        assert!(r.clause_beta);
        assert_eq!(r.verdict, Verdict::Eligible);
    }

    #[test]
    fn palindrome_witness_revalidates() {
        let path = fixtures::path4(&[0, 1, 2]);
        if let Some(w) = find_non_uniform_palindrome(&path, CAP).unwrap() {
            assert!(w.trail.is_palindrome());
            let (a, b) = w.occupied_to_occupied;
            assert!(path.is_occupied(a) && path.is_occupied(b));
            assert_eq!(path.trail_end(a, w.trail.ports()), Some(b));
            let (c, d) = w.occupied_to_unoccupied;
            assert!(path.is_occupied(c) && !path.is_occupied(d));
            assert_eq!(path.trail_end(c, w.trail.ports()), Some(d));
        }
    }

    #[test]
    fn square_is_palindrome_eligible_only() {
        let sq = fixtures::square_abc();
        let r = check_ec(&sq).unwrap();
        assert!(r.clause_alpha);
        assert!(!r.clause_beta);
        assert!(r.clause_gamma);
        assert_eq!(r.verdict, Verdict::Eligible);
    }

    #[test]
    fn twin_pair_has_equal_identifiers() {
        let ring = fixtures::oriented_ring(4);
        let (_, twins) = distinct_enhanced_views(&ring);
        let (u, v) = twins.unwrap();
        assert_eq!(complete_identifier(&ring, u).unwrap(), complete_identifier(&ring, v).unwrap());
        let (_, pair) = exists_view_asymmetry(&fixtures::p3(&[0, 1]));
        let (u, v) = pair.unwrap();
        let p3 = fixtures::p3(&[0, 1]);
        assert_ne!(truncated_view(&p3, u, 2), truncated_view(&p3, v, 2));
    }

    #[test]
    fn palindrome_search_matches_filtered_enumeration() {
        let p3 = fixtures::p3(&[0, 1]);
        let all = crate::graph::enumerate_trails(&p3, 3, true, CAP).unwrap();
        let brute = all.into_iter().find(|t| {
            let occ = p3.occupied_nodes();
            t.is_palindrome()
                && occ.iter().any(|&u| p3.trail_end(u, t.ports()).is_some_and(|e| p3.is_occupied(e)))
                && occ.iter().any(|&u| p3.trail_end(u, t.ports()).is_some_and(|e| !p3.is_occupied(e)))
        });
        assert_eq!(find_non_uniform_palindrome(&p3, CAP).unwrap().map(|w| w.trail), brute);
    }
}
