//! Phase-level executor.
//!
//! Instead of stepping agents, every phase applies the marking rules of the label update to every
//! meeting the schedule is guaranteed to produce: for each agent and each other agent reachable by
//! a trail of at most `3(n-1)` edges, provided the two labels differ or the trail is a palindrome.
//! The node at the end of the trail is marked, and for trails of at most `n-1` edges the partner's
//! marks are pulled in through a transition. The result depends on the configuration only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Configuration;
use crate::protocol::label::Label;
use crate::protocol::leader::{choose_leader, marked_identifiers};
use crate::trail::Trail;
use crate::view::{compute_transition, truncated_view, BinaryMapping, TruncatedView};

#[derive(Debug, Clone, Serialize)]
pub struct AgentOutcome {
    pub home: usize,
    /// Final label, one mapping per phase plus the initial one.
    pub label: Label,
    pub leader_trail: Trail,
    pub leader_node: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemanticOutcome {
    pub agents: Vec<AgentOutcome>,
    pub consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
    /// Marks placed on view nodes whose graph node holds no agent. Always zero for a sound run.
    pub false_marks: usize,
}

/// Outcome plus the annotated views the marks refer to.
#[derive(Debug, Clone)]
pub struct SemanticRun {
    pub outcome: SemanticOutcome,
    pub views: Vec<TruncatedView>,
}

pub fn run_semantic(cfg: &Configuration) -> Result<SemanticOutcome> {
    Ok(run_semantic_detailed(cfg)?.outcome)
}

pub fn run_semantic_detailed(cfg: &Configuration) -> Result<SemanticRun> {
    let homes = cfg.occupied_nodes();
    if homes.len() < 2 {
        return Err(Error::Precondition("the protocol needs at least two agents".into()));
    }
    let n = cfg.bound_n();
    let depth = 3 * (n - 1);
    let near = 2 * (n - 1);
    let mut agent_at = vec![None; cfg.node_count()];
    for (i, &h) in homes.iter().enumerate() {
        agent_at[h] = Some(i);
    }
    let views: Vec<TruncatedView> = homes.iter().map(|&h| truncated_view(cfg, h, depth)).collect();
    let near_views: Vec<TruncatedView> = views.iter().map(|v| v.truncate(near)).collect();
    let near_index: Vec<Vec<usize>> = views.iter().map(|v| v.nodes_within(near).collect()).collect();
    let mut labels: Vec<Label> = views
        .iter()
        .map(|v| Label { code: v.code(), mappings: vec![BinaryMapping::root_only(v.len())] })
        .collect();

    for _phase in 1..=3 {
        let k = homes.len();
        let differ: Vec<Vec<bool>> =
            (0..k).map(|i| (0..k).map(|j| labels[i] != labels[j]).collect()).collect();
        let current: Vec<BinaryMapping> = labels.iter().map(|l| l.last().clone()).collect();
        let mut next = current.clone();
        for i in 0..k {
            let vi = &views[i];
            for x in 1..vi.len() {
                let g = vi.oracle_origin(x).expect("annotated");
                let Some(j) = agent_at[g] else { continue };
                if j == i {
                    continue;
                }
                let path = if differ[i][j] && vi.node_depth(x) > n - 1 {
                    None
                } else {
                    let p = vi.path_to(x);
                    if !differ[i][j] && !p.is_palindrome() {
                        continue;
                    }
                    Some(p)
                };
                next[i].set(x);
                if vi.node_depth(x) <= n - 1 {
                    let path = path.expect("computed for shallow nodes");
                    let anchor = views[j]
                        .node_at_trail_end(&path.reversed())?
                        .ok_or_else(|| Error::Protocol("reverse trail infeasible in partner view".into()))?;
                    let phi = compute_transition(&near_views[i], &views[j], anchor, n)?;
                    for (y, &full) in near_index[i].iter().enumerate() {
                        if current[j].get(phi.image(y)) {
                            next[i].set(full);
                        }
                    }
                }
            }
        }
        for (l, f) in labels.iter_mut().zip(next) {
            *l = l.extended(f);
        }
    }

    let mut agents = Vec::with_capacity(homes.len());
    let mut false_marks = 0;
    for (i, &h) in homes.iter().enumerate() {
        for f in &labels[i].mappings {
            false_marks += (0..views[i].len())
                .filter(|&x| f.get(x) && !cfg.is_occupied(views[i].oracle_origin(x).unwrap()))
                .count();
        }
        let choice = choose_leader(&labels[i], &views[i], n)?;
        let node = cfg
            .trail_end(h, choice.trail.ports())
            .ok_or_else(|| Error::Protocol("leader trail infeasible".into()))?;
        agents.push(AgentOutcome { home: h, label: labels[i].clone(), leader_trail: choice.trail, leader_node: node });
    }
    let consistent = agents.windows(2).all(|w| w[0].leader_node == w[1].leader_node);
    let diagnosis = if consistent {
        None
    } else if has_duplicate_identifiers(&labels, &views, n) {
        Some("duplicate complete identifiers".to_string())
    } else {
        Some("agents resolved different leaders".to_string())
    };
    Ok(SemanticRun { outcome: SemanticOutcome { agents, consistent, diagnosis, false_marks }, views })
}

fn has_duplicate_identifiers(labels: &[Label], views: &[TruncatedView], n: usize) -> bool {
    labels.iter().zip(views).any(|(l, v)| {
        let ids = marked_identifiers(l.last(), v, n);
        ids.iter().enumerate().any(|(a, (ia, xa))| {
            ids[a + 1..]
                .iter()
                .any(|(ib, xb)| ia == ib && v.oracle_origin(*xa) != v.oracle_origin(*xb))
        })
    })
}
