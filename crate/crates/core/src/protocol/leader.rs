//! Leader choice from a fourth-phase label.

use crate::error::{Error, Result};
use crate::protocol::label::Label;
use crate::trail::Trail;
use crate::view::{CompleteIdentifier, TruncatedView};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaderChoice {
    /// Trail from the agent's start to the leader's start.
    pub trail: Trail,
    pub identifier: CompleteIdentifier,
    /// View node the trail ends at.
    pub node: usize,
}

impl LeaderChoice {
    pub fn elects_self(&self) -> bool {
        self.trail.is_empty()
    }
}

/// Identifier of every marked node within depth `n-1`, in code order.
pub fn marked_identifiers(
    f: &crate::view::BinaryMapping,
    view: &TruncatedView,
    n: usize,
) -> Vec<(CompleteIdentifier, usize)> {
    let rel = n.saturating_sub(1);
    view.nodes_within(rel)
        .filter(|&x| f.get(x))
        .map(|x| {
            let id = CompleteIdentifier {
                code: view.subtree_code(x, rel),
                marks: view.restrict_mapping(f, x, rel),
            };
            (id, x)
        })
        .collect()
}

/// Picks the marked node with the smallest identifier; the first node carrying an identifier
/// stands for it.
pub fn choose_leader(alpha4: &Label, view: &TruncatedView, n: usize) -> Result<LeaderChoice> {
    if alpha4.length() != 4 {
        return Err(Error::Precondition(format!("leader choice needs four mappings, got {}", alpha4.length())));
    }
    let f = alpha4.last();
    if f.len() != view.len() {
        return Err(Error::Precondition("mapping does not fit the view".into()));
    }
    if view.depth() + 1 < n {
        return Err(Error::InsufficientDepth { have: view.depth(), need: n - 1 });
    }
    let mut seen: Vec<(CompleteIdentifier, usize)> = Vec::new();
    for (id, x) in marked_identifiers(f, view, n) {
        if !seen.iter().any(|(i, _)| *i == id) {
            seen.push((id, x));
        }
    }
    let (identifier, node) = seen
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0))
        .ok_or_else(|| Error::Protocol("no marked node to elect".into()))?;
    Ok(LeaderChoice { trail: view.path_to(node), identifier, node })
}
