//! The per-phase sequence of (label, label, trail) triples that schedules stages.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::protocol::label::Label;
use crate::trail::Trail;

/// One stage: the first label follows the trail, the second follows its reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub first: u32,
    pub second: u32,
    pub trail: u32,
}

/// Stage schedule for one phase, built from the labels held by agents at the start of the phase
/// and the trails feasible somewhere in the graph.
#[derive(Debug, Clone)]
pub struct TripleSequence {
    labels: Vec<Label>,
    trails: Arc<Vec<Trail>>,
    entries: Vec<Triple>,
}

/// All ordered label pairs times all trails, keeping a pair of equal labels only with a
/// palindromic trail. Ordered by label pair, then trail.
pub fn build_triple_sequence(labels: &[Label], trails: Arc<Vec<Trail>>) -> Result<TripleSequence> {
    if labels.is_empty() {
        return Err(Error::Precondition("triple sequence needs at least one label".into()));
    }
    let mut labels = labels.to_vec();
    labels.sort();
    labels.dedup();
    let len = labels[0].length();
    if labels.iter().any(|l| l.length() != len) {
        return Err(Error::Precondition("labels of different lengths".into()));
    }
    let palindromic: Vec<bool> = trails.iter().map(|t| t.is_palindrome()).collect();
    let mut entries = Vec::new();
    for a in 0..labels.len() as u32 {
        for b in 0..labels.len() as u32 {
            for (t, &pal) in palindromic.iter().enumerate() {
                if a != b || pal {
                    entries.push(Triple { first: a, second: b, trail: t as u32 });
                }
            }
        }
    }
    Ok(TripleSequence { labels, trails, entries })
}

impl TripleSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Phase this sequence belongs to.
    pub fn phase(&self) -> usize {
        self.labels[0].length()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn trails(&self) -> &Arc<Vec<Trail>> {
        &self.trails
    }

    pub fn label_index(&self, l: &Label) -> Option<u32> {
        self.labels.binary_search(l).ok().map(|i| i as u32)
    }

    pub fn label(&self, i: u32) -> &Label {
        &self.labels[i as usize]
    }

    pub fn trail(&self, i: u32) -> &Trail {
        &self.trails[i as usize]
    }

    /// Stage `s`, counted from 1.
    pub fn stage(&self, s: usize) -> Triple {
        self.entries[s - 1]
    }

    pub fn get(&self, s: usize) -> (&Label, &Label, &Trail) {
        let t = self.stage(s);
        (self.label(t.first), self.label(t.second), self.trail(t.trail))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::enumerate_trails;
    use crate::view::{BinaryMapping, ViewCode};

    fn lab(c: u32) -> Label {
        Label { code: ViewCode(vec![c]), mappings: vec![BinaryMapping::root_only(1)] }
    }

    #[test]
    fn single_label_keeps_palindromes() {
        let k2 = fixtures::k2(&[0, 1]);
        let trails = Arc::new(enumerate_trails(&k2, 2, true, 1000).unwrap());
        let seq = build_triple_sequence(&[lab(1)], trails).unwrap();
        assert_eq!(seq.len(), 3);
        for s in 1..=3 {
            let (a, b, t) = seq.get(s);
            assert_eq!(a, b);
            assert!(t.is_palindrome());
        }
    }

    #[test]
    fn two_labels_count() {
        let p3 = fixtures::p3(&[0, 2]);
        let trails = Arc::new(enumerate_trails(&p3, 3, true, 100_000).unwrap());
        let k = trails.len();
        let pal = trails.iter().filter(|t| t.is_palindrome()).count();
        let seq = build_triple_sequence(&[lab(2), lab(1)], trails).unwrap();
        assert_eq!(seq.len(), 2 * k + 2 * pal);
        assert_eq!(seq.label(0), &lab(1));
        let (a, b, _) = seq.get(1);
        assert_eq!((a, b), (&lab(1), &lab(1)));
        for s in 1..=seq.len() {
            let (a, b, t) = seq.get(s);
            assert!(a != b || t.is_palindrome());
        }
    }

    #[test]
    fn empty_labels_rejected() {
        assert!(build_triple_sequence(&[], Arc::new(vec![])).is_err());
    }
}
