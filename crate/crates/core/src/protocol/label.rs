//! Agent labels: a view code followed by a chain of binary mappings on that view.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::view::{BinaryMapping, TruncatedView, ViewCode};

/// The label an agent uses in one phase.
///
/// Ordering compares the code sequences lexicographically (a proper prefix comes first), then the
/// number of mappings, then the mappings bit by bit. Every agent computes it the same way.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    pub code: ViewCode,
    pub mappings: Vec<BinaryMapping>,
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.code
            .0
            .cmp(&other.code.0)
            .then(self.mappings.len().cmp(&other.mappings.len()))
            .then_with(|| self.mappings.cmp(&other.mappings))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn label_order(a: &Label, b: &Label) -> Ordering {
    a.cmp(b)
}

/// Phase-one label: the code of a view of depth `3(n-1)` with only the root marked.
pub fn initial_label(view: &TruncatedView, n: usize) -> Result<Label> {
    let need = 3 * n.saturating_sub(1);
    if view.depth() != need {
        return Err(Error::Precondition(format!(
            "initial label needs a view of depth {need}, got {}",
            view.depth()
        )));
    }
    Ok(Label { code: view.code(), mappings: vec![BinaryMapping::root_only(view.len())] })
}

impl Label {
    /// Number of mappings, which is also the phase the label belongs to.
    pub fn length(&self) -> usize {
        self.mappings.len()
    }

    pub fn prefix(&self, j: usize) -> Label {
        Label { code: self.code.clone(), mappings: self.mappings[..j].to_vec() }
    }

    pub fn extended(&self, f: BinaryMapping) -> Label {
        let mut mappings = self.mappings.clone();
        mappings.push(f);
        Label { code: self.code.clone(), mappings }
    }

    pub fn last(&self) -> &BinaryMapping {
        self.mappings.last().expect("labels have at least one mapping")
    }

    /// Checks the first mapping marks only the root and marks never retract.
    pub fn validate(&self) -> Result<()> {
        let first = self.mappings.first().ok_or_else(|| Error::Protocol("label without mappings".into()))?;
        if *first != BinaryMapping::root_only(first.len()) {
            return Err(Error::Protocol("first mapping must mark only the root".into()));
        }
        if self.mappings.len() > 4 {
            return Err(Error::Protocol("label longer than four mappings".into()));
        }
        for w in self.mappings.windows(2) {
            if !w[0].le(&w[1]) {
                return Err(Error::Protocol("mapping chain is not monotone".into()));
            }
        }
        Ok(())
    }

    /// Dump form: the code, then one bitstring per mapping, separated by `;`.
    pub fn dump(&self) -> String {
        let mut s = self.code.to_string();
        for m in &self.mappings {
            s.push(';');
            s.push_str(&m.bitstring());
        }
        s
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

impl serde::Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.dump())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::view::truncated_view;

    #[test]
    fn initial_labels() {
        let k2 = fixtures::k2(&[0, 1]);
        let l = initial_label(&truncated_view(&k2, 0, 3), 2).unwrap();
        assert_eq!(l.length(), 1);
        assert_eq!(l.mappings[0].count(), 1);
        assert!(initial_label(&truncated_view(&k2, 0, 2), 2).is_err());

        let p3 = fixtures::p3(&[0, 2]);
        let a = initial_label(&truncated_view(&p3, 0, 6), 3).unwrap();
        let c = initial_label(&truncated_view(&p3, 2, 6), 3).unwrap();
        assert_ne!(a, c);
        assert_eq!(label_order(&a, &c), label_order(&a, &c));
        assert_ne!(label_order(&a, &c), Ordering::Equal);

        let ring = fixtures::oriented_ring(4);
        let ls: Vec<_> = (0..4).map(|v| initial_label(&truncated_view(&ring, v, 9), 4).unwrap()).collect();
        assert!(ls.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn order_rules() {
        let a = Label { code: ViewCode(vec![1, 0]), mappings: vec![BinaryMapping::root_only(2)] };
        let b = Label { code: ViewCode(vec![1, 0, 0]), mappings: vec![BinaryMapping::root_only(2)] };
        assert_eq!(label_order(&a, &a.clone()), Ordering::Equal);
        assert_eq!(label_order(&a, &b), Ordering::Less);
    }

    #[test]
    fn validation() {
        let f1 = BinaryMapping::root_only(3);
        let f2 = BinaryMapping(vec![true, false, true]);
        let ok = Label { code: ViewCode(vec![]), mappings: vec![f1.clone(), f2.clone()] };
        assert!(ok.validate().is_ok());
        let bad = Label { code: ViewCode(vec![]), mappings: vec![f2, f1] };
        assert!(bad.validate().is_err());
        assert_eq!(ok.dump(), "();100;101");
    }
}
