//! Port sequences and their canonical text form.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// A finite sequence of port numbers. Route trails alternate exit and entry ports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Trail(pub Vec<u32>);

impl Trail {
    pub fn new(ports: Vec<u32>) -> Self {
        Trail(ports)
    }

    pub fn empty() -> Self {
        Trail(Vec::new())
    }

    pub fn ports(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of edges when read as a route trail.
    pub fn edges(&self) -> usize {
        self.0.len() / 2
    }

    pub fn reversed(&self) -> Trail {
        let mut v = self.0.clone();
        v.reverse();
        Trail(v)
    }

    pub fn is_palindrome(&self) -> bool {
        let n = self.0.len();
        (0..n / 2).all(|i| self.0[i] == self.0[n - 1 - i])
    }

    pub fn concat(&self, other: &Trail) -> Trail {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Trail(v)
    }

    /// Iterator over (exit, entry) pairs. Panics on odd length.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        assert!(self.0.len() % 2 == 0, "odd trail");
        self.0.chunks(2).map(|c| (c[0], c[1]))
    }
}

impl From<Vec<u32>> for Trail {
    fn from(v: Vec<u32>) -> Self {
        Trail(v)
    }
}

impl From<&[u32]> for Trail {
    fn from(v: &[u32]) -> Self {
        Trail(v.to_vec())
    }
}

/// Canonical order: shorter first, then lexicographic.
impl Ord for Trail {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Trail {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Trail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Trail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Malformed(format!("trail must be parenthesized: {s:?}")))?;
        if inner.trim().is_empty() {
            return Ok(Trail::empty());
        }
        inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Malformed(format!("bad port {t:?} in trail")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Trail)
    }
}

impl serde::Serialize for Trail {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Trail {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reverse_example() {
        assert_eq!(Trail::from(vec![0, 0, 1, 0]).reversed(), Trail::from(vec![0, 1, 0, 0]));
    }

    #[test]
    fn palindromes() {
        assert!(Trail::from(vec![0, 0]).is_palindrome());
        assert!(Trail::from(vec![2, 1, 1, 2]).is_palindrome());
        assert!(!Trail::from(vec![0, 1]).is_palindrome());
        assert!(Trail::empty().is_palindrome());
    }

    #[test]
    fn text_round_trip() {
        let t = Trail::from(vec![0, 0, 1, 0]);
        assert_eq!(t.to_string(), "(0,0,1,0)");
        assert_eq!("(0,0,1,0)".parse::<Trail>().unwrap(), t);
        assert_eq!("()".parse::<Trail>().unwrap(), Trail::empty());
        assert!("0,1".parse::<Trail>().is_err());
    }

    #[test]
    fn canonical_order_is_length_first() {
        let a = Trail::from(vec![1, 1]);
        let b = Trail::from(vec![0, 0, 0, 0]);
        assert!(a < b);
        assert!(Trail::from(vec![0, 1]) < a);
    }
}
