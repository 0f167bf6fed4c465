//! Compact sets of feature indices.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// A set of feature indices backed by a bit vector.
///
/// Trailing zero words are never stored, so two sets with the same members
/// compare equal regardless of how they were built.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureSet {
    words: Vec<u64>,
}

impl FeatureSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// All indices in `0..n`.
    pub fn full(n: usize) -> Self {
        let mut set = Self::new();
        for i in 0..n {
            set.insert(i);
        }
        set
    }

    pub fn insert(&mut self, feature: usize) {
        let (w, b) = (feature / 64, feature % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn remove(&mut self, feature: usize) {
        let (w, b) = (feature / 64, feature % 64);
        if w < self.words.len() {
            self.words[w] &= !(1 << b);
            self.trim();
        }
    }

    pub fn contains(&self, feature: usize) -> bool {
        let (w, b) = (feature / 64, feature % 64);
        self.words.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Largest member plus one, or zero for the empty set.
    pub fn bound(&self) -> usize {
        match self.words.last() {
            Some(&w) => (self.words.len() - 1) * 64 + (64 - w.leading_zeros() as usize),
            None => 0,
        }
    }

    pub fn is_subset(&self, other: &FeatureSet) -> bool {
        if self.words.len() > other.words.len() {
            return false;
        }
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersect_with(&mut self, other: &FeatureSet) {
        self.words.truncate(other.words.len());
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        self.trim();
    }

    pub fn intersection(&self, other: &FeatureSet) -> FeatureSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn union_with(&mut self, other: &FeatureSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Members strictly below `limit`.
    pub fn prefix(&self, limit: usize) -> FeatureSet {
        let mut out = self.clone();
        let (w, b) = (limit / 64, limit % 64);
        if w < out.words.len() {
            out.words.truncate(w + 1);
            out.words[w] &= (1u64 << b).wrapping_sub(1);
            out.trim();
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut rest = word;
            core::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = FeatureSet::new();
        for f in iter {
            set.insert(f);
        }
        set
    }
}

impl<const N: usize> From<[usize; N]> for FeatureSet {
    fn from(items: [usize; N]) -> Self {
        items.into_iter().collect()
    }
}

/// Shortlex order: smaller sets first, equal sizes by ascending member sequence.
impl Ord for FeatureSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for FeatureSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_remove_and_trim() {
        let mut s = FeatureSet::from([3, 70, 5]);
        assert_eq!(s.to_vec(), [3, 5, 70]);
        assert_eq!(s.bound(), 71);
        s.remove(70);
        assert_eq!(s, FeatureSet::from([5, 3]));
        assert_eq!(s.bound(), 6);
    }

    #[test]
    fn subset_and_prefix() {
        let a = FeatureSet::from([1, 2]);
        let b = FeatureSet::from([1, 2, 100]);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert!(FeatureSet::new().is_subset(&a));
        assert_eq!(b.prefix(100), a);
        assert_eq!(b.prefix(2), FeatureSet::from([1]));
        assert_eq!(b.prefix(64), a);
    }

    #[test]
    fn shortlex_order() {
        let mut v = alloc::vec![
            FeatureSet::from([0, 1, 4]),
            FeatureSet::from([1, 2]),
            FeatureSet::from([1]),
            FeatureSet::from([1, 3]),
        ];
        v.sort();
        assert_eq!(v[0], FeatureSet::from([1]));
        assert_eq!(v[1], FeatureSet::from([1, 2]));
        assert_eq!(v[3], FeatureSet::from([0, 1, 4]));
    }
}
