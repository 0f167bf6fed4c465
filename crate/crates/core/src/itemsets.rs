//! Transaction databases of important-feature sets and closed frequent
//! itemset enumeration.
//!
//! Enumeration is divide and conquer over prefix-preserving closure
//! extensions: each closed set `P` is extended by an item `i` above its core
//! index, the extension is closed by intersecting the supporting
//! transactions, and the child is kept only if the closure adds no item
//! below `i`. Every closed set is reached exactly once, so no duplicate
//! check is needed.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::FeatureSet;

/// A multiset of feature subsets over `0..ground_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDb {
    transactions: Vec<FeatureSet>,
    ground_size: usize,
}

impl TransactionDb {
    pub fn new(transactions: Vec<FeatureSet>, ground_size: usize) -> Result<Self> {
        if let Some(t) = transactions.iter().find(|t| t.bound() > ground_size) {
            return Err(Error::param(
                "transactions",
                alloc::format!("{t:?} exceeds ground set of size {ground_size}"),
            ));
        }
        Ok(Self { transactions, ground_size })
    }

    pub fn transactions(&self) -> &[FeatureSet] {
        &self.transactions
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// `ceil(tau * |db|)`, at least 1.
    pub fn min_support(&self, tau: f64) -> usize {
        let raw = libm::ceil(tau * self.len() as f64 - 1e-9);
        (raw as usize).max(1)
    }
}

/// A closed frequent itemset and the transactions supporting it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedSet {
    pub features: FeatureSet,
    pub support_indices: Vec<usize>,
}

impl ClosedSet {
    pub fn support_count(&self) -> usize {
        self.support_indices.len()
    }
}

/// Indices of the transactions containing `f`, ascending.
pub fn support(db: &TransactionDb, f: &FeatureSet) -> Vec<usize> {
    db.transactions
        .iter()
        .enumerate()
        .filter(|(_, t)| f.is_subset(t))
        .map(|(i, _)| i)
        .collect()
}

fn closure(db: &TransactionDb, support: &[usize]) -> FeatureSet {
    let mut iter = support.iter();
    let Some(&first) = iter.next() else {
        return FeatureSet::full(db.ground_size);
    };
    let mut out = db.transactions[first].clone();
    for &i in iter {
        out.intersect_with(&db.transactions[i]);
        if out.is_empty() {
            break;
        }
    }
    out
}

fn validate_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::param("tau", "must lie in (0, 1]"));
    }
    Ok(())
}

/// All closed sets with support at least `ceil(tau * |db|)`, sorted by
/// support descending and then by shortlex order on the features.
///
/// The empty set appears only when no item occurs in every transaction.
pub fn enumerate_closed(db: &TransactionDb, tau: f64) -> Result<Vec<ClosedSet>> {
    validate_tau(tau)?;
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let threshold = db.min_support(tau);
    let all: Vec<usize> = (0..db.len()).collect();
    let root = closure(db, &all);
    let mut out = Vec::new();
    let mut stack = alloc::vec![(root, all, 0usize)];
    while let Some((features, supp, core)) = stack.pop() {
        for item in core..db.ground_size {
            if features.contains(item) {
                continue;
            }
            let child_supp: Vec<usize> =
                supp.iter().copied().filter(|&t| db.transactions[t].contains(item)).collect();
            if child_supp.len() < threshold {
                continue;
            }
            let child = closure(db, &child_supp);
            if child.prefix(item) != features.prefix(item) {
                continue;
            }
            stack.push((child, child_supp, item + 1));
        }
        out.push(ClosedSet { features, support_indices: supp });
    }
    sort_canonical(&mut out);
    Ok(out)
}

pub fn sort_canonical(sets: &mut [ClosedSet]) {
    sets.sort_by(|a, b| {
        b.support_count().cmp(&a.support_count()).then_with(|| a.features.cmp(&b.features))
    });
}

/// Number of non-empty frequent itemsets, by scanning every subset of the
/// ground set.
pub fn count_frequent(db: &TransactionDb, tau: f64) -> Result<usize> {
    validate_tau(tau)?;
    if db.ground_size > 20 {
        return Err(Error::GroundSetTooLarge(db.ground_size));
    }
    let threshold = db.min_support(tau);
    let masks: Vec<u32> = db
        .transactions
        .iter()
        .map(|t| t.iter().fold(0u32, |m, i| m | (1 << i)))
        .collect();
    let count = (1u32..(1 << db.ground_size))
        .filter(|&f| masks.iter().filter(|&&t| t & f == f).count() >= threshold)
        .count();
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// `{bce, abde, abde, abce, abcde, bcd}` with a..e = 0..4.
    fn worked_example() -> TransactionDb {
        let parse = |s: &str| s.bytes().map(|b| (b - b'a') as usize).collect::<FeatureSet>();
        let t = ["bce", "abde", "abde", "abce", "abcde", "bcd"].map(parse).to_vec();
        TransactionDb::new(t, 5).unwrap()
    }

    #[test]
    fn support_of_bde() {
        let db = worked_example();
        assert_eq!(support(&db, &FeatureSet::from([1, 3, 4])), vec![1, 2, 4]);
        assert_eq!(support(&db, &FeatureSet::new()), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn worked_example_counts() {
        let db = worked_example();
        assert_eq!(count_frequent(&db, 0.5).unwrap(), 19);
        let closed = enumerate_closed(&db, 0.5).unwrap();
        let got: Vec<(Vec<usize>, usize)> =
            closed.iter().map(|c| (c.features.to_vec(), c.support_count())).collect();
        assert_eq!(
            got,
            vec![
                (vec![1], 6),
                (vec![1, 4], 5),
                (vec![1, 2], 4),
                (vec![1, 3], 4),
                (vec![0, 1, 4], 4),
                (vec![1, 2, 4], 3),
                (vec![0, 1, 3, 4], 3),
            ]
        );
    }

    #[test]
    fn identical_transactions() {
        let db = TransactionDb::new(vec![FeatureSet::from([0, 1]); 4], 2).unwrap();
        let closed = enumerate_closed(&db, 0.3).unwrap();
        assert_eq!(closed.len(), 1);
        assert_eq!(closed[0].features, FeatureSet::from([0, 1]));
    }

    #[test]
    fn empty_set_when_closed() {
        let db = TransactionDb::new(vec![FeatureSet::from([0]), FeatureSet::from([1])], 2).unwrap();
        let closed = enumerate_closed(&db, 0.5).unwrap();
        assert_eq!(closed[0].features, FeatureSet::new());
        assert_eq!(closed.len(), 3);
    }

    #[test]
    fn errors() {
        let empty = TransactionDb::new(vec![], 3).unwrap();
        assert_eq!(enumerate_closed(&empty, 0.5).unwrap_err(), Error::EmptyDatabase);
        assert!(enumerate_closed(&worked_example(), 0.0).is_err());
        let wide = TransactionDb::new(vec![FeatureSet::from([30])], 31).unwrap();
        assert_eq!(count_frequent(&wide, 0.5).unwrap_err(), Error::GroundSetTooLarge(31));
        assert!(TransactionDb::new(vec![FeatureSet::from([3])], 3).is_err());
    }

    #[test]
    fn singleton_repeated() {
        let db = TransactionDb::new(vec![FeatureSet::from([0]); 4], 1).unwrap();
        assert_eq!(count_frequent(&db, 1.0).unwrap(), 1);
    }
}
