use std::collections::BTreeSet;

use cfire_core::itemsets::{count_frequent, enumerate_closed, support};
use cfire_core::{FeatureSet, TransactionDb};
use proptest::prelude::*;

fn db_strategy() -> impl Strategy<Value = (TransactionDb, f64)> {
    (1usize..=10, 1usize..=30, 1u32..=9).prop_flat_map(|(d, n, tau)| {
        let row = prop::collection::vec(any::<bool>(), d);
        prop::collection::vec(row, n).prop_map(move |rows| {
            let transactions = rows
                .into_iter()
                .map(|r| r.into_iter().enumerate().filter(|(_, b)| *b).map(|(i, _)| i).collect())
                .collect();
            (TransactionDb::new(transactions, d).unwrap(), f64::from(tau) / 10.0)
        })
    })
}

fn subsets(d: usize) -> impl Iterator<Item = FeatureSet> {
    (0..1u32 << d).map(move |m| (0..d).filter(|i| m >> i & 1 == 1).collect())
}

fn scan(db: &TransactionDb, f: &FeatureSet) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, t) in db.transactions().iter().enumerate() {
        if f.iter().all(|j| t.contains(j)) {
            out.push(i);
        }
    }
    out
}

fn threshold(n: usize, tau: f64) -> usize {
    ((tau * n as f64) - 1e-9).ceil().max(1.0) as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_sets_match_definition((db, tau) in db_strategy()) {
        let d = db.ground_size();
        let t = threshold(db.len(), tau);
        let expected: BTreeSet<(FeatureSet, Vec<usize>)> = subsets(d)
            .filter_map(|f| {
                let s = scan(&db, &f);
                let closed = (0..d).filter(|i| !f.contains(*i)).all(|i| {
                    let mut g = f.clone();
                    g.insert(i);
                    scan(&db, &g).len() < s.len()
                });
                (s.len() >= t && closed).then_some((f, s))
            })
            .collect();
        let got = enumerate_closed(&db, tau).unwrap();
        let as_set: BTreeSet<_> =
            got.iter().map(|c| (c.features.clone(), c.support_indices.clone())).collect();
        prop_assert_eq!(as_set.len(), got.len());
        prop_assert_eq!(as_set, expected);
    }

    #[test]
    fn closed_sets_are_canonically_ordered((db, tau) in db_strategy()) {
        let got = enumerate_closed(&db, tau).unwrap();
        for w in got.windows(2) {
            let key = |c: &cfire_core::ClosedSet| (std::cmp::Reverse(c.support_count()), c.features.clone());
            prop_assert!(key(&w[0]) < key(&w[1]));
        }
    }

    #[test]
    fn frequent_sets_have_one_closed_representative((db, tau) in db_strategy()) {
        let closed = enumerate_closed(&db, tau).unwrap();
        let t = threshold(db.len(), tau);
        for f in subsets(db.ground_size()) {
            let s = scan(&db, &f);
            if s.len() < t {
                continue;
            }
            let reps = closed
                .iter()
                .filter(|c| f.is_subset(&c.features) && c.support_indices == s)
                .count();
            prop_assert_eq!(reps, 1, "{:?}", f);
        }
    }

    #[test]
    fn frequent_count_matches_second_scan((db, tau) in db_strategy()) {
        let t = threshold(db.len(), tau);
        // counts every subset of every transaction instead of testing candidates
        let mut seen = BTreeSet::new();
        for tr in db.transactions() {
            let items = tr.to_vec();
            for m in 0..1u32 << items.len() {
                let f: FeatureSet = (0..items.len()).filter(|i| m >> i & 1 == 1).map(|i| items[i]).collect();
                if !f.is_empty() {
                    seen.insert(f);
                }
            }
        }
        let count = seen.iter().filter(|f| scan(&db, f).len() >= t).count();
        prop_assert_eq!(count_frequent(&db, tau).unwrap(), count);
    }

    #[test]
    fn support_matches_scan((db, _) in db_strategy(), mask in any::<u32>()) {
        let f: FeatureSet = (0..db.ground_size()).filter(|i| mask >> i & 1 == 1).collect();
        prop_assert_eq!(support(&db, &f), scan(&db, &f));
    }
}
