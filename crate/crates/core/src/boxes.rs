//! Bounded axis-aligned boxes over feature subspaces, and the box learner
//! that turns one closed feature set into candidate terms.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dataset::{ClassBlock, ClassId, Dataset};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::itemsets::ClosedSet;

/// Closed interval `[lo, hi]` with finite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// A conjunction of interval constraints, at most one per feature.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalBox {
    constraints: BTreeMap<usize, Interval>,
}

impl IntervalBox {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces the constraint on `feature`.
    pub fn constrain(&mut self, feature: usize, lo: f64, hi: f64) -> Result<()> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInterval { feature, lo, hi });
        }
        self.constraints.insert(feature, Interval { lo, hi });
        Ok(())
    }

    pub fn from_constraints(items: impl IntoIterator<Item = (usize, f64, f64)>) -> Result<Self> {
        let mut b = Self::new();
        for (f, lo, hi) in items {
            b.constrain(f, lo, hi)?;
        }
        Ok(b)
    }

    pub fn get(&self, feature: usize) -> Option<&Interval> {
        self.constraints.get(&feature)
    }

    /// Constraints in ascending feature order.
    pub fn constraints(&self) -> impl Iterator<Item = (usize, &Interval)> {
        self.constraints.iter().map(|(f, i)| (*f, i))
    }

    pub fn features(&self) -> FeatureSet {
        self.constraints.keys().copied().collect()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Unconstrained features are ignored; bounds are inclusive.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.constraints
            .iter()
            .all(|(&f, iv)| x.get(f).is_some_and(|&v| iv.contains(v)))
    }
}

pub fn term_covers(b: &IntervalBox, x: &[f64]) -> bool {
    b.covers(x)
}

/// Per-feature `[min, max]` of `samples` over the features in `f`.
pub fn minimal_box<S: AsRef<[f64]>>(samples: &[S], f: &FeatureSet) -> Result<IntervalBox> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if f.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let mut b = IntervalBox::new();
    for feature in f.iter() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in samples {
            let v = *s.as_ref().get(feature).ok_or(Error::DimensionMismatch {
                expected: feature + 1,
                found: s.as_ref().len(),
            })?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        b.constrain(feature, lo, hi)?;
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxParams {
    pub max_depth: usize,
    /// Minimum positive fraction for a leaf to become a term.
    pub purity_threshold: f64,
    pub min_leaf_positives: usize,
}

impl Default for BoxParams {
    fn default() -> Self {
        Self { max_depth: 7, purity_threshold: 0.95, min_leaf_positives: 1 }
    }
}

impl BoxParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::param("max_depth", "must be positive"));
        }
        if !(self.purity_threshold > 0.5 && self.purity_threshold <= 1.0) {
            return Err(Error::param("purity_threshold", "must lie in (0.5, 1]"));
        }
        if self.min_leaf_positives == 0 {
            return Err(Error::param("min_leaf_positives", "must be positive"));
        }
        Ok(())
    }
}

struct Tree<'a> {
    features: Vec<usize>,
    points: Vec<(&'a [f64], bool)>,
    params: BoxParams,
    leaves: Vec<IntervalBox>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

impl<'a> Tree<'a> {
    fn grow(&mut self, node: Vec<usize>, depth: usize) -> Result<()> {
        let pos = node.iter().filter(|&&i| self.points[i].1).count();
        if pos == 0 {
            return Ok(());
        }
        let frac = pos as f64 / node.len() as f64;
        let split = if frac >= self.params.purity_threshold || depth >= self.params.max_depth {
            None
        } else {
            self.best_split(&node)
        };
        match split {
            None => {
                if frac >= self.params.purity_threshold && pos >= self.params.min_leaf_positives {
                    let positives: Vec<&[f64]> = node
                        .iter()
                        .filter(|&&i| self.points[i].1)
                        .map(|&i| self.points[i].0)
                        .collect();
                    let f: FeatureSet = self.features.iter().copied().collect();
                    self.leaves.push(minimal_box(&positives, &f)?);
                }
                Ok(())
            }
            Some(split) => {
                let (left, right): (Vec<usize>, Vec<usize>) = node
                    .into_iter()
                    .partition(|&i| self.points[i].0[split.feature] <= split.threshold);
                self.grow(left, depth + 1)?;
                self.grow(right, depth + 1)
            }
        }
    }

    /// Lowest weighted Gini over midpoints between adjacent distinct values;
    /// ties go to the lower feature index, then the lower threshold.
    fn best_split(&self, node: &[usize]) -> Option<Split> {
        let total = node.len();
        let total_pos = node.iter().filter(|&&i| self.points[i].1).count();
        let mut best: Option<Split> = None;
        let mut order: Vec<usize> = node.to_vec();
        for &f in &self.features {
            order.sort_by(|&a, &b| self.points[a].0[f].total_cmp(&self.points[b].0[f]));
            let mut left_pos = 0;
            for k in 0..total - 1 {
                if self.points[order[k]].1 {
                    left_pos += 1;
                }
                let here = self.points[order[k]].0[f];
                let next = self.points[order[k + 1]].0[f];
                if here == next {
                    continue;
                }
                let nl = k + 1;
                let nr = total - nl;
                let impurity = (nl as f64 * gini(left_pos, nl)
                    + nr as f64 * gini(total_pos - left_pos, nr))
                    / total as f64;
                let better = match &best {
                    None => true,
                    Some(b) => impurity < b.impurity - 1e-12,
                };
                if better {
                    let mut threshold = here + (next - here) / 2.0;
                    // keep `here` on the left even when the midpoint rounds up
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some(Split { feature: f, threshold, impurity });
                }
            }
        }
        best
    }
}

/// Boxes over the subspace `f` that cover the positives while excluding
/// (up to the purity threshold) the negatives.
///
/// The minimal box of all positives is returned alone when it holds no
/// negative. Otherwise a depth-limited Gini tree restricted to `f` partitions
/// the points, and every sufficiently pure leaf yields the minimal box of
/// its positives. Positives in impure leaves are left uncovered.
pub fn learn_boxes<P: AsRef<[f64]>, N: AsRef<[f64]>>(
    f: &FeatureSet,
    positives: &[P],
    negatives: &[N],
    params: &BoxParams,
) -> Result<Vec<IntervalBox>> {
    params.validate()?;
    let outer = minimal_box(positives, f)?;
    if !negatives.iter().any(|n| outer.covers(n.as_ref())) {
        return Ok(alloc::vec![outer]);
    }
    let points = positives
        .iter()
        .map(|p| (p.as_ref(), true))
        .chain(negatives.iter().map(|n| (n.as_ref(), false)))
        .collect::<Vec<_>>();
    let n = points.len();
    let mut tree = Tree { features: f.to_vec(), points, params: *params, leaves: Vec::new() };
    tree.grow((0..n).collect(), 0)?;
    Ok(tree.leaves)
}

/// A learned box with the input samples of its class that satisfy it.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTerm {
    pub bbox: IntervalBox,
    pub source: FeatureSet,
    /// Input-set indices predicted as the class and covered by the box, ascending.
    pub covered: Vec<usize>,
    /// Fraction of covered input samples predicted as the class.
    pub precision: f64,
}

/// The input set seen from one class.
#[derive(Debug, Clone, Copy)]
pub struct ClassView<'a> {
    pub input: &'a Dataset,
    pub predictions: &'a [ClassId],
    pub block: &'a ClassBlock,
}

impl ClassView<'_> {
    pub fn class_id(&self) -> ClassId {
        self.block.class_id
    }

    /// Scores a box against the whole input set.
    pub fn candidate(&self, bbox: IntervalBox, source: FeatureSet) -> CandidateTerm {
        let mut covered = Vec::new();
        let mut hits = 0usize;
        for (i, x) in self.input.samples().iter().enumerate() {
            if bbox.covers(x) {
                hits += 1;
                if self.predictions[i] == self.class_id() {
                    covered.push(i);
                }
            }
        }
        let precision = if hits == 0 { 0.0 } else { covered.len() as f64 / hits as f64 };
        CandidateTerm { bbox, source, covered, precision }
    }
}

/// Candidate terms for one closed set, whose support indices refer to
/// positions in `view.block`.
pub fn learn_terms(
    closed: &ClosedSet,
    view: &ClassView<'_>,
    params: &BoxParams,
) -> Result<Vec<CandidateTerm>> {
    if closed.features.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let positives: Vec<&[f64]> = closed
        .support_indices
        .iter()
        .map(|&t| view.input.sample(view.block.indices[t]))
        .collect();
    if positives.is_empty() {
        return Err(Error::EmptySamples);
    }
    let class = view.class_id();
    let negatives: Vec<&[f64]> = view
        .input
        .samples()
        .iter()
        .zip(view.predictions)
        .filter(|(_, &p)| p != class)
        .map(|(x, _)| x.as_slice())
        .collect();
    let boxes = learn_boxes(&closed.features, &positives, &negatives, params)?;
    Ok(boxes
        .into_iter()
        .map(|b| view.candidate(b, closed.features.clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn one_d(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|v| vec![*v]).collect()
    }

    #[test]
    fn minimal_box_cases() {
        let b = minimal_box(&[vec![1.0, 2.0, 3.0]], &FeatureSet::from([2])).unwrap();
        assert_eq!(b, IntervalBox::from_constraints([(2, 3.0, 3.0)]).unwrap());
        let b = minimal_box(&[vec![1.0, 5.0], vec![3.0, 2.0]], &FeatureSet::from([0, 1])).unwrap();
        assert_eq!(b, IntervalBox::from_constraints([(0, 1.0, 3.0), (1, 2.0, 5.0)]).unwrap());
        let none: [Vec<f64>; 0] = [];
        assert_eq!(minimal_box(&none, &FeatureSet::from([0])), Err(Error::EmptySamples));
        assert_eq!(minimal_box(&[vec![1.0]], &FeatureSet::new()), Err(Error::EmptyFeatureSet));
    }

    #[test]
    fn covers_semantics() {
        let b = IntervalBox::from_constraints([(0, 1.0, 3.0)]).unwrap();
        assert!(b.covers(&[2.0, 99.0]));
        assert!(b.covers(&[3.0, 0.0]));
        let b2 = IntervalBox::from_constraints([(0, 1.0, 3.0), (1, 0.0, 1.0)]).unwrap();
        assert!(!b2.covers(&[2.0, 2.0]));
        assert!(IntervalBox::from_constraints([(0, 2.0, 1.0)]).is_err());
        assert!(IntervalBox::from_constraints([(0, f64::NEG_INFINITY, 1.0)]).is_err());
    }

    #[test]
    fn tree_splits_around_negative() {
        let pos = one_d(&[1.0, 2.0, 8.0, 9.0]);
        let neg = one_d(&[5.0]);
        let boxes = learn_boxes(&FeatureSet::from([0]), &pos, &neg, &BoxParams::default()).unwrap();
        assert_eq!(
            boxes,
            vec![
                IntervalBox::from_constraints([(0, 1.0, 2.0)]).unwrap(),
                IntervalBox::from_constraints([(0, 8.0, 9.0)]).unwrap(),
            ]
        );
    }

    #[test]
    fn consistent_box_is_kept() {
        let pos = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let neg = vec![vec![5.0, 5.0]];
        let boxes = learn_boxes(&FeatureSet::from([0, 1]), &pos, &neg, &BoxParams::default()).unwrap();
        assert_eq!(boxes, vec![IntervalBox::from_constraints([(0, 0.0, 1.0), (1, 0.0, 1.0)]).unwrap()]);
    }

    #[test]
    fn mixed_comb_yields_nothing() {
        let xs: Vec<f64> = (0..64).map(f64::from).collect();
        let pos = one_d(&xs);
        let neg = one_d(&xs);
        let boxes = learn_boxes(&FeatureSet::from([0]), &pos, &neg, &BoxParams::default()).unwrap();
        assert!(boxes.is_empty());
    }

    #[test]
    fn bad_params() {
        let p = BoxParams { purity_threshold: 0.5, ..BoxParams::default() };
        assert!(p.validate().is_err());
        assert!(BoxParams { max_depth: 0, ..BoxParams::default() }.validate().is_err());
    }
}
