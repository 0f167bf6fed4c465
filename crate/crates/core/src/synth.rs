//! Synthetic classification tasks with known structure.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::boxes::IntervalBox;
use crate::dataset::Dataset;
use crate::error::Result;

/// Uniform samples on `[0, 1]^dim`, labelled 1 inside any of the boxes.
/// Samples closer than `margin` to an interior box face are redrawn, so the
/// classes are separated by a gap.
#[derive(Debug, Clone)]
pub struct BoxTask {
    pub dim: usize,
    pub boxes: Vec<IntervalBox>,
    pub margin: f64,
}

impl BoxTask {
    /// Eight dimensions; class 1 occupies two disjoint corner boxes spanned
    /// by features 0 and 1.
    pub fn two_corners() -> Self {
        let lower = IntervalBox::from_constraints([(0, 0.0, 0.35), (1, 0.0, 0.35)]);
        let upper = IntervalBox::from_constraints([(0, 0.65, 1.0), (1, 0.65, 1.0)]);
        Self { dim: 8, boxes: alloc::vec![lower.expect("valid"), upper.expect("valid")], margin: 0.025 }
    }

    pub fn label(&self, x: &[f64]) -> usize {
        usize::from(self.boxes.iter().any(|b| b.covers(x)))
    }

    /// True when `x` lies within `margin` of a face of some box that is not
    /// on the border of the unit cube.
    pub fn near_face(&self, x: &[f64]) -> bool {
        let m = self.margin;
        self.boxes.iter().any(|b| {
            let inside_grown = b.constraints().all(|(f, iv)| x[f] >= iv.lo - m && x[f] <= iv.hi + m);
            inside_grown
                && b.constraints().any(|(f, iv)| {
                    (iv.lo > 0.0 && (x[f] - iv.lo).abs() < m) || (iv.hi < 1.0 && (x[f] - iv.hi).abs() < m)
                })
        })
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples: Vec<Vec<f64>> = Vec::with_capacity(n);
        while samples.len() < n {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>()).collect();
            if self.margin <= 0.0 || !self.near_face(&x) {
                samples.push(x);
            }
        }
        let labels = samples.iter().map(|x| self.label(x)).collect();
        Dataset::new(samples, Some(labels), names(self.dim))
    }
}

fn names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("f{i}")).collect()
}

/// Heavy-tailed non-negative features, spam-filter shaped: the label depends
/// on a handful of the `dim` columns.
pub fn word_frequency_task(n: usize, dim: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let informative = [0usize, 3, 7, 12, 20];
    let mut samples = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..dim)
            .map(|_| {
                let v: f64 = rng.sample(Exp1);
                if rng.gen::<f64>() < 0.4 { 0.0 } else { v }
            })
            .collect();
        let score: f64 = informative.iter().filter(|&&f| f < dim).map(|&f| x[f]).sum();
        labels.push(usize::from(score > 2.0));
        samples.push(x);
    }
    Dataset::new(samples, Some(labels), names(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_are_labelled() {
        let task = BoxTask::two_corners();
        let mut x = alloc::vec![0.5; 8];
        assert_eq!(task.label(&x), 0);
        x[0] = 0.1;
        x[1] = 0.2;
        assert_eq!(task.label(&x), 1);
        x[0] = 0.9;
        assert_eq!(task.label(&x), 0);
        let ds = task.generate(500, 1).unwrap();
        let ones = ds.labels().unwrap().iter().filter(|&&l| l == 1).count();
        assert!(ones > 50 && ones < 200);
        assert!(ds.samples().iter().all(|x| !task.near_face(x)));
        x[0] = 0.36;
        x[1] = 0.1;
        assert!(task.near_face(&x));
        x[0] = 0.01;
        assert!(!task.near_face(&x));
    }
}
