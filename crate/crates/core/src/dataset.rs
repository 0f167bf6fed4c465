//! Tabular numeric samples, train/input/test splits and per-class blocks.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type ClassId = usize;

/// Real-valued samples with feature names and optional labels.
///
/// Values are kept in their original units.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Vec<f64>>,
    labels: Option<Vec<ClassId>>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        samples: Vec<Vec<f64>>,
        labels: Option<Vec<ClassId>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        let unique: BTreeSet<&str> = feature_names.iter().map(String::as_str).collect();
        if unique.len() != d {
            return Err(Error::InvalidDataset("duplicate feature names".into()));
        }
        for (row, sample) in samples.iter().enumerate() {
            if sample.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "row {row} has {} values, expected {d}",
                    sample.len()
                )));
            }
            if let Some(col) = sample.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value at row {row}, column {col}"
                )));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != samples.len() {
                return Err(Error::LengthMismatch {
                    what: "labels",
                    expected: samples.len(),
                    found: labels.len(),
                });
            }
        }
        Ok(Self { samples, labels, feature_names })
    }

    /// Builds a dataset with generated names `x0, x1, ...`.
    pub fn from_rows(samples: Vec<Vec<f64>>, labels: Option<Vec<ClassId>>) -> Result<Self> {
        let d = samples.first().map_or(0, Vec::len);
        let names = (0..d).map(|i| format!("x{i}")).collect();
        Self::new(samples, labels, names)
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[ClassId]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.dim()];
        for s in &self.samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        let n = self.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Population standard deviation per column.
    pub fn column_stds(&self) -> Vec<f64> {
        let mean = self.column_means();
        let mut var = alloc::vec![0.0; self.dim()];
        for s in &self.samples {
            for ((acc, v), m) in var.iter_mut().zip(s).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let n = self.len().max(1) as f64;
        var.iter().map(|v| libm::sqrt(v / n)).collect()
    }

    /// FNV-1a over the raw bits of every value, used to tag provenance.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for name in &self.feature_names {
            feed(name.as_bytes());
        }
        for s in &self.samples {
            for v in s {
                feed(&v.to_bits().to_le_bytes());
            }
        }
        h
    }
}

/// Fractions for a three-way train/input/test partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub input_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, input: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = Self { train_fraction: train, input_fraction: input, test_fraction: test, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train_fraction", self.train_fraction),
            ("input_fraction", self.input_fraction),
            ("test_fraction", self.test_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::param(name, format!("{f} is not in (0, 1)")));
            }
        }
        let sum = self.train_fraction + self.input_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("split", format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Part sizes for `n` samples: input and test are floored, train takes the remainder.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        let part = |f: f64| libm::floor(f * n as f64 + 1e-9) as usize;
        let input = part(self.input_fraction);
        let test = part(self.test_fraction);
        let train = n.saturating_sub(input + test);
        for (name, size) in [("train", train), ("input", input), ("test", test)] {
            if size == 0 {
                return Err(Error::EmptySplitPart { part: name });
            }
        }
        Ok((train, input, test))
    }
}

/// Index sets of a three-way split into some dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub input: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` uniformly with the configured seed and cuts it into three parts.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    if n < 3 {
        return Err(Error::InvalidDataset(format!("{n} samples cannot be split three ways")));
    }
    let (train, input, _) = spec.sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = order.split_off(train + input);
    let input = order.split_off(train);
    Ok(SplitIndices { train: order, input, test })
}

/// Returns `(train, input, test)`.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let idx = split_indices(ds.len(), spec)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.input), ds.subset(&idx.test)))
}

/// Samples predicted as one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassBlock {
    pub class_id: ClassId,
    pub indices: Vec<usize>,
}

impl ClassBlock {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn class_block(predictions: &[ClassId], class_id: ClassId) -> ClassBlock {
    let indices = predictions
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == class_id)
        .map(|(i, _)| i)
        .collect();
    ClassBlock { class_id, indices }
}
