//! Black-box classifiers: the capability trait, a small trainable MLP with
//! analytic input gradients, a linear model and a prediction lookup table.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};

/// A classifier queried only through its outputs.
///
/// `predict` must agree with the argmax of `logits`, ties going to the lowest
/// class id. Gradients are optional.
pub trait BlackBox: Send + Sync {
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize;

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, x: &[f64]) -> Result<ClassId> {
        Ok(argmax(&self.logits(x)?))
    }

    fn has_gradient(&self) -> bool {
        false
    }

    /// d logit_class / dx.
    fn gradient(&self, _x: &[f64], _class: ClassId) -> Result<Vec<f64>> {
        Err(Error::NoGradient)
    }

    /// Single logit; the default goes through `logits`.
    fn logit(&self, x: &[f64], class: ClassId) -> Result<f64> {
        Ok(self.logits(x)?[class])
    }
}

/// Index of the largest value, first index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_all(model: &dyn BlackBox, ds: &Dataset) -> Result<Vec<ClassId>> {
    ds.samples().iter().map(|x| model.predict(x)).collect()
}

/// Fraction of `ds` whose label matches the model's prediction.
pub fn accuracy(model: &dyn BlackBox, ds: &Dataset) -> Result<f64> {
    let labels = ds.labels().ok_or(Error::MissingLabels)?;
    if labels.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for (x, &y) in ds.samples().iter().zip(labels) {
        if model.predict(x)? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}

/// Largest relative deviation between the analytic gradient and central
/// differences with step 1e-5, over all input dimensions.
pub fn gradient_check(model: &dyn BlackBox, x: &[f64], class: ClassId) -> Result<f64> {
    const STEP: f64 = 1e-5;
    let analytic = model.gradient(x, class)?;
    if analytic.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for (i, g) in analytic.iter().enumerate() {
        probe[i] = x[i] + STEP;
        let up = model.logit(&probe, class)?;
        probe[i] = x[i] - STEP;
        let down = model.logit(&probe, class)?;
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * STEP);
        worst = worst.max((g - numeric).abs() / (numeric.abs() + 1e-8));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub hidden_width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden_width: 16, epochs: 100, learning_rate: 0.01, batch_size: 32, seed: 0 }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_width == 0 {
            return Err(Error::param("hidden_width", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive and finite"));
        }
        Ok(())
    }
}

/// One tanh hidden layer over standardized inputs, linear output logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    n_features: usize,
    hidden: usize,
    classes: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// hidden x features, row-major
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// classes x hidden, row-major
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Mlp {
    /// All trainable parameters, layer by layer.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        out.extend(&self.w1);
        out.extend(&self.b1);
        out.extend(&self.w2);
        out.extend(&self.b2);
        out
    }

    /// Copy with the output layer multiplied by `s`.
    pub fn scaled_output(&self, s: f64) -> Mlp {
        let mut m = self.clone();
        m.w2.iter_mut().chain(m.b2.iter_mut()).for_each(|w| *w *= s);
        m
    }

    pub fn standardization(&self) -> (&[f64], &[f64]) {
        (&self.mean, &self.scale)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: x.len() });
        }
        Ok(())
    }

    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    fn hidden_activations(&self, z: &[f64], out: &mut [f64]) {
        let d = self.n_features;
        for (h, a) in out.iter_mut().enumerate() {
            let row = &self.w1[h * d..(h + 1) * d];
            let pre = self.b1[h] + row.iter().zip(z).map(|(w, v)| w * v).sum::<f64>();
            *a = libm::tanh(pre);
        }
    }

    fn output(&self, a: &[f64], out: &mut [f64]) {
        let h = self.hidden;
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.w2[c * h..(c + 1) * h];
            *o = self.b2[c] + row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

impl BlackBox for Mlp {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.classes
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut z = alloc::vec![0.0; self.n_features];
        let mut a = alloc::vec![0.0; self.hidden];
        let mut out = alloc::vec![0.0; self.classes];
        self.standardize(x, &mut z);
        self.hidden_activations(&z, &mut a);
        self.output(&a, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput);
        }
        Ok(out)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64], class: ClassId) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if class >= self.classes {
            return Err(Error::param("class", "out of range"));
        }
        let d = self.n_features;
        let mut z = alloc::vec![0.0; d];
        let mut a = alloc::vec![0.0; self.hidden];
        self.standardize(x, &mut z);
        self.hidden_activations(&z, &mut a);
        let mut grad = alloc::vec![0.0; d];
        for (h, act) in a.iter().enumerate() {
            let back = self.w2[class * self.hidden + h] * (1.0 - act * act);
            for (g, w) in grad.iter_mut().zip(&self.w1[h * d..(h + 1) * d]) {
                *g += back * w;
            }
        }
        for (g, s) in grad.iter_mut().zip(&self.scale) {
            *g /= s;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        Ok(grad)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self { m: alloc::vec![0.0; n], v: alloc::vec![0.0; n], t: 0, lr }
    }

    fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(Self::BETA1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(Self::BETA2, f64::from(self.t));
        let mut k = 0;
        for (p, g) in params.iter_mut().zip(grads) {
            for (w, gi) in p.iter_mut().zip(g.iter()) {
                self.m[k] = Self::BETA1 * self.m[k] + (1.0 - Self::BETA1) * gi;
                self.v[k] = Self::BETA2 * self.v[k] + (1.0 - Self::BETA2) * gi * gi;
                *w -= self.lr * (self.m[k] / c1) / (libm::sqrt(self.v[k] / c2) + Self::EPS);
                k += 1;
            }
        }
    }
}

/// Trains an [`Mlp`] with mini-batch Adam on softmax cross-entropy.
///
/// Inputs are standardized with statistics fitted on `train`; constant
/// columns get unit scale. Everything is seeded from `cfg.seed`.
pub fn train_mlp(train: &Dataset, cfg: &MlpConfig) -> Result<Mlp> {
    cfg.validate()?;
    let labels = train.labels().ok_or(Error::MissingLabels)?;
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let distinct = labels.iter().collect::<alloc::collections::BTreeSet<_>>().len();
    if distinct < 2 {
        return Err(Error::SingleClass);
    }
    let d = train.dim();
    let hidden = cfg.hidden_width;
    let mean = train.column_means();
    let scale: Vec<f64> =
        train.column_stds().into_iter().map(|s| if s > 1e-12 { s } else { 1.0 }).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lim1 = libm::sqrt(6.0 / d as f64);
    let lim2 = libm::sqrt(6.0 / hidden as f64);
    let mut model = Mlp {
        n_features: d,
        hidden,
        classes,
        w1: (0..hidden * d).map(|_| rng.gen_range(-lim1..lim1)).collect(),
        b1: alloc::vec![0.0; hidden],
        w2: (0..classes * hidden).map(|_| rng.gen_range(-lim2..lim2)).collect(),
        b2: alloc::vec![0.0; classes],
        mean,
        scale,
    };

    let standardized: Vec<Vec<f64>> = train
        .samples()
        .iter()
        .map(|x| {
            let mut z = alloc::vec![0.0; d];
            model.standardize(x, &mut z);
            z
        })
        .collect();

    let n_params = model.w1.len() + model.b1.len() + model.w2.len() + model.b2.len();
    let mut adam = Adam::new(n_params, cfg.learning_rate);
    let mut gw1 = alloc::vec![0.0; model.w1.len()];
    let mut gb1 = alloc::vec![0.0; hidden];
    let mut gw2 = alloc::vec![0.0; model.w2.len()];
    let mut gb2 = alloc::vec![0.0; classes];
    let mut act = alloc::vec![0.0; hidden];
    let mut out = alloc::vec![0.0; classes];
    let mut delta_h = alloc::vec![0.0; hidden];
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for g in [&mut gw1, &mut gb1, &mut gw2, &mut gb2] {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            let inv = 1.0 / batch.len() as f64;
            for &i in batch {
                let z = &standardized[i];
                model.hidden_activations(z, &mut act);
                model.output(&act, &mut out);
                let top = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let norm: f64 = out.iter().map(|o| libm::exp(o - top)).sum();
                epoch_loss += libm::log(norm) + top - out[labels[i]];
                // softmax - onehot
                for (c, o) in out.iter_mut().enumerate() {
                    *o = libm::exp(*o - top) / norm - if c == labels[i] { 1.0 } else { 0.0 };
                }
                delta_h.iter_mut().for_each(|v| *v = 0.0);
                for (c, err) in out.iter().enumerate() {
                    gb2[c] += err * inv;
                    for h in 0..hidden {
                        gw2[c * hidden + h] += err * act[h] * inv;
                        delta_h[h] += err * model.w2[c * hidden + h];
                    }
                }
                for h in 0..hidden {
                    let dh = delta_h[h] * (1.0 - act[h] * act[h]) * inv;
                    gb1[h] += dh;
                    for (g, v) in gw1[h * d..(h + 1) * d].iter_mut().zip(z) {
                        *g += dh * v;
                    }
                }
            }
            adam.step(
                &mut [&mut model.w1, &mut model.b1, &mut model.w2, &mut model.b2],
                &[&gw1, &gb1, &gw2, &gb2],
            );
        }
        if !epoch_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
    }
    Ok(model)
}

/// Models trained with identical hyperparameters and consecutive seeds.
#[derive(Debug, Clone)]
pub struct RashomonEnsemble {
    pub models: Vec<Mlp>,
    pub accuracies: Vec<f64>,
}

impl RashomonEnsemble {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Mean and population standard deviation of the accuracies.
    pub fn accuracy_spread(&self) -> (f64, f64) {
        crate::eval::mean_std(&self.accuracies)
    }
}

/// Trains `n` models with seeds `cfg.seed + 0..n` and records each model's
/// accuracy on `scored_on`.
pub fn train_ensemble(
    train: &Dataset,
    scored_on: &Dataset,
    cfg: &MlpConfig,
    n: usize,
) -> Result<RashomonEnsemble> {
    if n == 0 {
        return Err(Error::param("n", "ensemble size must be positive"));
    }
    let mut models = Vec::with_capacity(n);
    let mut accuracies = Vec::with_capacity(n);
    for index in 0..n {
        let member_cfg = MlpConfig { seed: cfg.seed.wrapping_add(index as u64), ..*cfg };
        let wrap = |e: Error| Error::Model { index, source: Box::new(e) };
        let model = train_mlp(train, &member_cfg).map_err(wrap)?;
        accuracies.push(accuracy(&model, scored_on).map_err(wrap)?);
        models.push(model);
    }
    Ok(RashomonEnsemble { models, accuracies })
}

/// `logits = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// classes x features, row-major
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LinearModel {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        let d = weights.first().map_or(0, Vec::len);
        if weights.is_empty() || d == 0 {
            return Err(Error::param("weights", "need at least one class and one feature"));
        }
        if weights.iter().any(|r| r.len() != d) {
            return Err(Error::param("weights", "ragged rows"));
        }
        if bias.len() != weights.len() {
            return Err(Error::LengthMismatch {
                what: "bias",
                expected: weights.len(),
                found: bias.len(),
            });
        }
        Ok(Self { weights, bias })
    }
}

impl BlackBox for LinearModel {
    fn n_features(&self) -> usize {
        self.weights[0].len()
    }

    fn n_classes(&self) -> usize {
        self.weights.len()
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect())
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64], class: ClassId) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.len() });
        }
        self.weights.get(class).cloned().ok_or_else(|| Error::param("class", "out of range"))
    }
}

/// Answers queries by exact row lookup in a table of recorded predictions.
///
/// Without recorded logits, `logits` returns the one-hot encoding of the
/// recorded class. No gradients.
#[derive(Debug, Clone)]
pub struct LookupOracle {
    n_features: usize,
    classes: usize,
    rows: BTreeMap<Vec<u64>, usize>,
    predictions: Vec<ClassId>,
    logits: Option<Vec<Vec<f64>>>,
}

impl LookupOracle {
    pub fn new(
        samples: &Dataset,
        predictions: Vec<ClassId>,
        logits: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if predictions.len() != samples.len() {
            return Err(Error::LengthMismatch {
                what: "predictions",
                expected: samples.len(),
                found: predictions.len(),
            });
        }
        let mut classes = predictions.iter().max().map_or(1, |m| m + 1);
        if let Some(l) = &logits {
            if l.len() != samples.len() {
                return Err(Error::LengthMismatch {
                    what: "logits",
                    expected: samples.len(),
                    found: l.len(),
                });
            }
            let width = l.first().map_or(0, Vec::len);
            if l.iter().any(|r| r.len() != width) || width < classes {
                return Err(Error::param("logits", "inconsistent number of classes"));
            }
            classes = width;
        }
        let rows = samples
            .samples()
            .iter()
            .enumerate()
            .map(|(i, x)| (key(x), i))
            .collect();
        Ok(Self { n_features: samples.dim(), classes, rows, predictions, logits })
    }

    fn row(&self, x: &[f64]) -> Result<usize> {
        self.rows.get(&key(x)).copied().ok_or(Error::UnknownSample)
    }
}

fn key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 map to the same row
    x.iter().map(|v| if *v == 0.0 { 0 } else { v.to_bits() }).collect()
}

impl BlackBox for LookupOracle {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.classes
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let row = self.row(x)?;
        Ok(match &self.logits {
            Some(l) => l[row].clone(),
            None => {
                let mut onehot = alloc::vec![0.0; self.classes];
                onehot[self.predictions[row]] = 1.0;
                onehot
            }
        })
    }

    fn predict(&self, x: &[f64]) -> Result<ClassId> {
        Ok(self.predictions[self.row(x)?])
    }
}
