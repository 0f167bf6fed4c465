//! Local attribution: integrated gradients, kernel SHAP and LIME, plus the
//! threshold rule that turns an attribution vector into a set of important
//! features.
//!
//! Every explainer attributes the logit of the class the model predicts for
//! `x`, and every source of randomness is seeded with `seed ^ sample_index`
//! so results do not depend on evaluation order.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blackbox::BlackBox;
use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::linalg::SquareMatrix;

/// Which local explainer produced an attribution. The declaration order is
/// the canonical tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExplainerId {
    KernelShap,
    Lime,
    IntegratedGradients,
}

impl ExplainerId {
    pub const ALL: [ExplainerId; 3] =
        [ExplainerId::KernelShap, ExplainerId::Lime, ExplainerId::IntegratedGradients];

    pub fn code(self) -> &'static str {
        match self {
            ExplainerId::KernelShap => "KS",
            ExplainerId::Lime => "LI",
            ExplainerId::IntegratedGradients => "IG",
        }
    }

    /// Accepts `KS`/`LI`/`IG` in any case.
    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.code().eq_ignore_ascii_case(code))
    }
}

impl fmt::Display for ExplainerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionVector {
    pub weights: Vec<f64>,
    pub explainer: ExplainerId,
    pub sample_index: usize,
    /// Set when the estimator had to fall back (uniform coalitions for kernel
    /// SHAP, extra ridge for LIME).
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerParams {
    /// Importance threshold on normalized absolute attributions.
    pub iota: f64,
    pub ks_budget: usize,
    pub lime_budget: usize,
    pub ig_steps: usize,
    /// Reference point standing in for "feature absent".
    pub baseline: Vec<f64>,
    /// Per-feature perturbation scale for LIME.
    pub scale: Vec<f64>,
    /// LIME proximity kernel width in standardized units; `None` means `0.75 * sqrt(d)`.
    pub kernel_width: Option<f64>,
    pub lime_ridge: f64,
    pub seed: u64,
}

impl ExplainerParams {
    /// Defaults with the baseline set to the training mean and the LIME scale
    /// to the training standard deviation.
    pub fn from_training(train: &Dataset, seed: u64) -> Self {
        Self {
            iota: 0.01,
            ks_budget: 300,
            lime_budget: 300,
            ig_steps: 200,
            baseline: train.column_means(),
            scale: train.column_stds(),
            kernel_width: None,
            lime_ridge: 1.0,
            seed,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.iota > 0.0 && self.iota < 1.0) {
            return Err(Error::param("iota", "must lie in (0, 1)"));
        }
        for (name, v) in [
            ("ks_budget", self.ks_budget),
            ("lime_budget", self.lime_budget),
            ("ig_steps", self.ig_steps),
        ] {
            if v == 0 {
                return Err(Error::param(name, "must be positive"));
            }
        }
        for (name, v) in [("baseline", &self.baseline), ("scale", &self.scale)] {
            if v.len() != d {
                return Err(Error::LengthMismatch { what: name, expected: d, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    fn rng(&self, sample_index: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ sample_index as u64)
    }
}

/// Something that attributes a model's prediction at one sample to its features.
pub trait LocalExplainer: Send + Sync {
    fn id(&self) -> ExplainerId;

    fn explain(
        &self,
        model: &dyn BlackBox,
        x: &[f64],
        sample_index: usize,
    ) -> Result<AttributionVector>;
}

/// One of the three built-in explainers with its parameters.
#[derive(Debug, Clone)]
pub struct Explainer {
    pub kind: ExplainerId,
    pub params: ExplainerParams,
}

impl Explainer {
    pub fn new(kind: ExplainerId, params: ExplainerParams) -> Self {
        Self { kind, params }
    }
}

impl LocalExplainer for Explainer {
    fn id(&self) -> ExplainerId {
        self.kind
    }

    fn explain(
        &self,
        model: &dyn BlackBox,
        x: &[f64],
        sample_index: usize,
    ) -> Result<AttributionVector> {
        match self.kind {
            ExplainerId::KernelShap => kernel_shap(model, x, &self.params, sample_index),
            ExplainerId::Lime => lime_local(model, x, &self.params, sample_index),
            ExplainerId::IntegratedGradients => {
                integrated_gradients(model, x, &self.params, sample_index)
            }
        }
    }
}

/// Attributes every sample of `ds`, tagging failures with the sample index.
pub fn attribute_all(
    model: &dyn BlackBox,
    explainer: &dyn LocalExplainer,
    ds: &Dataset,
) -> Result<Vec<AttributionVector>> {
    ds.samples()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            explainer.explain(model, x, i).map_err(|e| Error::Explainer {
                explainer: explainer.id(),
                sample: i,
                source: Box::new(e),
            })
        })
        .collect()
}

fn check_input(model: &dyn BlackBox, x: &[f64], p: &ExplainerParams) -> Result<ClassId> {
    if x.len() != model.n_features() {
        return Err(Error::DimensionMismatch { expected: model.n_features(), found: x.len() });
    }
    p.validate(x.len())?;
    model.predict(x)
}

/// Integrated gradients along the straight path from the baseline, midpoint rule.
pub fn integrated_gradients(
    model: &dyn BlackBox,
    x: &[f64],
    p: &ExplainerParams,
    sample_index: usize,
) -> Result<AttributionVector> {
    if !model.has_gradient() {
        return Err(Error::NoGradient);
    }
    let class = check_input(model, x, p)?;
    let d = x.len();
    let delta: Vec<f64> = x.iter().zip(&p.baseline).map(|(a, b)| a - b).collect();
    let mut avg = alloc::vec![0.0; d];
    let mut point = alloc::vec![0.0; d];
    for k in 0..p.ig_steps {
        let alpha = (k as f64 + 0.5) / p.ig_steps as f64;
        for ((pt, b), dl) in point.iter_mut().zip(&p.baseline).zip(&delta) {
            *pt = b + alpha * dl;
        }
        let g = model.gradient(&point, class)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        for (a, gi) in avg.iter_mut().zip(&g) {
            *a += gi;
        }
    }
    let weights = avg
        .iter()
        .zip(&delta)
        .map(|(a, dl)| dl * a / p.ig_steps as f64)
        .collect();
    Ok(AttributionVector {
        weights,
        explainer: ExplainerId::IntegratedGradients,
        sample_index,
        fallback: false,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Advances `combo` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Weighted coalitions over the `m` varying features.
struct Coalitions {
    masks: Vec<Vec<bool>>,
    weights: Vec<f64>,
}

impl Coalitions {
    fn push(&mut self, mask: Vec<bool>, weight: f64) {
        self.masks.push(mask);
        self.weights.push(weight);
    }

    fn push_pair(&mut self, mask: Vec<bool>, weight: f64, paired: bool) {
        if paired {
            let complement = mask.iter().map(|b| !b).collect();
            self.push(complement, weight);
        }
        self.push(mask, weight);
    }
}

/// Coalitions drawn from the Shapley kernel distribution over sizes. Size
/// pairs `(s, m - s)` whose expected draw count covers every coalition of
/// that size are enumerated with exact kernel weights; the remaining budget
/// is sampled as complementary pairs.
fn kernel_coalitions(m: usize, budget: usize, rng: &mut ChaCha8Rng) -> Coalitions {
    let mut out = Coalitions { masks: Vec::new(), weights: Vec::new() };
    let size_mass: Vec<f64> = (0..m)
        .map(|s| if s == 0 { 0.0 } else { (m - 1) as f64 / (s * (m - s)) as f64 })
        .collect();
    let total: f64 = size_mass.iter().sum();
    let size_mass: Vec<f64> = size_mass.iter().map(|w| w / total).collect();

    let mut remaining = budget;
    let mut remaining_mass = 1.0;
    let mut next_size = 1;
    while next_size <= m / 2 {
        let s = next_size;
        let paired = s != m - s;
        let per_size = binomial(m, s);
        let count = if paired { 2.0 * per_size } else { per_size };
        let mass = if paired { 2.0 * size_mass[s] } else { size_mass[s] };
        let expected = remaining as f64 * mass / remaining_mass;
        if count > remaining as f64 || expected + 1e-8 < count {
            break;
        }
        let weight = size_mass[s] / per_size;
        let mut combo: Vec<usize> = (0..s).collect();
        loop {
            let mut mask = alloc::vec![false; m];
            combo.iter().for_each(|&i| mask[i] = true);
            out.push_pair(mask, weight, paired);
            if !next_combination(&mut combo, m) {
                break;
            }
        }
        remaining -= count as usize;
        remaining_mass -= mass;
        next_size += 1;
    }

    if next_size <= m / 2 && remaining > 0 {
        let sizes: Vec<usize> = (next_size..=m / 2).collect();
        let mass: Vec<f64> = sizes
            .iter()
            .map(|&s| if s != m - s { 2.0 * size_mass[s] } else { size_mass[s] })
            .collect();
        let draws = remaining;
        let weight = remaining_mass / draws as f64;
        let mut drawn = 0;
        while drawn < draws {
            let mut u = rng.gen::<f64>() * remaining_mass;
            let mut pick = sizes[sizes.len() - 1];
            for (&s, &w) in sizes.iter().zip(&mass) {
                if u < w {
                    pick = s;
                    break;
                }
                u -= w;
            }
            let mut mask = alloc::vec![false; m];
            for i in index::sample(rng, m, pick) {
                mask[i] = true;
            }
            // a coin flip decides which side of the pair is the small one
            if pick != m - pick && rng.gen::<bool>() {
                mask.iter_mut().for_each(|b| *b = !*b);
            }
            let paired = drawn + 1 < draws;
            out.push_pair(mask, weight, paired);
            drawn += if paired { 2 } else { 1 };
        }
    }
    out
}

fn uniform_coalitions(m: usize, budget: usize, rng: &mut ChaCha8Rng) -> Coalitions {
    let mut out = Coalitions { masks: Vec::new(), weights: Vec::new() };
    while out.masks.len() < budget {
        let mask: Vec<bool> = (0..m).map(|_| rng.gen::<bool>()).collect();
        let s = mask.iter().filter(|b| **b).count();
        if s == 0 || s == m {
            continue;
        }
        out.push(mask, (m - 1) as f64 / (binomial(m, s) * (s * (m - s)) as f64));
    }
    out
}

/// Solves the kernel-weighted least squares problem with `sum(phi) = delta`
/// enforced by eliminating the last variable.
fn constrained_wls(coalitions: &Coalitions, values: &[f64], delta: f64, ridge: f64) -> Option<Vec<f64>> {
    let m = coalitions.masks.first()?.len();
    let k = m - 1;
    let mut a = SquareMatrix::zeros(k);
    let mut b = alloc::vec![0.0; k];
    let mut u = alloc::vec![0.0; k];
    for ((mask, &w), &y) in coalitions.masks.iter().zip(&coalitions.weights).zip(values) {
        let last = f64::from(u8::from(mask[k]));
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = f64::from(u8::from(mask[j])) - last;
        }
        let t = y - delta * last;
        a.add_outer(&u, w);
        for (bj, uj) in b.iter_mut().zip(&u) {
            *bj += w * uj * t;
        }
    }
    if ridge > 0.0 {
        let bump = ridge * (a.trace() / k as f64).max(f64::MIN_POSITIVE);
        a.add_diagonal(bump);
    }
    let mut phi = a.solve_spd(&b)?;
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Some(phi)
}

/// Kernel SHAP estimate of each feature's contribution to the predicted
/// class's logit, with absent features replaced by the baseline. The
/// efficiency constraint `sum(phi) = f(x) - f(baseline)` holds exactly.
pub fn kernel_shap(
    model: &dyn BlackBox,
    x: &[f64],
    p: &ExplainerParams,
    sample_index: usize,
) -> Result<AttributionVector> {
    let class = check_input(model, x, p)?;
    let d = x.len();
    let fx = model.logit(x, class)?;
    let fb = model.logit(&p.baseline, class)?;
    let delta = fx - fb;
    let mut weights = alloc::vec![0.0; d];
    let mut fallback = false;

    // features equal to the baseline cannot change the output
    let varying: Vec<usize> = (0..d).filter(|&i| x[i] != p.baseline[i]).collect();
    let m = varying.len();
    match m {
        0 => {}
        1 => weights[varying[0]] = delta,
        _ => {
            let mut rng = p.rng(sample_index);
            let eval = |coalitions: &Coalitions| -> Result<Vec<f64>> {
                let mut z = p.baseline.clone();
                coalitions
                    .masks
                    .iter()
                    .map(|mask| {
                        for (&f, &on) in varying.iter().zip(mask) {
                            z[f] = if on { x[f] } else { p.baseline[f] };
                        }
                        Ok(model.logit(&z, class)? - fb)
                    })
                    .collect()
            };
            let coalitions = kernel_coalitions(m, p.ks_budget, &mut rng);
            let values = eval(&coalitions)?;
            let phi = match constrained_wls(&coalitions, &values, delta, 0.0) {
                Some(phi) => phi,
                None => {
                    fallback = true;
                    let coalitions = uniform_coalitions(m, p.ks_budget.max(2 * m), &mut rng);
                    let values = eval(&coalitions)?;
                    constrained_wls(&coalitions, &values, delta, 0.0)
                        .or_else(|| constrained_wls(&coalitions, &values, delta, 1e-8))
                        .ok_or(Error::NonFiniteOutput)?
                }
            };
            for (&f, v) in varying.iter().zip(phi) {
                weights[f] = v;
            }
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFiniteOutput);
    }
    Ok(AttributionVector { weights, explainer: ExplainerId::KernelShap, sample_index, fallback })
}

/// Coefficients of a proximity-weighted ridge surrogate fitted to Gaussian
/// perturbations around `x`, expressed per original feature unit.
pub fn lime_local(
    model: &dyn BlackBox,
    x: &[f64],
    p: &ExplainerParams,
    sample_index: usize,
) -> Result<AttributionVector> {
    let class = check_input(model, x, p)?;
    let d = x.len();
    let scale: Vec<f64> = p.scale.iter().map(|s| if *s > 1e-12 { *s } else { 1.0 }).collect();
    let width = p.kernel_width.unwrap_or_else(|| 0.75 * libm::sqrt(d as f64));
    let mut rng = p.rng(sample_index);

    let n = p.lime_budget;
    let mut offsets: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    let mut z = alloc::vec![0.0; d];
    for k in 0..n {
        // the first perturbation is the instance itself
        let u: Vec<f64> = if k == 0 {
            alloc::vec![0.0; d]
        } else {
            (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        };
        for ((zi, xi), (ui, si)) in z.iter_mut().zip(x).zip(u.iter().zip(&scale)) {
            *zi = xi + ui * si;
        }
        targets.push(model.logit(&z, class)?);
        let dist2: f64 = u.iter().map(|v| v * v).sum();
        kernel.push(libm::sqrt(libm::exp(-dist2 / (width * width))));
        offsets.push(u);
    }

    let wsum: f64 = kernel.iter().sum();
    let mut mean_u = alloc::vec![0.0; d];
    let mut mean_t = 0.0;
    for ((u, t), w) in offsets.iter().zip(&targets).zip(&kernel) {
        for (m, ui) in mean_u.iter_mut().zip(u) {
            *m += w * ui / wsum;
        }
        mean_t += w * t / wsum;
    }
    let mut a = SquareMatrix::zeros(d);
    let mut b = alloc::vec![0.0; d];
    let mut centered = alloc::vec![0.0; d];
    for ((u, t), w) in offsets.iter().zip(&targets).zip(&kernel) {
        for ((c, ui), m) in centered.iter_mut().zip(u).zip(&mean_u) {
            *c = ui - m;
        }
        a.add_outer(&centered, *w);
        for (bj, c) in b.iter_mut().zip(&centered) {
            *bj += w * c * (t - mean_t);
        }
    }

    let mut ridge = p.lime_ridge;
    let mut fallback = false;
    let beta = loop {
        let mut system = a.clone();
        system.add_diagonal(ridge);
        if let Some(beta) = system.solve_spd(&b) {
            break beta;
        }
        fallback = true;
        ridge = if ridge > 0.0 { ridge * 10.0 } else { 1e-6 };
        if ridge > 1e12 {
            return Err(Error::NonFiniteOutput);
        }
    };
    let weights = beta.iter().zip(&scale).map(|(bj, s)| bj / s).collect();
    Ok(AttributionVector { weights, explainer: ExplainerId::Lime, sample_index, fallback })
}

/// Features whose share of the total absolute attribution exceeds `iota`.
pub fn important_features(weights: &[f64], iota: f64) -> FeatureSet {
    let total: f64 = weights.iter().map(|w| w.abs()).sum();
    if total.is_nan() || total <= 0.0 {
        return FeatureSet::new();
    }
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.abs() / total > iota)
        .map(|(i, _)| i)
        .collect()
}
