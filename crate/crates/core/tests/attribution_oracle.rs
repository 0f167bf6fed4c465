use cfire_core::attribution::{important_features, integrated_gradients, kernel_shap};
use cfire_core::blackbox::train_mlp;
use cfire_core::synth::BoxTask;
use cfire_core::{BlackBox, ExplainerParams, Mlp, MlpConfig, Result};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(d: usize, baseline: Vec<f64>, ks_budget: usize, seed: u64) -> ExplainerParams {
    ExplainerParams {
        iota: 0.01,
        ks_budget,
        lime_budget: 300,
        ig_steps: 200,
        baseline,
        scale: vec![1.0; d],
        kernel_width: None,
        lime_ridge: 1.0,
        seed,
    }
}

fn mlp(dim: usize, seed: u64) -> Mlp {
    let ds = BoxTask { dim, ..BoxTask::two_corners() }.generate(500, seed).unwrap();
    let cfg = MlpConfig { hidden_width: 12, epochs: 40, learning_rate: 0.02, batch_size: 32, seed };
    train_mlp(&ds, &cfg).unwrap()
}

/// Class 0's logit is a sum of one-dimensional terms; class 1 never wins.
struct Additive;

impl Additive {
    fn term(i: usize, v: f64) -> f64 {
        match i {
            0 => (2.0 * v).sin(),
            1 => v * v,
            2 => -1.5 * v,
            _ => (v - 0.3).abs(),
        }
    }
}

impl BlackBox for Additive {
    fn n_features(&self) -> usize {
        4
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![(0..4).map(|i| Self::term(i, x[i])).sum::<f64>() + 100.0, 0.0])
    }
}

fn exact_shapley(model: &dyn BlackBox, x: &[f64], baseline: &[f64], class: usize) -> Vec<f64> {
    let d = x.len();
    let v: Vec<f64> = (0..1u32 << d)
        .map(|m| {
            let z: Vec<f64> = (0..d).map(|i| if m >> i & 1 == 1 { x[i] } else { baseline[i] }).collect();
            model.logit(&z, class).unwrap()
        })
        .collect();
    let fact = |n: usize| (1..=n).product::<usize>() as f64;
    (0..d)
        .map(|i| {
            (0..1u32 << d)
                .filter(|m| m >> i & 1 == 0)
                .map(|m| {
                    let s = m.count_ones() as usize;
                    fact(s) * fact(d - s - 1) / fact(d) * (v[(m | 1 << i) as usize] - v[m as usize])
                })
                .sum()
        })
        .collect()
}

#[test]
fn ig_completeness_on_trained_mlps() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..3 {
        let model = mlp(8, seed);
        let (mean, _) = model.standardization();
        for i in 0..20 {
            let x: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
            let p = params(8, mean.to_vec(), 300, seed);
            let class = model.predict(&x).unwrap();
            let delta = model.logit(&x, class).unwrap() - model.logit(&p.baseline, class).unwrap();
            let w = integrated_gradients(&model, &x, &p, i).unwrap();
            let gap = (w.weights.iter().sum::<f64>() - delta).abs();
            assert!(gap <= 1e-2, "completeness gap {gap}");
        }
    }
}

#[test]
fn ks_on_additive_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..20 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = kernel_shap(&Additive, &x, &params(4, b.clone(), 300, 9), i).unwrap();
        for f in 0..4 {
            let target = Additive::term(f, x[f]) - Additive::term(f, b[f]);
            assert!((w.weights[f] - target).abs() <= 0.05, "feature {f}: {} vs {target}", w.weights[f]);
        }
    }
}

#[test]
fn ks_matches_exact_shapley_on_six_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..2 {
        let model = mlp(6, 20 + seed);
        for budget in [40, 300] {
            for i in 0..10 {
                let x: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
                let p = params(6, vec![0.5; 6], budget, seed);
                let class = model.predict(&x).unwrap();
                let exact = exact_shapley(&model, &x, &p.baseline, class);
                let w = kernel_shap(&model, &x, &p, i).unwrap();
                for (a, e) in w.weights.iter().zip(&exact) {
                    assert!((a - e).abs() <= 0.1, "budget {budget}: {a} vs {e}");
                }
                let delta = model.logit(&x, class).unwrap() - model.logit(&p.baseline, class).unwrap();
                assert!((w.weights.iter().sum::<f64>() - delta).abs() <= 1e-12 * delta.abs().max(1.0));
            }
        }
    }
}

proptest! {
    #[test]
    fn important_features_ignore_positive_scale(
        w in prop::collection::vec(-10.0f64..10.0, 1..12),
        scale in 1e-3f64..1e3,
        iota in 0.001f64..0.5,
    ) {
        let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let a = important_features(&w, iota);
        let b = important_features(&scaled, iota);
        // scaling can only move a ratio across iota through rounding
        let total: f64 = w.iter().map(|v| v.abs()).sum();
        let borderline = w.iter().any(|v| (v.abs() / total - iota).abs() < 1e-9);
        prop_assume!(!borderline);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn important_features_follow_normalized_rule(
        w in prop::collection::vec(-10.0f64..10.0, 1..12),
        iota in 0.001f64..0.5,
    ) {
        let total: f64 = w.iter().map(|v| v.abs()).sum();
        let set = important_features(&w, iota);
        for (i, v) in w.iter().enumerate() {
            prop_assert_eq!(set.contains(i), total > 0.0 && v.abs() / total > iota);
        }
    }
}
