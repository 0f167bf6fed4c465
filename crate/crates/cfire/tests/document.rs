use cfire::document::{deserialize, serialize};
use cfire_core::rulemodel::{CandidateSummary, EmptyClassPolicy};
use cfire_core::{
    BoxParams, CfireParams, ClassDnf, ExplainerId, IntervalBox, Provenance, RuleModel, Term,
};
use proptest::prelude::*;

fn term() -> impl Strategy<Value = Term> {
    (
        prop::collection::btree_map(0usize..12, (-1e6f64..1e6, 0.0f64..1e3), 1..5),
        0.0f64..=1.0,
        0usize..500,
    )
        .prop_map(|(cons, precision, covered)| Term {
            bbox: IntervalBox::from_constraints(cons.into_iter().map(|(f, (lo, w))| (f, lo, lo + w))).unwrap(),
            precision,
            covered,
        })
}

fn explainer() -> impl Strategy<Value = ExplainerId> {
    prop::sample::select(vec![ExplainerId::KernelShap, ExplainerId::Lime, ExplainerId::IntegratedGradients])
}

fn rule_model() -> impl Strategy<Value = RuleModel> {
    (
        prop::collection::vec(prop::collection::vec(term(), 0..4), 1..4),
        explainer(),
        (0.001f64..0.5, 0.001f64..=1.0, 1usize..10, 0.51f64..=1.0, 1usize..4, any::<bool>()),
        (any::<u64>(), prop::option::of(any::<u64>()), prop::option::of("[a-z0-9-]{1,8}")),
        prop::collection::vec((explainer(), prop::option::of(0.0f64..=1.0)), 0..3),
    )
        .prop_map(|(classes, explainer, p, prov, cands)| RuleModel {
            classes: classes
                .into_iter()
                .enumerate()
                .map(|(class_id, terms)| ClassDnf { class_id, terms })
                .collect(),
            explainer,
            params: CfireParams {
                iota: p.0,
                tau: p.1,
                boxes: BoxParams { max_depth: p.2, purity_threshold: p.3, min_leaf_positives: p.4 },
                empty_class: if p.5 { EmptyClassPolicy::Skip } else { EmptyClassPolicy::Error },
            },
            provenance: Provenance {
                dataset_fingerprint: prov.0,
                seed: prov.1,
                model_label: prov.2,
                skipped_classes: vec![],
                candidates: cands
                    .into_iter()
                    .map(|(explainer, accuracy)| CandidateSummary {
                        explainer,
                        accuracy,
                        error: accuracy.is_none().then(|| "failed".to_owned()),
                    })
                    .collect(),
            },
        })
}

proptest! {
    #[test]
    fn round_trip_is_identity(rm in rule_model()) {
        let names: Vec<String> = (0..12).map(|i| format!("feat{i}")).collect();
        let text = serialize(&rm, &names);
        let back = deserialize(&text).unwrap();
        prop_assert_eq!(&back, &rm);
        prop_assert_eq!(serialize(&back, &names), text);
    }
}

#[test]
fn schema_errors_carry_paths() {
    let rm = RuleModel {
        classes: vec![ClassDnf {
            class_id: 0,
            terms: vec![Term { bbox: IntervalBox::from_constraints([(1, 0.0, 2.0)]).unwrap(), precision: 1.0, covered: 3 }],
        }],
        explainer: ExplainerId::IntegratedGradients,
        params: CfireParams::default(),
        provenance: Provenance::default(),
    };
    let text = serialize(&rm, &["a".into(), "b".into()]);
    let broken = text.replace("\"lo\"", "\"low\"");
    let msg = deserialize(&broken).unwrap_err().to_string();
    assert!(msg.contains("classes[0].terms[0].constraints[0]"), "{msg}");
    let broken = text.replace("\"IG\"", "\"XX\"");
    assert!(deserialize(&broken).unwrap_err().to_string().contains("explainer"));
    let broken = text.replace("\"covered\": 3", "\"covered\": -3");
    assert!(deserialize(&broken).unwrap_err().to_string().contains("covered"));
}
