mod common;

use std::time::Duration;

use treexp_core::explain::bt::bt_weight_summary;
use treexp_core::explain::rf::rf_counterfactual_exists;
use treexp_core::{
    explain_all, explain_one, oracle_check, oracle_enumerate, Budget, ExplainError, ExplanationKind, Options, Query,
};

fn all_kinds_for(example: &str) -> Vec<ExplanationKind> {
    let model_kind = common::fixture(example).0.kind();
    ExplanationKind::ALL
        .into_iter()
        .filter(|k| k.model_kind() == model_kind)
        .collect()
}

#[test]
fn enumerations_match_the_oracle() {
    for example in ["dt_example", "rf_example"] {
        let (model, x) = common::fixture(example);
        let q = Query::new(&model, &x).unwrap();
        for kind in all_kinds_for(example).into_iter().filter(|k| k.supports_enumeration()) {
            let found = explain_all(&q, kind, &Options::default()).unwrap();
            assert!(found.complete);
            let ours: Vec<Vec<usize>> = found.explanations.into_iter().map(|e| e.literals).collect();
            assert_eq!(ours, oracle_enumerate(&q, kind, 16).unwrap(), "{example} {kind}");
        }
    }
}

#[test]
fn single_explanations_belong_to_the_oracle_enumeration() {
    for example in ["dt_example", "rf_example", "bt_example"] {
        let (model, x) = common::fixture(example);
        let q = Query::new(&model, &x).unwrap();
        for kind in all_kinds_for(example) {
            let e = explain_one(&q, kind, &Options::default()).unwrap();
            let verdict = oracle_check(&q, &e, 16).unwrap();
            assert!(verdict.valid && verdict.minimal, "{example} {kind}: {verdict:?}");
            assert!(
                oracle_enumerate(&q, kind, 16).unwrap().contains(&e.literals),
                "{example} {kind}"
            );
        }
    }
}

#[test]
fn rendered_tests_use_instance_polarity() {
    let (model, x) = common::dt_example();
    let q = Query::new(&model, &x).unwrap();
    let e = explain_one(&q, ExplanationKind::DtSufficient, &Options::default()).unwrap();
    assert_eq!(e.tests, vec!["x1 <= 2", "x2 <= 3"]);
}

#[test]
fn fixing_three_and_six_blocks_every_counterfactual() {
    let (model, x) = common::rf_example();
    let q = Query::new(&model, &x).unwrap();
    assert_eq!(
        rf_counterfactual_exists(&q, &[3, 6], &Budget::unlimited()).unwrap(),
        None
    );
}

#[test]
fn fixing_three_alone_leaves_a_counterfactual() {
    let (model, x) = common::rf_example();
    let q = Query::new(&model, &x).unwrap();
    let w = rf_counterfactual_exists(&q, &[3], &Budget::unlimited())
        .unwrap()
        .expect("a witness exists");
    assert!(w.flips.contains(&1) && w.flips.contains(&6), "{w:?}");
    assert!(!w.flips.contains(&3));
    assert_eq!(w.resulting_class, 0);
    assert_eq!(w.disagreeing_count, 2);
}

#[test]
fn boosted_weight_summaries() {
    let (model, x) = common::bt_example();
    let q = Query::new(&model, &x).unwrap();
    let s = bt_weight_summary(&q, &[5, 6]);
    assert_eq!(s.worst_sum, 200);
    assert!(s.guarantees(q.class()));
    let s = bt_weight_summary(&q, &[]);
    assert_eq!((s.worst_sum, s.best_sum), (-1100, 1500));
    assert!(!s.guarantees(q.class()));
    let every: Vec<usize> = q.table.ids().collect();
    let s = bt_weight_summary(&q, &every);
    assert_eq!((s.worst_sum, s.best_sum), (1500, 1500));
    assert_eq!(q.prediction.raw_weight, Some(1500));
}

#[test]
fn exhausted_budget_times_out() {
    let (model, x) = common::rf_example();
    let q = Query::new(&model, &x).unwrap();
    let opts = Options {
        budget: Budget::with_timeout(Duration::ZERO),
        seed: None,
    };
    for kind in all_kinds_for("rf_example") {
        assert!(
            matches!(explain_one(&q, kind, &opts), Err(ExplainError::TimedOut)),
            "{kind}"
        );
        if kind.supports_enumeration() {
            let partial = explain_all(&q, kind, &opts).unwrap();
            assert!(!partial.complete);
        }
    }
}

#[test]
fn cancel_flag_stops_the_search() {
    use std::sync::atomic::AtomicBool;
    use std::sync::Arc;
    let (model, x) = common::dt_example();
    let q = Query::new(&model, &x).unwrap();
    let opts = Options {
        budget: Budget::unlimited().with_cancel(Arc::new(AtomicBool::new(true))),
        seed: None,
    };
    assert!(matches!(
        explain_one(&q, ExplanationKind::DtSufficient, &opts),
        Err(ExplainError::TimedOut)
    ));
}

#[test]
fn enumeration_is_rejected_for_single_answer_kinds() {
    let (model, x) = common::bt_example();
    let q = Query::new(&model, &x).unwrap();
    assert!(matches!(
        explain_all(&q, ExplanationKind::BtTreeSpecific, &Options::default()),
        Err(ExplainError::EnumerationUnsupported(_))
    ));
}
