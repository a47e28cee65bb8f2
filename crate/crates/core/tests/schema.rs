use treexp_core::model::{Node, SplitOp, Threshold};
use treexp_core::{load_model, Instance, LiteralTable, ModelError, ModelKind};

fn dt(nodes: &str) -> String {
    format!(r#"{{"kind":"dt","n_features":2,"trees":[{{"nodes":[{nodes}]}}]}}"#)
}

const STUMP: &str = r#"{"type":"split","feature":0,"op":"le","threshold":1.5,"left":1,"right":2},
    {"type":"leaf","class":1},{"type":"leaf","class":0}"#;

fn rejects(doc: &str) -> ModelError {
    load_model(doc).expect_err(doc)
}

#[test]
fn accepts_a_minimal_stump() {
    let m = load_model(&dt(STUMP)).unwrap();
    assert_eq!(m.kind(), ModelKind::Dt);
    assert_eq!(m.size(), 3);
    assert_eq!(m.predict(&Instance::new(vec![1.5, 0.0]).unwrap()).unwrap().class, 1);
    assert_eq!(m.predict(&Instance::new(vec![1.6, 0.0]).unwrap()).unwrap().class, 0);
}

#[test]
fn rejects_unknown_fields_and_missing_parts() {
    assert!(matches!(
        rejects(r#"{"kind":"dt","n_features":2,"trees":[],"extra":1}"#),
        ModelError::Schema(_)
    ));
    assert!(matches!(
        rejects(r#"{"kind":"xgb","n_features":2,"trees":[]}"#),
        ModelError::Schema(_)
    ));
    assert!(matches!(
        rejects(&dt(r#"{"type":"leaf","class":1,"depth":0}"#)),
        ModelError::Schema(_)
    ));
    assert!(matches!(rejects(&dt(r#"{"class":1}"#)), ModelError::Schema(_)));
}

#[test]
fn leaves_need_exactly_one_payload() {
    assert!(matches!(rejects(&dt(r#"{"type":"leaf"}"#)), ModelError::Node { .. }));
    assert!(matches!(
        rejects(&dt(r#"{"type":"leaf","class":1,"weight":3}"#)),
        ModelError::Node { .. }
    ));
}

#[test]
fn leaf_payload_must_match_the_model_kind() {
    assert!(load_model(&dt(r#"{"type":"leaf","weight":3}"#)).is_err());
    let bt = r#"{"kind":"bt","n_features":1,"trees":[{"nodes":[{"type":"leaf","class":1}]}]}"#;
    assert!(load_model(bt).is_err());
    let rf = r#"{"kind":"rf","n_features":1,"trees":[{"nodes":[{"type":"leaf","class":2}]}]}"#;
    assert!(load_model(rf).is_err());
}

#[test]
fn weight_scale_is_boosted_only() {
    let rf = r#"{"kind":"rf","n_features":1,"weight_scale":10,"trees":[{"nodes":[{"type":"leaf","class":1}]}]}"#;
    assert!(matches!(rejects(rf), ModelError::Model(_)));
    let bt = r#"{"kind":"bt","n_features":1,"weight_scale":10,"trees":[{"nodes":[{"type":"leaf","weight":-4}]}]}"#;
    let m = load_model(bt).unwrap();
    assert_eq!(m.weight_scale(), 10);
    assert_eq!(load_model(&m.to_json()).unwrap(), m);
}

#[test]
fn structural_errors_are_reported() {
    let dangling =
        r#"{"type":"split","feature":0,"op":"le","threshold":1,"left":1,"right":7},{"type":"leaf","class":1}"#;
    assert!(load_model(&dt(dangling)).is_err());
    let cycle = r#"{"type":"split","feature":0,"op":"le","threshold":1,"left":1,"right":0},{"type":"leaf","class":1}"#;
    assert!(load_model(&dt(cycle)).is_err());
    let shared = r#"{"type":"split","feature":0,"op":"le","threshold":1,"left":1,"right":1},{"type":"leaf","class":1}"#;
    assert!(load_model(&dt(shared)).is_err());
    let unreachable = r#"{"type":"leaf","class":1},{"type":"leaf","class":0}"#;
    assert!(load_model(&dt(unreachable)).is_err());
    let bad_feature = r#"{"type":"split","feature":5,"op":"le","threshold":1,"left":1,"right":2},
        {"type":"leaf","class":1},{"type":"leaf","class":0}"#;
    assert!(load_model(&dt(bad_feature)).is_err());
    assert!(load_model(r#"{"kind":"dt","n_features":1,"trees":[]}"#).is_err());
    assert!(load_model(r#"{"kind":"rf","n_features":1,"trees":[]}"#).is_err());
}

#[test]
fn set_membership_splits() {
    let nodes = r#"{"type":"split","feature":1,"op":"in","threshold":[3,1,3],"left":1,"right":2},
        {"type":"leaf","class":1},{"type":"leaf","class":0}"#;
    let m = load_model(&dt(nodes)).unwrap();
    match m.tree(0).node(0) {
        Node::Split { test, .. } => {
            assert_eq!(test.op, SplitOp::In);
            assert_eq!(test.threshold, Threshold::Set(vec![1.0, 3.0]));
            assert_eq!(test.render(true), "x2 in {1, 3}");
            assert_eq!(test.render(false), "x2 not in {1, 3}");
        }
        other => panic!("unexpected root {other:?}"),
    }
    assert_eq!(m.predict(&Instance::new(vec![0.0, 3.0]).unwrap()).unwrap().class, 1);
    assert_eq!(m.predict(&Instance::new(vec![0.0, 2.0]).unwrap()).unwrap().class, 0);
    assert_eq!(load_model(&m.to_json()).unwrap(), m);
}

#[test]
fn identical_tests_share_a_literal() {
    let forest = r#"{"kind":"rf","n_features":2,"trees":[
        {"nodes":[{"type":"split","feature":0,"op":"le","threshold":2,"left":1,"right":2},
                  {"type":"leaf","class":1},{"type":"leaf","class":0}]},
        {"nodes":[{"type":"split","feature":1,"op":"lt","threshold":0,"left":1,"right":2},
                  {"type":"leaf","class":0},
                  {"type":"split","feature":0,"op":"le","threshold":2.0,"left":3,"right":4},
                  {"type":"leaf","class":1},{"type":"leaf","class":0}]},
        {"nodes":[{"type":"split","feature":1,"op":"lt","threshold":-0.0,"left":1,"right":2},
                  {"type":"leaf","class":0},{"type":"leaf","class":1}]}]}"#;
    let m = load_model(forest).unwrap();
    let table = LiteralTable::build(&m);
    assert_eq!(table.len(), 2);
    assert_eq!(table.literal_at(1, 2), Some(1));
    assert_eq!(table.literal_at(1, 0), Some(2));
    assert_eq!(table.literal_at(2, 0), Some(2));
}

#[test]
fn instances_from_json_and_csv() {
    assert_eq!(Instance::from_json("[1, 2.5]").unwrap().values(), &[1.0, 2.5]);
    assert_eq!(Instance::from_csv("a,b\n1,2.5\n").unwrap().values(), &[1.0, 2.5]);
    assert_eq!(Instance::from_csv("1,2.5").unwrap().values(), &[1.0, 2.5]);
    assert!(Instance::from_csv("a,b\n1,2\n3,4\n").is_err());
    assert!(Instance::from_json("[1, \"x\"]").is_err());
    let m = load_model(&dt(STUMP)).unwrap();
    assert!(matches!(
        m.predict(&Instance::new(vec![1.0]).unwrap()),
        Err(ModelError::InstanceLength { expected: 2, found: 1 })
    ));
}
