use std::path::Path;
use std::time::Duration;

use treexp_cli::bench::{run_bench, summarize, BenchConfig, Manifest, Mode, RowResult, Status};
use treexp_cli::report::{model_hash, run, RunConfig, RunReport};
use treexp_core::{load_model, Instance, Kind, ModelKind};

fn rf_example() -> (treexp_core::Model, Instance) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/testdata");
    let model = load_model(&std::fs::read_to_string(dir.join("rf_example.json")).unwrap()).unwrap();
    let instance = Instance::load(&dir.join("rf_instance.json")).unwrap();
    (model, instance)
}

fn config(kind: Kind, enumerate: bool) -> RunConfig {
    RunConfig {
        kind,
        enumerate,
        timeout: Duration::from_secs(10),
        seed: None,
        timing: false,
    }
}

fn row(kind: Kind, status: Status, lengths: &[usize]) -> RowResult {
    let (model, instance) = rf_example();
    let mut report = run(&model, &instance, &config(kind, false)).unwrap();
    report.count = lengths.len();
    report.avg_length = if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
    };
    report.timed_out = status == Status::TimedOut;
    RowResult {
        name: "r".into(),
        kind,
        mode: Mode::All,
        model_kind: Some(ModelKind::Rf),
        status,
        error: None,
        report: Some(report),
    }
}

#[test]
fn summary_averages_completed_rows_only() {
    let rows = vec![
        row(Kind::Majority, Status::Ok, &[2, 4]),
        row(Kind::Majority, Status::Ok, &[3, 3, 3, 3]),
        row(Kind::Majority, Status::TimedOut, &[9]),
        row(Kind::Contrastive, Status::TimedOut, &[]),
    ];
    let summary = summarize(&rows);
    assert_eq!(summary.len(), 2);
    let contrastive = &summary[0];
    assert_eq!(contrastive.kind, Kind::Contrastive);
    assert_eq!(contrastive.completion_pct, 0.0);
    assert_eq!(contrastive.avg_count, None);
    let majority = &summary[1];
    assert_eq!((majority.rows, majority.completed), (3, 2));
    assert!((majority.completion_pct - 200.0 / 3.0).abs() < 1e-9);
    assert_eq!(majority.avg_count, Some(3.0));
    assert_eq!(majority.avg_length, Some(3.0));
}

#[test]
fn run_reports_count_and_average_length() {
    let (model, instance) = rf_example();
    let report = run(&model, &instance, &config(Kind::Majority, true)).unwrap();
    assert_eq!(report.count, 3);
    assert!((report.avg_length - 8.0 / 3.0).abs() < 1e-12);
    assert!(report.complete && !report.timed_out);
    assert_eq!(report.elapsed_ms, 0);
    let back: RunReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn model_hash_ignores_source_formatting() {
    let (model, _) = rf_example();
    let reparsed = load_model(&model.to_json_pretty()).unwrap();
    assert_eq!(model_hash(&model), model_hash(&reparsed));
}

#[test]
fn impossible_requests_report_zero_explanations() {
    let model = load_model(
        r#"{"kind":"rf","n_features":1,"trees":[
        {"nodes":[{"type":"split","feature":0,"op":"le","threshold":1,"left":1,"right":2},
                  {"type":"leaf","class":1},{"type":"leaf","class":0}]},
        {"nodes":[{"type":"leaf","class":0}]}]}"#,
    )
    .unwrap();
    let instance = Instance::new(vec![0.0]).unwrap();
    let report = run(&model, &instance, &config(Kind::Majority, false)).unwrap();
    assert_eq!(report.prediction.class, 0);
    assert_eq!(report.count, 0);
    assert!(report.complete);
    assert!(report.note.is_some());
}

#[test]
fn manifest_validation() {
    let base = Path::new(".");
    assert!(Manifest::parse("[]", base).unwrap().rows.is_empty());
    assert!(Manifest::parse(r#"[{"kind":"sufficient","model":"m.json"}]"#, base).is_err());
    assert!(Manifest::parse(
        r#"[{"kind":"sufficient","model":"m.json","instance":"x.json","extra":1}]"#,
        base
    )
    .is_err());
    let both = r#"[{"kind":"sufficient","model":"m.json","instance":"x.json",
                    "synthetic":{"kind":"dt","trees":1,"depth":2,"features":2,"seed":0}}]"#;
    assert!(Manifest::parse(both, base).is_err());
    let zero =
        r#"[{"kind":"sufficient","synthetic":{"kind":"dt","trees":1,"depth":2,"features":2,"seed":0},"timeout_ms":0}]"#;
    assert!(Manifest::parse(zero, base).is_err());
}

#[test]
fn bench_rows_keep_manifest_order_and_record_errors() {
    let text = r#"[
        {"name":"a","synthetic":{"kind":"dt","trees":1,"depth":4,"features":5,"seed":3},"kind":"sufficient","mode":"all"},
        {"name":"b","synthetic":{"kind":"dt","trees":1,"depth":4,"features":5,"seed":3},"kind":"majority"},
        {"name":"c","model":"missing.json","instance":"missing.json","kind":"sufficient"},
        {"name":"d","synthetic":{"kind":"bt","trees":4,"depth":3,"features":5,"seed":3},"kind":"tree-specific"}
    ]"#;
    let manifest = Manifest::parse(text, Path::new("/nonexistent")).unwrap();
    let cfg = BenchConfig {
        timeout: Duration::from_secs(30),
        seed: None,
        timing: false,
        jobs: 3,
    };
    let first = run_bench(&manifest, &cfg).unwrap();
    let names: Vec<&str> = first.rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["a", "b", "c", "d"]);
    let statuses: Vec<Status> = first.rows.iter().map(|r| r.status).collect();
    assert_eq!(statuses, [Status::Ok, Status::Error, Status::Error, Status::Ok]);
    assert!(first.rows[1].error.as_deref().unwrap().contains("not applicable"));
    assert_eq!(first.rows[1].model_kind, Some(ModelKind::Dt));
    assert_eq!(first.rows[2].model_kind, None);
    let second = run_bench(&manifest, &BenchConfig { jobs: 1, ..cfg }).unwrap();
    assert_eq!(first.to_json(), second.to_json());
}
