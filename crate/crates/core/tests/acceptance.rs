//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use treexp_core::asp::{export_facts, normalize_whitespace, parse_facts, skeleton_from_facts, skeleton_of};
use treexp_core::explain::bt::bt_weight_summary;
use treexp_core::gen::{synthetic_model, Generator, Shape};
use treexp_core::model::{majority_class, Class};
use treexp_core::oracle::Oracle;
use treexp_core::traversal::{forest_vote_under_flips, BoolTree, ModeMap};
use treexp_core::{
    compute_thresholds, explain_all, explain_one, Budget, ExplainError, ExplanationKind, Lit, ModelKind, Options, Query,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_examples() -> Outcome {
    let start = Instant::now();
    let opts = Options::default();
    let cases: [(&str, ExplanationKind, Vec<Lit>); 6] = [
        ("dt_example", ExplanationKind::DtSufficient, vec![1, 2]),
        ("dt_example", ExplanationKind::DtContrastive, vec![2]),
        ("rf_example", ExplanationKind::RfSufficient, vec![3, 6]),
        ("rf_example", ExplanationKind::RfContrastive, vec![1, 3]),
        ("rf_example", ExplanationKind::RfMajority, vec![1, 2, 6]),
        ("bt_example", ExplanationKind::BtTreeSpecific, vec![5, 6]),
    ];
    for (fixture, kind, expected) in cases {
        let (model, x) = common::fixture(fixture);
        let q = Query::new(&model, &x).map_err(|e| e.to_string())?;
        let got = explain_one(&q, kind, &opts).map_err(|e| format!("{kind}: {e}"))?;
        ensure(got.literals == expected, || {
            format!("{kind} on {fixture}: got {:?}, expected {expected:?}", got.literals)
        })?;
    }
    let (model, x) = common::rf_example();
    let q = Query::new(&model, &x).unwrap();
    let freed = q.complement(&[1, 2, 6]);
    ensure(freed == [3, 4, 5], || format!("freed set {freed:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("6/6 exact in {elapsed:.2?}"))
}

fn kinds_for(kind: ModelKind) -> &'static [ExplanationKind] {
    use ExplanationKind::*;
    match kind {
        ModelKind::Dt => &[DtSufficient, DtContrastive],
        ModelKind::Rf => &[RfSufficient, RfContrastive, RfMajority],
        ModelKind::Bt => &[BtTreeSpecific],
    }
}

/// Checks every engine answer for one query against the oracle.
fn agree_with_oracle(q: &Query, seed: u64) -> Result<usize, String> {
    let oracle = Oracle::new(q, 16).map_err(|e| e.to_string())?;
    let mut checks = 0;
    for &kind in kinds_for(q.model.kind()) {
        let truth = oracle.enumerate(kind).unwrap();
        for opts in [
            Options::default(),
            Options {
                seed: Some(seed),
                ..Options::default()
            },
        ] {
            match explain_one(q, kind, &opts) {
                Ok(e) => {
                    let v = oracle.check(&e).unwrap();
                    ensure(v.valid && v.minimal, || format!("{kind} {:?}: {v:?}", e.literals))?;
                    ensure(truth.contains(&e.literals), || {
                        format!("{kind} {:?} not enumerated", e.literals)
                    })?;
                }
                Err(ExplainError::ContrastiveImpossible | ExplainError::MajorityImpossible) => {
                    ensure(truth.is_empty(), || {
                        format!("{kind}: engine found none, oracle {truth:?}")
                    })?;
                }
                Err(e) => return Err(format!("{kind}: {e}")),
            }
            checks += 1;
        }
        if kind.supports_enumeration() {
            let got = match explain_all(q, kind, &Options::default()) {
                Ok(en) => {
                    ensure(en.complete, || format!("{kind}: incomplete enumeration"))?;
                    en.explanations.into_iter().map(|e| e.literals).collect()
                }
                Err(ExplainError::ContrastiveImpossible | ExplainError::MajorityImpossible) => Vec::new(),
                Err(e) => return Err(format!("{kind}: {e}")),
            };
            ensure(got == truth, || format!("{kind}: engine {got:?} vs oracle {truth:?}"))?;
            checks += 1;
        }
    }
    Ok(checks)
}

fn oracle_equivalence() -> Outcome {
    let mut checks = 0;
    let mut models = 0;
    for kind in [ModelKind::Dt, ModelKind::Rf, ModelKind::Bt] {
        for seed in 0..200u64 {
            let mut gen = Generator::new(seed * 3 + kind as u64);
            let mut shape = Shape::small(kind);
            if kind != ModelKind::Dt {
                shape.trees = gen.rng().gen_range(1..=3);
            }
            let model = gen.model_with_limits(&shape, 8);
            let x = gen.instance(&shape);
            let q = Query::new(&model, &x).unwrap();
            checks += agree_with_oracle(&q, seed).map_err(|e| format!("{kind} seed {seed}: {e}"))?;
            models += 1;
        }
    }
    Ok(format!("{models} models, {checks} engine results match"))
}

fn threshold_property() -> Outcome {
    let mut cases = 0;
    for m in 1..=7usize {
        for class in [0, 1] as [Class; 2] {
            let th = compute_thresholds(m, class).map_err(|e| e.to_string())?;
            for vt in 0..=m {
                let agreeing = m - vt;
                let ones = if class == 1 { agreeing } else { vt };
                let flips = majority_class(ones, m) != class;
                ensure((vt > th.con) == flips, || {
                    format!("m={m} class={class} vt={vt}: con={}", th.con)
                })?;
                ensure((vt > th.suf) == flips, || {
                    format!("m={m} class={class} vt={vt}: suf={}", th.suf)
                })?;
                let kept = agreeing > m / 2;
                ensure((vt < th.majo) == kept, || {
                    format!("m={m} class={class} vt={vt}: majo={}", th.majo)
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} vote counts for m in 1..=7, both classes"))
}

fn asp_golden() -> Outcome {
    let cases = [
        ("dt_example", ExplanationKind::DtSufficient, "dt_example.lp"),
        ("dt_example", ExplanationKind::DtContrastive, "dt_example.lp"),
        ("rf_example", ExplanationKind::RfContrastive, "rf_example.lp"),
        ("rf_example", ExplanationKind::RfMajority, "rf_example.lp"),
        ("rf_example", ExplanationKind::RfSufficient, "rf_example_sufficient.lp"),
        ("bt_example", ExplanationKind::BtTreeSpecific, "bt_example.lp"),
    ];
    for (fixture, kind, golden) in cases {
        let (model, x) = common::fixture(fixture);
        let q = Query::new(&model, &x).unwrap();
        let facts = export_facts(&q, kind).map_err(|e| e.to_string())?;
        let reference = std::fs::read_to_string(common::testdata(&format!("golden/{golden}"))).unwrap();
        ensure(normalize_whitespace(&facts) == normalize_whitespace(&reference), || {
            format!("{kind} export differs from {golden}:\n{facts}")
        })?;
        let parsed = parse_facts(&facts).map_err(|e| e.to_string())?;
        let skeleton = skeleton_from_facts(&parsed, model.kind() != ModelKind::Dt).map_err(|e| e.to_string())?;
        ensure(skeleton == skeleton_of(&q), || format!("{kind}: parse-back mismatch"))?;
    }
    Ok("6 exports match 4 reference files; parse-back reproduces structure".into())
}

fn performance_proxy() -> Outcome {
    let model = synthetic_model(ModelKind::Rf, 100, 6, 20, 2024);
    let mut gen = Generator::new(99);
    let shape = Shape::synthetic(ModelKind::Rf, 100, 6, 20);
    let x = gen.instance(&shape);
    let q = Query::new(&model, &x).unwrap();
    let budget = Budget::with_timeout(Duration::from_secs(100));
    let start = Instant::now();
    let e = explain_one(&q, ExplanationKind::RfContrastive, &Options { budget, seed: None })
        .map_err(|e| format!("after {:.2?}: {e}", start.elapsed()))?;
    let elapsed = start.elapsed();
    let vote = forest_vote_under_flips(&model, &q.table, &q.bi, &e.literals);
    ensure(vote.class != q.class(), || {
        "returned flips do not change the forest".into()
    })?;
    ensure(elapsed < Duration::from_secs(100), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} literals, explanation of {} literals in {elapsed:.2?}",
        q.n_literals(),
        e.len()
    ))
}

fn random_subset(rng: &mut impl Rng, n: usize) -> Vec<Lit> {
    (1..=n).filter(|_| rng.gen_bool(0.4)).collect()
}

fn invariants() -> Outcome {
    let mut gen = Generator::new(4242);
    let kinds = [ModelKind::Rf, ModelKind::Bt, ModelKind::Dt];
    let mut majority_checked = 0;
    for i in 0..1000usize {
        let kind = kinds[i % 3];
        let mut shape = Shape::small(kind);
        shape.depth = 4;
        if kind != ModelKind::Dt {
            shape.trees = gen.rng().gen_range(1..=5);
        }
        let model = gen.model_with_limits(&shape, 10);
        let x = gen.instance(&shape);
        let q = Query::new(&model, &x).unwrap();
        let n = q.n_literals();
        let small = random_subset(gen.rng(), n);
        let extra = random_subset(gen.rng(), n);
        let large: Vec<Lit> = (1..=n).filter(|l| small.contains(l) || extra.contains(l)).collect();
        let flips = random_subset(gen.rng(), n);
        for t in 0..q.n_trees() {
            let bt = BoolTree::new(&model, &q.table, t);
            // monotonicity of the freed set
            let a = bt.reachable_leaves(&q.bi, &ModeMap::freeing(n, small.iter().copied()));
            let b = bt.reachable_leaves(&q.bi, &ModeMap::freeing(n, large.iter().copied()));
            ensure(a.iter().all(|l| b.contains(l)), || {
                format!("query {i} tree {t}: {a:?} not in {b:?}")
            })?;
            if kind == ModelKind::Bt {
                let ra = bt
                    .weight_range(&q.bi, &ModeMap::freeing(n, small.iter().copied()))
                    .unwrap();
                let rb = bt
                    .weight_range(&q.bi, &ModeMap::freeing(n, large.iter().copied()))
                    .unwrap();
                ensure(rb.worst <= ra.worst && rb.best >= ra.best, || {
                    format!("query {i}: weight ranges")
                })?;
            }
            // all-fixed traversal agrees with direct prediction
            let fixed = bt.reachable_leaves(&q.bi, &ModeMap::all_fixed(n));
            ensure(fixed == [model.tree(t).leaf_for(x.values())], || {
                format!("query {i}: fixed walk")
            })?;
            // flip involution
            let mut modes = ModeMap::flipping(n, flips.iter().copied());
            for l in &flips {
                modes.toggle(*l);
                modes.toggle(*l);
            }
            let once = bt.reachable_leaves(&q.bi, &ModeMap::flipping(n, flips.iter().copied()));
            ensure(bt.reachable_leaves(&q.bi, &modes) == once, || {
                format!("query {i}: double toggle")
            })?;
            for l in &flips {
                modes.toggle(*l);
            }
            ensure(bt.reachable_leaves(&q.bi, &modes) == fixed, || {
                format!("query {i}: involution")
            })?;
        }
        match kind {
            ModelKind::Rf => {
                if let Ok(e) = explain_one(&q, ExplanationKind::RfMajority, &Options::default()) {
                    let oracle = Oracle::new(&q, 16).unwrap();
                    let as_sufficient = q.explanation(ExplanationKind::RfSufficient, e.literals.clone());
                    let v = oracle.check(&as_sufficient).unwrap();
                    ensure(v.valid, || {
                        format!("query {i}: majority {:?} is no implicant", e.literals)
                    })?;
                    majority_checked += 1;
                }
            }
            ModelKind::Bt => {
                let lo = bt_weight_summary(&q, &small);
                let hi = bt_weight_summary(&q, &large);
                ensure(hi.worst_sum >= lo.worst_sum && hi.best_sum <= lo.best_sum, || {
                    format!("query {i}: fixing more moved sums the wrong way")
                })?;
            }
            ModelKind::Dt => {}
        }
    }
    Ok(format!(
        "1000 queries, {majority_checked} majority explanations checked as implicants"
    ))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 6] = [
        ("golden example suite", golden_examples),
        ("oracle equivalence property suite", oracle_equivalence),
        ("threshold property suite", threshold_property),
        ("ASP export golden files", asp_golden),
        (
            "performance proxy: 100-tree depth-6 forest, one contrastive explanation",
            performance_proxy,
        ),
        ("invariant suite", invariants),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
