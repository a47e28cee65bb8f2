use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use treexp_core::oracle::Oracle;
use treexp_core::{Explanation, ExplanationKind, Kind, Lit, Query, Verdict, Witness};

use crate::report::RunReport;

/// Claims read from a file: a single explanation, every explanation of a
/// run report, or a bare literal list whose kind comes from the caller.
pub fn parse_claims(text: &str, kind: Option<Kind>, query: &Query) -> Result<Vec<(ExplanationKind, Vec<Lit>)>> {
    let value: Value = serde_json::from_str(text).context("explanation file is not valid JSON")?;
    match value {
        Value::Array(_) => {
            let literals: Vec<Lit> = serde_json::from_value(value).context("expected an array of literal ids")?;
            let Some(kind) = kind else {
                bail!("a bare literal list needs --kind");
            };
            Ok(vec![(ExplanationKind::resolve(kind, query.model.kind())?, literals)])
        }
        Value::Object(ref map) if map.contains_key("explanations") => {
            let report: RunReport = serde_json::from_value(value).context("malformed run report")?;
            Ok(report.explanations.into_iter().map(|e| (e.kind, e.literals)).collect())
        }
        _ => {
            let e: Explanation = serde_json::from_value(value).context("malformed explanation")?;
            Ok(vec![(e.kind, e.literals)])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checked {
    pub kind: ExplanationKind,
    pub literals: Vec<Lit>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub results: Vec<Checked>,
    pub all_valid: bool,
    pub all_minimal: bool,
}

pub fn verify(query: &Query, claims: Vec<(ExplanationKind, Vec<Lit>)>, bound: usize) -> Result<VerifyReport> {
    let oracle = Oracle::new(query, bound)?;
    let mut results = Vec::with_capacity(claims.len());
    for (kind, mut literals) in claims {
        literals.sort_unstable();
        literals.dedup();
        let explanation = Explanation {
            kind,
            literals: literals.clone(),
            tests: Vec::new(),
        };
        let verdict = oracle.check(&explanation)?;
        results.push(Checked {
            kind,
            literals,
            verdict,
        });
    }
    Ok(VerifyReport {
        all_valid: results.iter().all(|c| c.verdict.valid),
        all_minimal: results.iter().all(|c| c.verdict.valid && c.verdict.minimal),
        results,
    })
}

fn describe(witness: &Witness) -> String {
    match witness {
        Witness::Completion { flips, class } => format!("changing {flips:?} yields class {class}"),
        Witness::AllCompletionsAgree => "no change within the set alters the prediction".to_owned(),
        Witness::UnpinnedTrees { pinned, needed } => format!("only {pinned} trees pinned, {needed} needed"),
        Witness::WeightBound { sum } => format!("guaranteed weight sum is {sum}"),
        Witness::Deletion { literal } => format!("still holds without literal {literal}"),
    }
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.results {
            let v = &c.verdict;
            let status = match (v.valid, v.minimal) {
                (true, true) => "valid, minimal",
                (true, false) => "valid, not minimal",
                (false, _) => "invalid",
            };
            let _ = write!(out, "{} {:?}: {status}", c.kind, c.literals);
            if let Some(w) = &v.witness {
                let _ = write!(out, " ({})", describe(w));
            }
            out.push('\n');
        }
        out
    }
}
