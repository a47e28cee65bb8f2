use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use treexp_core::{
    explain_all, explain_one, Budget, ExplainError, Explanation, ExplanationKind, Instance, Kind, Model, ModelKind,
    Options, Prediction, Query,
};

/// Settings for a single explanation run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: Kind,
    pub enumerate: bool,
    pub timeout: Duration,
    pub seed: Option<u64>,
    /// When false, `elapsed_ms` is reported as 0 so output is reproducible.
    pub timing: bool,
}

/// Outcome of one run, serialized as the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model_kind: ModelKind,
    pub kind: ExplanationKind,
    pub enumerate: bool,
    pub prediction: Prediction,
    pub n_trees: usize,
    pub n_literals: usize,
    pub explanations: Vec<Explanation>,
    pub count: usize,
    pub avg_length: f64,
    /// All requested explanations were produced: one for a single run, the
    /// full set for an enumeration.
    pub complete: bool,
    pub timed_out: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub elapsed_ms: u64,
    pub model_hash: String,
    pub instance_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical model JSON, so formatting differences in the
/// source file do not change it.
pub fn model_hash(model: &Model) -> String {
    sha256_hex(model.to_json().as_bytes())
}

pub fn instance_hash(instance: &Instance) -> String {
    sha256_hex(instance.to_json().as_bytes())
}

/// Runs the explainer selected by `config`. Errors are reserved for
/// requests that cannot run at all; timeouts and the absence of any
/// explanation are reported inside the returned report.
pub fn run(model: &Model, instance: &Instance, config: &RunConfig) -> Result<RunReport, ExplainError> {
    let started = Instant::now();
    let query = Query::new(model, instance)?;
    let kind = ExplanationKind::resolve(config.kind, model.kind())?;
    if config.enumerate && !kind.supports_enumeration() {
        return Err(ExplainError::EnumerationUnsupported(kind));
    }
    let opts = Options {
        budget: Budget::with_timeout(config.timeout),
        seed: config.seed,
    };
    let outcome = if config.enumerate {
        explain_all(&query, kind, &opts).map(|e| (e.explanations, e.complete))
    } else {
        explain_one(&query, kind, &opts).map(|e| (vec![e], true))
    };
    let (explanations, complete, note) = match outcome {
        Ok((found, complete)) => (found, complete, None),
        Err(ExplainError::TimedOut) => (Vec::new(), false, None),
        Err(e @ (ExplainError::ContrastiveImpossible | ExplainError::MajorityImpossible)) => {
            (Vec::new(), true, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let elapsed_ms = if config.timing {
        u64::try_from(started.elapsed().as_millis()).unwrap_or(u64::MAX)
    } else {
        0
    };
    let count = explanations.len();
    let total: usize = explanations.iter().map(Explanation::len).sum();
    Ok(RunReport {
        model_kind: model.kind(),
        kind,
        enumerate: config.enumerate,
        prediction: query.prediction,
        n_trees: model.trees().len(),
        n_literals: query.n_literals(),
        avg_length: if count == 0 { 0.0 } else { total as f64 / count as f64 },
        count,
        explanations,
        complete,
        timed_out: !complete,
        note,
        elapsed_ms,
        model_hash: model_hash(model),
        instance_hash: instance_hash(instance),
    })
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "model: {}, trees: {}, literals: {}, predicted class: {}",
            self.model_kind, self.n_trees, self.n_literals, self.prediction.class
        );
        if let Some(w) = self.prediction.raw_weight {
            let _ = write!(out, " (weight {w})");
        }
        let _ = writeln!(out);
        let mode = if self.enumerate { "all" } else { "one" };
        let _ = writeln!(out, "kind: {} ({mode})", self.kind);
        for (i, e) in self.explanations.iter().enumerate() {
            let _ = writeln!(out, "#{} {:?}", i + 1, e.literals);
            for test in &e.tests {
                let _ = writeln!(out, "    {test}");
            }
        }
        if let Some(note) = &self.note {
            let _ = writeln!(out, "note: {note}");
        }
        let status = match (self.timed_out, self.complete) {
            (true, _) => "timed out",
            (false, true) => "complete",
            (false, false) => "incomplete",
        };
        let _ = writeln!(
            out,
            "{} explanation(s), average length {:.2}, {status}, {} ms",
            self.count, self.avg_length, self.elapsed_ms
        );
        out
    }
}
