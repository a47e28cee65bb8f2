//! Batch runs over a JSON manifest with per-group completion rates and
//! average explanation counts (#N) and lengths (#L).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use treexp_core::gen::{synthetic_model, Generator, Shape};
use treexp_core::model::load_model_file;
use treexp_core::{Instance, Kind, Model, ModelKind};

use crate::report::{run, RunConfig, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    One,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Synthetic {
    pub kind: ModelKind,
    pub trees: usize,
    pub depth: usize,
    pub features: usize,
    pub seed: u64,
}

impl Synthetic {
    fn shape(&self) -> Shape {
        Shape::synthetic(self.kind, self.trees, self.depth, self.features)
    }
}

/// One manifest entry. Exactly one of `model` and `synthetic` is given.
/// Synthetic rows draw their instance from `instance_seed` (default: the
/// model seed plus one) unless `instance` names a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<Synthetic>,
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub instance_seed: Option<u64>,
    pub kind: Kind,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_mode() -> Mode {
    Mode::One
}

pub struct Manifest {
    pub rows: Vec<Row>,
    base: PathBuf,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let rows: Vec<Row> = serde_json::from_str(text).context("malformed bench manifest")?;
        for (i, row) in rows.iter().enumerate() {
            match (&row.model, &row.synthetic) {
                (Some(_), Some(_)) | (None, None) => {
                    bail!(
                        "manifest row {}: give exactly one of \"model\" and \"synthetic\"",
                        i + 1
                    )
                }
                (Some(_), None) if row.instance.is_none() => {
                    bail!("manifest row {}: \"instance\" is required with \"model\"", i + 1)
                }
                _ => {}
            }
            if row.timeout_ms == Some(0) {
                bail!("manifest row {}: timeout_ms must be positive", i + 1);
            }
        }
        Ok(Self {
            rows,
            base: base.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn inputs(&self, row: &Row) -> Result<(Model, Instance)> {
        let model = match (&row.model, &row.synthetic) {
            (Some(path), _) => load_model_file(&self.resolve(path))?,
            (None, Some(s)) => synthetic_model(s.kind, s.trees, s.depth, s.features, s.seed),
            (None, None) => unreachable!("checked when parsing"),
        };
        let instance = match (&row.instance, &row.synthetic) {
            (Some(path), _) => Instance::load(&self.resolve(path))?,
            (None, Some(s)) => Generator::new(row.instance_seed.unwrap_or(s.seed.wrapping_add(1))).instance(&s.shape()),
            (None, None) => unreachable!("checked when parsing"),
        };
        Ok((model, instance))
    }
}

/// Defaults applied to rows that do not set their own.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub timeout: Duration,
    pub seed: Option<u64>,
    pub timing: bool,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    TimedOut,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub name: String,
    pub kind: Kind,
    pub mode: Mode,
    pub model_kind: Option<ModelKind>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<RunReport>,
}

impl RowResult {
    fn completed(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Aggregate over rows sharing kind, model kind and mode. `avg_count` and
/// `avg_length` cover completed rows only and are absent when none completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: Kind,
    pub model_kind: Option<ModelKind>,
    pub mode: Mode,
    pub rows: usize,
    pub completed: usize,
    pub completion_pct: f64,
    pub avg_count: Option<f64>,
    pub avg_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<RowResult>,
    pub summary: Vec<Summary>,
}

fn run_row(manifest: &Manifest, index: usize, row: &Row, config: &BenchConfig) -> RowResult {
    let name = row.name.clone().unwrap_or_else(|| format!("row{}", index + 1));
    let mut result = RowResult {
        name,
        kind: row.kind,
        mode: row.mode,
        model_kind: None,
        status: Status::Error,
        error: None,
        report: None,
    };
    let (model, instance) = match manifest.inputs(row) {
        Ok(inputs) => inputs,
        Err(e) => {
            result.error = Some(format!("{e:#}"));
            return result;
        }
    };
    result.model_kind = Some(model.kind());
    let run_config = RunConfig {
        kind: row.kind,
        enumerate: row.mode == Mode::All,
        timeout: row.timeout_ms.map_or(config.timeout, Duration::from_millis),
        seed: row.seed.or(config.seed),
        timing: config.timing,
    };
    match run(&model, &instance, &run_config) {
        Ok(report) => {
            result.status = if report.timed_out { Status::TimedOut } else { Status::Ok };
            result.report = Some(report);
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn summarize(rows: &[RowResult]) -> Vec<Summary> {
    let mut groups: BTreeMap<(String, String, Mode), Vec<&RowResult>> = BTreeMap::new();
    for r in rows {
        let model = r.model_kind.map(|m| m.to_string()).unwrap_or_default();
        groups.entry((r.kind.to_string(), model, r.mode)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|members| {
            let done: Vec<&RunReport> = members
                .iter()
                .filter(|r| r.completed())
                .filter_map(|r| r.report.as_ref())
                .collect();
            let counts: Vec<f64> = done.iter().map(|r| r.count as f64).collect();
            let lengths: Vec<f64> = done.iter().filter(|r| r.count > 0).map(|r| r.avg_length).collect();
            Summary {
                kind: members[0].kind,
                model_kind: members[0].model_kind,
                mode: members[0].mode,
                rows: members.len(),
                completed: done.len(),
                completion_pct: 100.0 * done.len() as f64 / members.len() as f64,
                avg_count: mean(&counts),
                avg_length: mean(&lengths),
            }
        })
        .collect()
}

pub fn run_bench(manifest: &Manifest, config: &BenchConfig) -> Result<BenchReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("cannot start worker pool")?;
    let rows: Vec<RowResult> = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .enumerate()
            .map(|(i, row)| run_row(manifest, i, row, config))
            .collect()
    });
    let summary = summarize(&rows);
    Ok(BenchReport { rows, summary })
}

fn opt(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_owned(), |v| format!("{v:.2}"))
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:<14} {:<4} {:<5} {:<10} {:>6} {:>6} {:>10}",
            "name", "kind", "mode", "model", "status", "#N", "#L", "ms"
        );
        for r in &self.rows {
            let model = r.model_kind.map(|m| m.to_string()).unwrap_or_else(|| "?".to_owned());
            let status = match r.status {
                Status::Ok => "ok",
                Status::TimedOut => "timed-out",
                Status::Error => "error",
            };
            let (n, l, ms) = match &r.report {
                Some(rep) => (
                    rep.count.to_string(),
                    format!("{:.2}", rep.avg_length),
                    rep.elapsed_ms.to_string(),
                ),
                None => ("-".to_owned(), "-".to_owned(), "-".to_owned()),
            };
            let mode = match r.mode {
                Mode::One => "one",
                Mode::All => "all",
            };
            let _ = writeln!(
                out,
                "{:<24} {:<14} {:<4} {:<5} {:<10} {:>6} {:>6} {:>10}",
                r.name,
                r.kind.to_string(),
                mode,
                model,
                status,
                n,
                l,
                ms
            );
            if let Some(e) = &r.error {
                let _ = writeln!(out, "    {e}");
            }
        }
        if !self.summary.is_empty() {
            out.push('\n');
            let _ = writeln!(
                out,
                "{:<14} {:<5} {:<4} {:>5} {:>11} {:>6} {:>6}",
                "kind", "model", "mode", "rows", "completed%", "#N", "#L"
            );
            for s in &self.summary {
                let mode = match s.mode {
                    Mode::One => "one",
                    Mode::All => "all",
                };
                let model = s.model_kind.map(|m| m.to_string()).unwrap_or_else(|| "?".to_owned());
                let _ = writeln!(
                    out,
                    "{:<14} {:<5} {:<4} {:>5} {:>11.1} {:>6} {:>6}",
                    s.kind.to_string(),
                    model,
                    mode,
                    s.rows,
                    s.completion_pct,
                    opt(s.avg_count),
                    opt(s.avg_length)
                );
            }
        }
        out
    }
}
