//! Formal explanations for tree-based classifiers.
//!
//! The crate turns a tree model and an instance into Boolean literals and
//! computes subset-minimal explanations over them:
//!
//! | model | sufficient | contrastive | majority | tree-specific |
//! |-------|------------|-------------|----------|---------------|
//! | `dt`  | one, all   | one, all    |          |               |
//! | `rf`  | one        | one, all    | one, all |               |
//! | `bt`  |            |             |          | one           |
//!
//! Every result can be cross-checked with the exhaustive [`oracle`], and
//! [`asp`] renders the same problems as answer-set programs.

pub mod asp;
pub mod budget;
pub mod explain;
pub mod gen;
pub mod hitting;
pub mod literals;
pub mod model;
pub mod oracle;
pub mod traversal;

pub use budget::Budget;
pub use explain::{
    explain_all, explain_one, Enumeration, ExplainError, Explanation, ExplanationKind, Kind, Options, Query,
};
pub use literals::{compute_thresholds, BoolInstance, Lit, LiteralTable, Thresholds};
pub use model::{load_model, Instance, Model, ModelError, ModelKind, Prediction};
pub use oracle::{oracle_check, oracle_enumerate, Verdict, Witness, DEFAULT_ORACLE_BOUND};
