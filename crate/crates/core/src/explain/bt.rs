//! Boosted trees: tree-specific explanations from per-tree weight extremes.

use serde::{Deserialize, Serialize};

use crate::literals::Lit;
use crate::model::Class;
use crate::traversal::{ModeMap, WeightRange};

use super::{search_order, ExplainError, Explanation, ExplanationKind, Options, Query};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub per_tree: Vec<WeightRange>,
    pub worst_sum: i64,
    pub best_sum: i64,
}

/// Weight extremes with `fixed` at their instance values and every other
/// literal free.
pub fn bt_weight_summary(q: &Query, fixed: &[Lit]) -> WeightSummary {
    let modes = ModeMap::fixing(q.n_literals(), fixed.iter().copied());
    let per_tree: Vec<WeightRange> = (0..q.n_trees())
        .map(|t| q.tree(t).weight_range(&q.bi, &modes).expect("bt has weight leaves"))
        .collect();
    WeightSummary {
        worst_sum: per_tree.iter().map(|r| r.worst).sum(),
        best_sum: per_tree.iter().map(|r| r.best).sum(),
        per_tree,
    }
}

impl WeightSummary {
    /// Whether every completion keeps `class`.
    pub fn guarantees(&self, class: Class) -> bool {
        if class == 1 {
            self.worst_sum > 0
        } else {
            self.best_sum <= 0
        }
    }
}

/// Starts from the full instance term and drops literals in ascending id
/// order whenever the remaining term still guarantees the prediction.
pub fn tree_specific_one(q: &Query, opts: &Options) -> Result<Explanation, ExplainError> {
    let class = q.class();
    let mut fixed: Vec<Lit> = q.table.ids().collect();
    for lit in search_order(q.table.ids().collect(), opts.seed) {
        opts.budget.check()?;
        let without: Vec<Lit> = fixed.iter().copied().filter(|l| *l != lit).collect();
        if bt_weight_summary(q, &without).guarantees(class) {
            fixed = without;
        }
    }
    Ok(q.explanation(ExplanationKind::BtTreeSpecific, fixed))
}
