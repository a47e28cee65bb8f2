//! Single decision trees.
//!
//! Both kinds reduce to the family of literal sets that each path to a leaf
//! of the other class would need changed. Sufficient explanations are its
//! minimal hitting sets and contrastive explanations are its minimal members.

use crate::budget::Budget;
use crate::hitting::minimal_hitting_sets;
use crate::literals::Lit;
use crate::traversal::{ClassSet, Mode, ModeMap};

use super::{minimal_sets, search_order, ExplainError, Explanation, ExplanationKind, Options, Query};

/// Greedily frees literals, keeping each one that leaves the tree's class
/// fixed; the explanation is whatever stays fixed.
pub fn sufficient_one(q: &Query, opts: &Options) -> Result<Explanation, ExplainError> {
    let n = q.n_literals();
    let tree = q.tree(0);
    let target = ClassSet::only(q.class());
    let mut modes = ModeMap::all_fixed(n);
    for lit in search_order(q.table.ids().collect(), opts.seed) {
        opts.budget.check()?;
        modes.set(lit, Mode::Free);
        if tree.class_set(&q.bi, &modes).expect("dt has class leaves") != target {
            modes.set(lit, Mode::Fixed);
        }
    }
    let fixed = modes.with_mode(Mode::Fixed);
    Ok(q.explanation(ExplanationKind::DtSufficient, fixed))
}

/// Picks the path to an opposite leaf needing the fewest changes, breaking
/// ties by path depth and then leaf id.
pub fn contrastive_one(q: &Query, opts: &Options) -> Result<Explanation, ExplainError> {
    opts.budget.check()?;
    let best = q
        .paths_avoiding(0, q.class())
        .into_iter()
        .map(|p| (p.disagreements(&q.bi), p.depth, p.leaf))
        .min_by(|a, b| (a.0.len(), a.1, a.2).cmp(&(b.0.len(), b.1, b.2)));
    match best {
        Some((lits, _, _)) => Ok(q.explanation(ExplanationKind::DtContrastive, lits)),
        None => Err(ExplainError::ContrastiveImpossible),
    }
}

pub fn sufficient_all(q: &Query, budget: &Budget, found: &mut Vec<Vec<Lit>>) -> Result<(), ExplainError> {
    let family = q.change_family(0, q.class());
    minimal_hitting_sets(&family, budget, |s| found.push(s))?;
    Ok(())
}

pub fn contrastive_all(q: &Query, budget: &Budget, found: &mut Vec<Vec<Lit>>) -> Result<(), ExplainError> {
    budget.check()?;
    let family = q.change_family(0, q.class());
    if family.is_empty() {
        return Err(ExplainError::ContrastiveImpossible);
    }
    found.extend(minimal_sets(family));
    Ok(())
}
