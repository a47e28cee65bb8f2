//! Explanation engines and their shared vocabulary.

pub mod bt;
pub mod dt;
pub mod rf;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{Budget, Exhausted};
use crate::literals::{compute_thresholds, BoolInstance, Lit, LiteralTable, Thresholds};
use crate::model::{Class, Instance, Model, ModelError, ModelKind, Prediction};
use crate::traversal::{BoolTree, LeafPath};

/// Explanation family requested by a user, independent of the model kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sufficient,
    Contrastive,
    Majority,
    TreeSpecific,
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sufficient" => Ok(Kind::Sufficient),
            "contrastive" => Ok(Kind::Contrastive),
            "majority" => Ok(Kind::Majority),
            "tree-specific" => Ok(Kind::TreeSpecific),
            other => Err(format!("unknown explanation kind {other:?}")),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Sufficient => "sufficient",
            Kind::Contrastive => "contrastive",
            Kind::Majority => "majority",
            Kind::TreeSpecific => "tree-specific",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanationKind {
    DtSufficient,
    DtContrastive,
    RfSufficient,
    RfContrastive,
    RfMajority,
    BtTreeSpecific,
}

impl ExplanationKind {
    pub const ALL: [ExplanationKind; 6] = [
        ExplanationKind::DtSufficient,
        ExplanationKind::DtContrastive,
        ExplanationKind::RfSufficient,
        ExplanationKind::RfContrastive,
        ExplanationKind::RfMajority,
        ExplanationKind::BtTreeSpecific,
    ];

    /// Resolves a user-facing kind against a model kind.
    pub fn resolve(kind: Kind, model: ModelKind) -> Result<Self, ExplainError> {
        use ExplanationKind::*;
        match (model, kind) {
            (ModelKind::Dt, Kind::Sufficient) => Ok(DtSufficient),
            (ModelKind::Dt, Kind::Contrastive) => Ok(DtContrastive),
            (ModelKind::Rf, Kind::Sufficient) => Ok(RfSufficient),
            (ModelKind::Rf, Kind::Contrastive) => Ok(RfContrastive),
            (ModelKind::Rf, Kind::Majority) => Ok(RfMajority),
            (ModelKind::Bt, Kind::TreeSpecific) => Ok(BtTreeSpecific),
            (model, kind) => Err(ExplainError::NotApplicable { kind, model }),
        }
    }

    pub fn model_kind(self) -> ModelKind {
        match self {
            Self::DtSufficient | Self::DtContrastive => ModelKind::Dt,
            Self::RfSufficient | Self::RfContrastive | Self::RfMajority => ModelKind::Rf,
            Self::BtTreeSpecific => ModelKind::Bt,
        }
    }

    pub fn kind(self) -> Kind {
        match self {
            Self::DtSufficient | Self::RfSufficient => Kind::Sufficient,
            Self::DtContrastive | Self::RfContrastive => Kind::Contrastive,
            Self::RfMajority => Kind::Majority,
            Self::BtTreeSpecific => Kind::TreeSpecific,
        }
    }

    pub fn supports_enumeration(self) -> bool {
        !matches!(self, Self::RfSufficient | Self::BtTreeSpecific)
    }

    pub fn is_contrastive(self) -> bool {
        matches!(self, Self::DtContrastive | Self::RfContrastive)
    }
}

impl fmt::Display for ExplanationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("kind serializes");
        f.write_str(s.as_str().expect("kind is a string"))
    }
}

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("explanation kind {kind} is not applicable to {model} models")]
    NotApplicable { kind: Kind, model: ModelKind },
    #[error("enumeration is not supported for {0} explanations")]
    EnumerationUnsupported(ExplanationKind),
    #[error("no contrastive explanation exists: no change of literals alters the prediction")]
    ContrastiveImpossible,
    #[error("no majority explanation exists: fewer than a strict majority of trees agree with the prediction")]
    MajorityImpossible,
    #[error("timed out")]
    TimedOut,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<Exhausted> for ExplainError {
    fn from(_: Exhausted) -> Self {
        ExplainError::TimedOut
    }
}

/// A set of instance literals with its rendered conditions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Explanation {
    pub kind: ExplanationKind,
    /// Sorted literal ids.
    pub literals: Vec<Lit>,
    /// One rendered test per literal, with the instance-side polarity.
    #[serde(default)]
    pub tests: Vec<String>,
}

impl Explanation {
    pub fn new(kind: ExplanationKind, mut literals: Vec<Lit>, query: &Query) -> Self {
        literals.sort_unstable();
        literals.dedup();
        let tests = literals.iter().map(|l| query.table.render(*l, &query.bi)).collect();
        Self { kind, literals, tests }
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }
}

/// Result of an enumeration; `complete` is false when the budget ran out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enumeration {
    pub explanations: Vec<Explanation>,
    pub complete: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub budget: Budget,
    /// Shuffles the literal order of greedy searches when set.
    pub seed: Option<u64>,
}

/// A model paired with one booleanized instance.
#[derive(Debug, Clone)]
pub struct Query<'m> {
    pub model: &'m Model,
    pub table: LiteralTable,
    pub bi: BoolInstance,
    pub prediction: Prediction,
}

impl<'m> Query<'m> {
    pub fn new(model: &'m Model, instance: &Instance) -> Result<Self, ModelError> {
        let prediction = model.predict(instance)?;
        let table = LiteralTable::build(model);
        let bi = table.booleanize(instance);
        Ok(Self {
            model,
            table,
            bi,
            prediction,
        })
    }

    pub fn class(&self) -> Class {
        self.prediction.class
    }

    pub fn n_literals(&self) -> usize {
        self.table.len()
    }

    pub fn n_trees(&self) -> usize {
        self.model.trees().len()
    }

    pub fn tree(&self, index: usize) -> BoolTree<'_> {
        BoolTree::new(self.model, &self.table, index)
    }

    pub fn thresholds(&self) -> Thresholds {
        compute_thresholds(self.n_trees(), self.class()).expect("models have at least one tree")
    }

    /// Consistent paths of `tree` ending in a class leaf other than `class`.
    pub fn paths_avoiding(&self, tree: usize, class: Class) -> Vec<LeafPath> {
        let bt = self.tree(tree);
        bt.leaf_paths()
            .into_iter()
            .filter(|p| !matches!(bt.tree().node(p.leaf), crate::model::Node::Class(c) if *c == class))
            .collect()
    }

    /// For every consistent path to a leaf of another class, the literals it
    /// needs changed. A term is an implicant of the tree's predicted class
    /// exactly when it hits every member.
    pub fn change_family(&self, tree: usize, class: Class) -> Vec<Vec<Lit>> {
        let mut family: Vec<Vec<Lit>> = self
            .paths_avoiding(tree, class)
            .iter()
            .map(|p| p.disagreements(&self.bi))
            .collect();
        family.sort();
        family.dedup();
        family
    }

    pub fn explanation(&self, kind: ExplanationKind, literals: Vec<Lit>) -> Explanation {
        Explanation::new(kind, literals, self)
    }

    /// Literal ids not in `set`.
    pub fn complement(&self, set: &[Lit]) -> Vec<Lit> {
        let mut member = vec![false; self.n_literals() + 1];
        for l in set {
            member[*l] = true;
        }
        self.table.ids().filter(|l| !member[*l]).collect()
    }
}

/// `canonical` unchanged without a seed, otherwise a seeded shuffle of it.
pub(crate) fn search_order(mut canonical: Vec<Lit>, seed: Option<u64>) -> Vec<Lit> {
    if let Some(seed) = seed {
        canonical.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    canonical
}

/// Drops every set that strictly contains another member; output is sorted.
pub(crate) fn minimal_sets(mut sets: Vec<Vec<Lit>>) -> Vec<Vec<Lit>> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    let mut kept: Vec<Vec<Lit>> = Vec::new();
    for s in sets {
        if !kept.iter().any(|k| k.iter().all(|l| s.contains(l))) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

/// Computes one explanation of the given kind.
pub fn explain_one(query: &Query, kind: ExplanationKind, opts: &Options) -> Result<Explanation, ExplainError> {
    check_applicable(query, kind)?;
    match kind {
        ExplanationKind::DtSufficient => dt::sufficient_one(query, opts),
        ExplanationKind::DtContrastive => dt::contrastive_one(query, opts),
        ExplanationKind::RfSufficient => rf::sufficient_one(query, opts),
        ExplanationKind::RfContrastive => rf::contrastive_one(query, opts),
        ExplanationKind::RfMajority => rf::majority_one(query, opts),
        ExplanationKind::BtTreeSpecific => bt::tree_specific_one(query, opts),
    }
}

/// Enumerates all explanations of the given kind. A timeout yields the
/// explanations found so far with `complete = false`.
pub fn explain_all(query: &Query, kind: ExplanationKind, opts: &Options) -> Result<Enumeration, ExplainError> {
    check_applicable(query, kind)?;
    let mut found = Vec::new();
    let outcome = match kind {
        ExplanationKind::DtSufficient => dt::sufficient_all(query, &opts.budget, &mut found),
        ExplanationKind::DtContrastive => dt::contrastive_all(query, &opts.budget, &mut found),
        ExplanationKind::RfContrastive => rf::contrastive_all(query, &opts.budget, &mut found),
        ExplanationKind::RfMajority => rf::majority_all(query, &opts.budget, &mut found),
        ExplanationKind::RfSufficient | ExplanationKind::BtTreeSpecific => {
            return Err(ExplainError::EnumerationUnsupported(kind))
        }
    };
    let complete = match outcome {
        Ok(()) => true,
        Err(ExplainError::TimedOut) => false,
        Err(e) => return Err(e),
    };
    found.sort();
    found.dedup();
    Ok(Enumeration {
        explanations: found.into_iter().map(|l| query.explanation(kind, l)).collect(),
        complete,
    })
}

fn check_applicable(query: &Query, kind: ExplanationKind) -> Result<(), ExplainError> {
    if kind.model_kind() != query.model.kind() {
        return Err(ExplainError::NotApplicable {
            kind: kind.kind(),
            model: query.model.kind(),
        });
    }
    Ok(())
}
