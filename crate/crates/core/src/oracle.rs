//! Exhaustive reference checker.
//!
//! Every tree is evaluated directly on each of the `2^n` full assignments
//! (written as the set of literals that differ from the instance). Subset
//! transforms then answer, for every set of freed literals at once, whether
//! some completion reaches another class and what the extreme leaf weights
//! are. Definitions are checked literally against those tables; nothing in
//! here reuses the explainers' search code.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explain::{Explanation, ExplanationKind, Query};
use crate::literals::Lit;
use crate::model::{majority_class, weight_class, Class, ModelKind, Node};

pub const DEFAULT_ORACLE_BOUND: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("model has {literals} literals, above the oracle bound of {bound}")]
    TooLarge { literals: usize, bound: usize },
    #[error("{kind} explanations do not apply to {model} models")]
    NotApplicable { kind: ExplanationKind, model: ModelKind },
    #[error("literal {0} does not exist in this model")]
    UnknownLiteral(Lit),
}

/// Evidence against a claimed explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Witness {
    /// Changing these literals (all outside the explanation) reaches a
    /// different outcome.
    Completion { flips: Vec<Lit>, class: Class },
    /// No change confined to the explanation alters the prediction.
    AllCompletionsAgree,
    /// Fewer trees than a strict majority are guaranteed to agree.
    UnpinnedTrees { pinned: usize, needed: usize },
    /// The guaranteed weight sum does not secure the prediction.
    WeightBound { sum: i64 },
    /// The explanation still holds with this literal dropped.
    Deletion { literal: Lit },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    /// Subset-minimality of the explanation (for sufficient, majority and
    /// tree-specific kinds this is maximality of the freed set).
    pub minimal: bool,
    pub witness: Option<Witness>,
}

type Mask = u32;

/// Brute-force tables for one query.
pub struct Oracle<'a, 'm> {
    q: &'a Query<'m>,
    n: usize,
    /// Per tree, per freed set: some completion leaves the predicted class.
    tree_bad: Vec<Vec<bool>>,
    /// Per freed set: some completion changes the model prediction.
    model_bad: Vec<bool>,
    /// Boosted only: per freed set, summed per-tree minimum and maximum.
    worst: Vec<i64>,
    best: Vec<i64>,
}

fn bit(lit: Lit) -> Mask {
    1 << (lit - 1)
}

fn mask_of(lits: &[Lit]) -> Mask {
    lits.iter().fold(0, |m, l| m | bit(*l))
}

fn lits_of(mask: Mask, n: usize) -> Vec<Lit> {
    (1..=n).filter(|l| mask & bit(*l) != 0).collect()
}

/// Leaf reached by tree `t` when exactly the literals in `flips` are negated.
fn leaf(q: &Query, t: usize, flips: Mask) -> usize {
    let tree = q.model.tree(t);
    let mut id = 0;
    while let Node::Split { left, right, .. } = tree.node(id) {
        let lit = q.table.literal_at(t, id).expect("split has a literal");
        let value = q.bi.value(lit) != (flips & bit(lit) != 0);
        id = if value { *left } else { *right };
    }
    id
}

fn or_zeta(table: &mut [bool], n: usize) {
    for i in 0..n {
        let b = 1usize << i;
        for s in 0..table.len() {
            if s & b != 0 {
                table[s] |= table[s ^ b];
            }
        }
    }
}

fn fold_zeta(table: &mut [i64], n: usize, pick: fn(i64, i64) -> i64) {
    for i in 0..n {
        let b = 1usize << i;
        for s in 0..table.len() {
            if s & b != 0 {
                table[s] = pick(table[s], table[s ^ b]);
            }
        }
    }
}

impl<'a, 'm> Oracle<'a, 'm> {
    pub fn new(q: &'a Query<'m>, bound: usize) -> Result<Self, OracleError> {
        let n = q.n_literals();
        if n > bound || n > 24 {
            return Err(OracleError::TooLarge { literals: n, bound });
        }
        let size = 1usize << n;
        let fc = q.class();
        let m = q.n_trees();
        let mut tree_bad = Vec::with_capacity(m);
        let mut worst = vec![0i64; size];
        let mut best = vec![0i64; size];
        let mut ones = vec![0usize; size];
        let mut total = vec![0i64; size];
        for t in 0..m {
            let mut bad = vec![false; size];
            let mut lo = vec![0i64; size];
            let mut hi = vec![0i64; size];
            for d in 0..size {
                match q.model.tree(t).node(leaf(q, t, d as Mask)) {
                    Node::Class(c) => {
                        bad[d] = *c != fc;
                        ones[d] += usize::from(*c == 1);
                    }
                    Node::Weight(w) => {
                        lo[d] = *w;
                        hi[d] = *w;
                        total[d] += *w;
                    }
                    Node::Split { .. } => unreachable!("walk ends at a leaf"),
                }
            }
            if q.model.kind() == ModelKind::Bt {
                fold_zeta(&mut lo, n, i64::min);
                fold_zeta(&mut hi, n, i64::max);
                for s in 0..size {
                    worst[s] += lo[s];
                    best[s] += hi[s];
                }
            } else {
                or_zeta(&mut bad, n);
            }
            tree_bad.push(bad);
        }
        let mut model_bad: Vec<bool> = (0..size)
            .map(|d| match q.model.kind() {
                ModelKind::Bt => weight_class(total[d]) != fc,
                _ => majority_class(ones[d], m) != fc,
            })
            .collect();
        or_zeta(&mut model_bad, n);
        Ok(Self {
            q,
            n,
            tree_bad,
            model_bad,
            worst,
            best,
        })
    }

    fn full(&self) -> Mask {
        ((1u64 << self.n) - 1) as Mask
    }

    /// A smallest flip set inside `freed` that changes the model's class.
    fn completion_in(&self, freed: Mask) -> Option<Vec<Lit>> {
        (0..=freed)
            .filter(|d| d & !freed == 0 && self.direct_change(*d))
            .min_by_key(|d| (d.count_ones(), *d))
            .map(|d| lits_of(d, self.n))
    }

    fn direct_change(&self, flips: Mask) -> bool {
        let fc = self.q.class();
        let m = self.q.n_trees();
        match self.q.model.kind() {
            ModelKind::Bt => {
                let total: i64 = (0..m)
                    .map(|t| match self.q.model.tree(t).node(leaf(self.q, t, flips)) {
                        Node::Weight(w) => *w,
                        _ => 0,
                    })
                    .sum();
                weight_class(total) != fc
            }
            _ => {
                let ones = (0..m)
                    .filter(|t| matches!(self.q.model.tree(*t).node(leaf(self.q, *t, flips)), Node::Class(1)))
                    .count();
                majority_class(ones, m) != fc
            }
        }
    }

    fn pinned(&self, freed: Mask) -> usize {
        self.tree_bad.iter().filter(|b| !b[freed as usize]).count()
    }

    fn needed(&self) -> usize {
        self.q.n_trees() / 2 + 1
    }

    fn bt_holds(&self, freed: Mask) -> bool {
        let s = freed as usize;
        if self.q.class() == 1 {
            self.worst[s] > 0
        } else {
            self.best[s] <= 0
        }
    }

    /// Validity of a literal set for `kind`, ignoring minimality.
    fn holds(&self, kind: ExplanationKind, lits: Mask) -> bool {
        let freed = self.full() & !lits;
        match kind {
            ExplanationKind::DtSufficient | ExplanationKind::RfSufficient => !self.model_bad[freed as usize],
            ExplanationKind::DtContrastive | ExplanationKind::RfContrastive => {
                lits != 0 && self.model_bad[lits as usize]
            }
            ExplanationKind::RfMajority => self.pinned(freed) >= self.needed(),
            ExplanationKind::BtTreeSpecific => self.bt_holds(freed),
        }
    }

    fn failure(&self, kind: ExplanationKind, lits: Mask) -> Witness {
        let freed = self.full() & !lits;
        match kind {
            ExplanationKind::DtSufficient | ExplanationKind::RfSufficient => {
                let flips = self.completion_in(freed).expect("invalid term has a completion");
                Witness::Completion {
                    flips,
                    class: 1 - self.q.class(),
                }
            }
            ExplanationKind::DtContrastive | ExplanationKind::RfContrastive => Witness::AllCompletionsAgree,
            ExplanationKind::RfMajority => Witness::UnpinnedTrees {
                pinned: self.pinned(freed),
                needed: self.needed(),
            },
            ExplanationKind::BtTreeSpecific => Witness::WeightBound {
                sum: if self.q.class() == 1 {
                    self.worst[freed as usize]
                } else {
                    self.best[freed as usize]
                },
            },
        }
    }

    fn check_kind(&self, kind: ExplanationKind) -> Result<(), OracleError> {
        if kind.model_kind() != self.q.model.kind() {
            return Err(OracleError::NotApplicable {
                kind,
                model: self.q.model.kind(),
            });
        }
        Ok(())
    }

    pub fn check(&self, explanation: &Explanation) -> Result<Verdict, OracleError> {
        let kind = explanation.kind;
        self.check_kind(kind)?;
        if let Some(l) = explanation.literals.iter().find(|l| **l == 0 || **l > self.n) {
            return Err(OracleError::UnknownLiteral(*l));
        }
        let lits = mask_of(&explanation.literals);
        if !self.holds(kind, lits) {
            return Ok(Verdict {
                valid: false,
                minimal: false,
                witness: Some(self.failure(kind, lits)),
            });
        }
        let redundant = explanation.literals.iter().find(|l| self.holds(kind, lits & !bit(**l)));
        Ok(Verdict {
            valid: true,
            minimal: redundant.is_none(),
            witness: redundant.map(|l| Witness::Deletion { literal: *l }),
        })
    }

    /// Every valid, minimal explanation of `kind`, sorted.
    pub fn enumerate(&self, kind: ExplanationKind) -> Result<Vec<Vec<Lit>>, OracleError> {
        self.check_kind(kind)?;
        let mut out: Vec<Vec<Lit>> = (0..=self.full())
            .filter(|&e| self.holds(kind, e) && lits_of(e, self.n).iter().all(|l| !self.holds(kind, e & !bit(*l))))
            .map(|e| lits_of(e, self.n))
            .collect();
        out.sort();
        Ok(out)
    }
}

pub fn oracle_check(q: &Query, explanation: &Explanation, bound: usize) -> Result<Verdict, OracleError> {
    Oracle::new(q, bound)?.check(explanation)
}

pub fn oracle_enumerate(q: &Query, kind: ExplanationKind, bound: usize) -> Result<Vec<Vec<Lit>>, OracleError> {
    Oracle::new(q, bound)?.enumerate(kind)
}
