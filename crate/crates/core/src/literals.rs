//! Boolean abstraction of node tests.
//!
//! Every distinct [`SplitTest`] in a model becomes one literal. Literal ids
//! are 1-based and handed out in order of first occurrence, walking trees in
//! index order and each tree in depth-first preorder (left subtree first).

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{Class, Instance, Model, ModelError, Node, SplitTest, TestKey};

/// 1-based literal id.
pub type Lit = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct LiteralTable {
    tests: Vec<SplitTest>,
    index: HashMap<TestKey, Lit>,
    /// `node_literals[tree][node]`, `None` for leaves.
    node_literals: Vec<Vec<Option<Lit>>>,
}

impl LiteralTable {
    pub fn build(model: &Model) -> Self {
        let mut tests = Vec::new();
        let mut index = HashMap::new();
        let mut node_literals = Vec::with_capacity(model.trees().len());
        for tree in model.trees() {
            let mut per_node = vec![None; tree.len()];
            for id in tree.preorder() {
                if let Node::Split { test, .. } = tree.node(id) {
                    let lit = *index.entry(test.key()).or_insert_with(|| {
                        tests.push(test.clone());
                        tests.len()
                    });
                    per_node[id] = Some(lit);
                }
            }
            node_literals.push(per_node);
        }
        Self {
            tests,
            index,
            node_literals,
        }
    }

    /// Number of literals; ids run from 1 to `len()`.
    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn ids(&self) -> std::ops::RangeInclusive<Lit> {
        1..=self.tests.len()
    }

    pub fn test(&self, lit: Lit) -> &SplitTest {
        &self.tests[lit - 1]
    }

    pub fn lookup(&self, test: &SplitTest) -> Option<Lit> {
        self.index.get(&test.key()).copied()
    }

    pub fn literal_at(&self, tree: usize, node: usize) -> Option<Lit> {
        self.node_literals[tree][node]
    }

    pub fn node_literals(&self, tree: usize) -> &[Option<Lit>] {
        &self.node_literals[tree]
    }

    /// Distinct literals of one tree, in preorder of first appearance.
    pub fn tree_literals(&self, model: &Model, tree: usize) -> Vec<Lit> {
        let mut seen = vec![false; self.len() + 1];
        let mut out = Vec::new();
        for id in model.tree(tree).preorder() {
            if let Some(lit) = self.node_literals[tree][id] {
                if !seen[lit] {
                    seen[lit] = true;
                    out.push(lit);
                }
            }
        }
        out
    }

    pub fn booleanize(&self, instance: &Instance) -> BoolInstance {
        let values = instance.values();
        BoolInstance {
            truth: self.tests.iter().map(|t| t.eval(values[t.feature])).collect(),
        }
    }

    /// Renders a literal with the polarity it has on the instance.
    pub fn render(&self, lit: Lit, bi: &BoolInstance) -> String {
        self.test(lit).render(bi.value(lit))
    }
}

pub fn build_literal_table(model: &Model) -> LiteralTable {
    LiteralTable::build(model)
}

/// Booleanizes `instance`, checking its length against the model first.
pub fn booleanize(model: &Model, table: &LiteralTable, instance: &Instance) -> Result<BoolInstance, ModelError> {
    instance.check_len(model.n_features())?;
    Ok(table.booleanize(instance))
}

/// Truth value of every literal on one instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoolInstance {
    truth: Vec<bool>,
}

impl BoolInstance {
    pub fn from_truth(truth: Vec<bool>) -> Self {
        Self { truth }
    }

    pub fn value(&self, lit: Lit) -> bool {
        self.truth[lit - 1]
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    /// Truth values as 0/1, index `i` holding literal `i + 1`.
    pub fn as_bits(&self) -> Vec<u8> {
        self.truth.iter().map(|b| u8::from(*b)).collect()
    }
}

/// Per-instance tree-count thresholds for forest queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    /// Sufficient search: a counterfactual needs more than `suf` disagreeing trees.
    pub suf: usize,
    /// Contrastive search: a flip needs more than `con` disagreeing trees.
    pub con: usize,
    /// Majority: fewer than `majo` trees may possibly disagree.
    pub majo: usize,
}

impl Thresholds {
    /// Trees that must keep the predicted class for a majority explanation.
    pub fn pinned_needed(m: usize) -> usize {
        m / 2 + 1
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThresholdError {
    #[error("a forest needs at least one tree")]
    EmptyForest,
    #[error("class {0} is not 0 or 1")]
    BadClass(Class),
}

pub fn compute_thresholds(m: usize, predicted: Class) -> Result<Thresholds, ThresholdError> {
    if m == 0 {
        return Err(ThresholdError::EmptyForest);
    }
    let con = match predicted {
        1 => m.div_ceil(2) - 1,
        0 => m / 2,
        c => return Err(ThresholdError::BadClass(c)),
    };
    Ok(Thresholds {
        suf: con,
        con,
        majo: m - Thresholds::pinned_needed(m) + 1,
    })
}
