//! Tree evaluation under partial literal assignments.
//!
//! Each literal carries a [`Mode`]: `Fixed` keeps its instance value,
//! `Flipped` takes the opposite value and `Free` may take either. A free
//! literal is still a single Boolean variable, so once a root-to-leaf walk
//! has branched on it, later nodes on the same walk testing the same literal
//! must follow the value already chosen.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::literals::{BoolInstance, Lit, LiteralTable};
use crate::model::{majority_class, Class, Model, Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Fixed,
    Flipped,
    Free,
}

/// Mode of every literal, indexed by literal id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeMap {
    modes: Vec<Mode>,
}

impl ModeMap {
    pub fn uniform(n_literals: usize, mode: Mode) -> Self {
        Self {
            modes: vec![mode; n_literals],
        }
    }

    pub fn all_fixed(n_literals: usize) -> Self {
        Self::uniform(n_literals, Mode::Fixed)
    }

    /// `Free` on `free`, `Fixed` elsewhere.
    pub fn freeing(n_literals: usize, free: impl IntoIterator<Item = Lit>) -> Self {
        Self::with(n_literals, free, Mode::Free)
    }

    /// `Flipped` on `flips`, `Fixed` elsewhere.
    pub fn flipping(n_literals: usize, flips: impl IntoIterator<Item = Lit>) -> Self {
        Self::with(n_literals, flips, Mode::Flipped)
    }

    /// `Fixed` on `fixed`, `Free` elsewhere.
    pub fn fixing(n_literals: usize, fixed: impl IntoIterator<Item = Lit>) -> Self {
        let mut map = Self::uniform(n_literals, Mode::Free);
        for lit in fixed {
            map.set(lit, Mode::Fixed);
        }
        map
    }

    fn with(n_literals: usize, lits: impl IntoIterator<Item = Lit>, mode: Mode) -> Self {
        let mut map = Self::all_fixed(n_literals);
        for lit in lits {
            map.set(lit, mode);
        }
        map
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn get(&self, lit: Lit) -> Mode {
        self.modes[lit - 1]
    }

    pub fn set(&mut self, lit: Lit, mode: Mode) {
        self.modes[lit - 1] = mode;
    }

    /// Swaps `Fixed` and `Flipped` on one literal; `Free` is unchanged.
    pub fn toggle(&mut self, lit: Lit) {
        let next = match self.get(lit) {
            Mode::Fixed => Mode::Flipped,
            Mode::Flipped => Mode::Fixed,
            Mode::Free => Mode::Free,
        };
        self.set(lit, next);
    }

    pub fn with_mode(&self, mode: Mode) -> Vec<Lit> {
        (1..=self.modes.len()).filter(|l| self.modes[l - 1] == mode).collect()
    }

    /// Value a non-free literal takes, `None` when free.
    pub fn effective(&self, lit: Lit, bi: &BoolInstance) -> Option<bool> {
        match self.get(lit) {
            Mode::Fixed => Some(bi.value(lit)),
            Mode::Flipped => Some(!bi.value(lit)),
            Mode::Free => None,
        }
    }
}

/// Subset of {0, 1} as a two-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClassSet(u8);

impl ClassSet {
    pub const EMPTY: ClassSet = ClassSet(0);
    pub const BOTH: ClassSet = ClassSet(0b11);

    pub fn only(class: Class) -> Self {
        ClassSet(1 << class)
    }

    pub fn insert(&mut self, class: Class) {
        self.0 |= 1 << class;
    }

    pub fn contains(self, class: Class) -> bool {
        self.0 & (1 << class) != 0
    }

    pub fn is_both(self) -> bool {
        self == Self::BOTH
    }

    pub fn classes(self) -> Vec<Class> {
        (0..2).filter(|c| self.contains(*c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightRange {
    pub worst: i64,
    pub best: i64,
}

/// Errors for queries that need a particular leaf kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LeafKindError {
    #[error("tree has weight leaves; use weight_range")]
    WeightLeaves,
    #[error("tree has class leaves; use class_set")]
    ClassLeaves,
}

/// One root-to-leaf path as the literal values it requires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafPath {
    pub leaf: usize,
    /// Distinct `(literal, value)` requirements in path order.
    pub requires: Vec<(Lit, bool)>,
    /// Number of internal nodes on the path.
    pub depth: usize,
}

impl LeafPath {
    /// Literals whose required value differs from the instance.
    pub fn disagreements(&self, bi: &BoolInstance) -> Vec<Lit> {
        let mut out: Vec<Lit> = self
            .requires
            .iter()
            .filter(|(l, v)| bi.value(*l) != *v)
            .map(|(l, _)| *l)
            .collect();
        out.sort_unstable();
        out
    }
}

/// A tree paired with the literal ids of its internal nodes.
#[derive(Debug, Clone, Copy)]
pub struct BoolTree<'a> {
    tree: &'a Tree,
    lits: &'a [Option<Lit>],
}

impl<'a> BoolTree<'a> {
    pub fn new(model: &'a Model, table: &'a LiteralTable, index: usize) -> Self {
        Self {
            tree: model.tree(index),
            lits: table.node_literals(index),
        }
    }

    pub fn tree(&self) -> &'a Tree {
        self.tree
    }

    pub fn literal_at(&self, node: usize) -> Option<Lit> {
        self.lits[node]
    }

    /// Leaf reached when every literal has the value given by `value`.
    pub fn leaf_under(&self, value: impl Fn(Lit) -> bool) -> usize {
        let mut id = 0;
        loop {
            match self.tree.node(id) {
                Node::Split { left, right, .. } => {
                    let lit = self.lits[id].expect("split nodes carry a literal");
                    id = if value(lit) { *left } else { *right };
                }
                _ => return id,
            }
        }
    }

    fn walk<F>(
        &self,
        node: usize,
        bi: &BoolInstance,
        modes: &ModeMap,
        path: &mut Vec<(Lit, bool)>,
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(usize) -> ControlFlow<()>,
    {
        let Node::Split { left, right, .. } = self.tree.node(node) else {
            return visit(node);
        };
        let lit = self.lits[node].expect("split nodes carry a literal");
        let forced = modes
            .effective(lit, bi)
            .or_else(|| path.iter().rev().find(|(l, _)| *l == lit).map(|(_, v)| *v));
        if let Some(value) = forced {
            let next = if value { *left } else { *right };
            return self.walk(next, bi, modes, path, visit);
        }
        for (value, next) in [(true, *left), (false, *right)] {
            path.push((lit, value));
            let flow = self.walk(next, bi, modes, path, visit);
            path.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }

    fn for_each_reachable<F>(&self, bi: &BoolInstance, modes: &ModeMap, mut visit: F)
    where
        F: FnMut(usize) -> ControlFlow<()>,
    {
        let mut path = Vec::new();
        let _ = self.walk(0, bi, modes, &mut path, &mut visit);
    }

    /// Leaves some branch choice consistent with `modes` reaches, ascending.
    pub fn reachable_leaves(&self, bi: &BoolInstance, modes: &ModeMap) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_reachable(bi, modes, |leaf| {
            out.push(leaf);
            ControlFlow::Continue(())
        });
        out.sort_unstable();
        out
    }

    pub fn class_set(&self, bi: &BoolInstance, modes: &ModeMap) -> Result<ClassSet, LeafKindError> {
        let mut set = ClassSet::EMPTY;
        let mut wrong_kind = false;
        self.for_each_reachable(bi, modes, |leaf| match self.tree.node(leaf) {
            Node::Class(c) => {
                set.insert(*c);
                if set.is_both() {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            }
            _ => {
                wrong_kind = true;
                ControlFlow::Break(())
            }
        });
        if wrong_kind {
            Err(LeafKindError::WeightLeaves)
        } else {
            Ok(set)
        }
    }

    pub fn weight_range(&self, bi: &BoolInstance, modes: &ModeMap) -> Result<WeightRange, LeafKindError> {
        let mut range: Option<WeightRange> = None;
        let mut wrong_kind = false;
        self.for_each_reachable(bi, modes, |leaf| match self.tree.node(leaf) {
            Node::Weight(w) => {
                let r = range.get_or_insert(WeightRange { worst: *w, best: *w });
                r.worst = r.worst.min(*w);
                r.best = r.best.max(*w);
                ControlFlow::Continue(())
            }
            _ => {
                wrong_kind = true;
                ControlFlow::Break(())
            }
        });
        match range {
            Some(r) if !wrong_kind => Ok(r),
            _ => Err(LeafKindError::ClassLeaves),
        }
    }

    /// Every root-to-leaf path that some single assignment can follow,
    /// in preorder of leaves.
    pub fn leaf_paths(&self) -> Vec<LeafPath> {
        let mut out = Vec::new();
        let mut stack = vec![LeafPath {
            leaf: 0,
            requires: Vec::new(),
            depth: 0,
        }];
        while let Some(path) = stack.pop() {
            let Node::Split { left, right, .. } = self.tree.node(path.leaf) else {
                out.push(path);
                continue;
            };
            let lit = self.lits[path.leaf].expect("split nodes carry a literal");
            let prior = path.requires.iter().find(|(l, _)| *l == lit).map(|(_, v)| *v);
            for (value, next) in [(false, *right), (true, *left)] {
                let mut requires = path.requires.clone();
                match prior {
                    Some(p) if p != value => continue,
                    Some(_) => {}
                    None => requires.push((lit, value)),
                }
                stack.push(LeafPath {
                    leaf: next,
                    requires,
                    depth: path.depth + 1,
                });
            }
        }
        out
    }
}

/// Result of evaluating a forest with some literals flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteOutcome {
    pub class: Class,
    pub disagreeing: usize,
}

/// Evaluates every tree with `flips` negated; `disagreeing` counts trees
/// whose class differs from the unflipped forest prediction.
pub fn forest_vote_under_flips(model: &Model, table: &LiteralTable, bi: &BoolInstance, flips: &[Lit]) -> VoteOutcome {
    let mut flipped = vec![false; table.len() + 1];
    for l in flips {
        flipped[*l] = true;
    }
    let vote = |negate: bool| -> Vec<Class> {
        (0..model.trees().len())
            .map(|t| {
                let bt = BoolTree::new(model, table, t);
                let leaf = bt.leaf_under(|l| bi.value(l) ^ (negate && flipped[l]));
                match bt.tree().node(leaf) {
                    Node::Class(c) => *c,
                    _ => 0,
                }
            })
            .collect()
    };
    let m = model.trees().len();
    let before = vote(false);
    let original = majority_class(before.iter().filter(|c| **c == 1).count(), m);
    let after = vote(true);
    let ones = after.iter().filter(|c| **c == 1).count();
    VoteOutcome {
        class: majority_class(ones, m),
        disagreeing: after.iter().filter(|c| **c != original).count(),
    }
}
