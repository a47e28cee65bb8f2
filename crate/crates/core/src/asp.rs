//! Answer-set program export.
//!
//! [`export_facts`] writes the ground facts describing a model and an
//! instance; [`export_encoding`] returns the matching logic program. The
//! concatenation can be handed to an external grounder and solver. Facts
//! come one per line in a fixed order: header facts, then for each tree its
//! `node` facts, `leaf_node` facts and `left_node`/`right_node` pairs, all in
//! node-id order.
//!
//! Numbering conventions:
//! - decision trees: no tree argument and 0-based literal ids,
//! - random forests: trees numbered from 1, literals from 1,
//! - boosted trees: trees numbered from 0, literals from 1.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::explain::{ExplanationKind, Query};
use crate::model::{ModelKind, Node};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AspError {
    #[error("{kind} export needs a {expected} model, got {found}")]
    KindMismatch {
        kind: ExplanationKind,
        expected: ModelKind,
        found: ModelKind,
    },
    #[error("line {line}: cannot parse fact {text:?}")]
    Parse { line: usize, text: String },
    #[error("inconsistent facts: {0}")]
    Structure(String),
}

const DT_SUFFICIENT: &str = "\
1 {selected_literal(L):node(X,L,B)}.
node(X,L,0..1) :- selected_literal(L),node(X,L,B).
next_node(LX) :- node(0,L,1),left_node(0,LX).
next_node(RX) :- node(0,L,0),right_node(0,RX).
next_node(LX) :- next_node(X),node(X,L,1),left_node(X,LX).
next_node(RX) :- next_node(X),node(X,L,0),right_node(X,RX).
class(C):-next_node(X),leaf_node(X,C).
invalid :- class(0),class(1).
:- invalid.
#heuristic selected_literal(L). [1,true]
#show selected_literal/1.
";

const DT_CONTRASTIVE: &str = "\
1 {selected_literal(L):node(X,L,B)}.
node(X,L,0..1) :- selected_literal(L),node(X,L,B).
next_node(LX) :- node(0,L,1),left_node(0,LX).
next_node(RX) :- node(0,L,0),right_node(0,RX).
next_node(LX) :- next_node(X),node(X,L,1),left_node(X,LX).
next_node(RX) :- next_node(X),node(X,L,0),right_node(X,RX).
class(C) :- next_node(X),leaf_node(X,C).
valid :- class(0),class(1).
:- not valid.
#heuristic selected_literal(L). [1,false]
#show selected_literal/1.
";

const RF_SUFFICIENT: &str = "\
% stage 1
% pair with a choice rule over the literals that may change, e.g.
% {change(L) : not fix_lit(L),L=1..N}.
node(T,X,L) :- node(T,X,L,_).
new_node(T,X,L,0) :- change(L),node(T,X,L),feature(L,1).
new_node(T,X,L,1) :- change(L),node(T,X,L),feature(L,0).
new_node(T,X,L,B) :- node(T,X,L),feature(L,B),not change(L).
next_node(T,LX) :- new_node(T,0,L,1),left_node(T,0,LX).
next_node(T,RX) :- new_node(T,0,L,0),right_node(T,0,RX).
next_node(T,LX) :- next_node(T,X),new_node(T,X,L,1),left_node(T,X,LX).
next_node(T,RX) :- next_node(T,X),new_node(T,X,L,0),right_node(T,X,RX).
class(T,C) :- next_node(T,X),leaf_node(T,X,C).
invalid_tree(T) :- class(T,C),pre_forest(FC),C!=FC.
forest_changed :- VT=#count{T:invalid_tree(T)},tree_threshold(TH),VT>TH.
:- not forest_changed.
% stage 2
% feature(I,B). ...
% fix_lit(I). ...
% python wasp_rewriter.py enc.lp ins.lp | clingo --output=smodels | ./wasp --mus=__debug__ -n0
";

const RF_CONTRASTIVE: &str = "\
1 {selected_literal(L):node(T,X,L,B)}.
new_node(T,X,L,0) :- selected_literal(L),node(T,X,L,1).
new_node(T,X,L,1) :- selected_literal(L),node(T,X,L,0).
new_node(T,X,L,B) :- node(T,X,L,B),not selected_literal(L).
next_node(T,LX) :- new_node(T,0,L,1),left_node(T,0,LX).
next_node(T,RX) :- new_node(T,0,L,0),right_node(T,0,RX).
next_node(T,LX) :- next_node(T,X),new_node(T,X,L,1),left_node(T,X,LX).
next_node(T,RX) :- next_node(T,X),new_node(T,X,L,0),right_node(T,X,RX).
class(T,C):-next_node(T,X),leaf_node(T,X,C).
valid_tree(T) :- class(T,C),pre_forest(FC),C!=FC.
valid :- VT = #count{T : valid_tree(T)},con_tree_threshold(TH),VT>TH.
:- not valid.
#heuristic selected_literal(L). [1,false]
#show selected_literal/1.
";

const RF_MAJORITY: &str = "\
1 {selected_literal(L):node(T,X,L,B)}.
node(T,X,L,0..1) :- selected_literal(L),node(T,X,L,B).
next_node(T,LX) :- node(T,0,L,1),left_node(T,0,LX).
next_node(T,RX) :- node(T,0,L,0),right_node(T,0,RX).
next_node(T,LX) :- next_node(T,X),node(T,X,L,1),left_node(T,X,LX).
next_node(T,RX) :- next_node(T,X),node(T,X,L,0),right_node(T,X,RX).
class(T,C) :- next_node(T,X),leaf_node(T,X,C).
invalid_tree(T) :- class(T,C),pre_forest(FC),C!=FC.
valid :- VT = #count{T : invalid_tree(T)},majo_tree_threshold(TH),VT<TH.
:- not valid.
#heuristic selected_literal(L). [1,true]
#show selected_literal/1.
";

const BT_TREE_SPECIFIC: &str = "\
1 {selected_literal(L) : node(T,X,L,B) }.
node(T,X,L,0..1) :- node(T,X,L,B), not selected_literal(L).
next_node(T,LX) :- node(T,0,L,1), left_node(T,0,LX).
next_node(T,RX) :- node(T,0,L,0), right_node(T,0,RX).
next_node(T,LX) :- next_node(T,X), node(T,X,L,1), left_node(T,X,LX).
next_node(T,RX) :- next_node(T,X), node(T,X,L,0), right_node(T,X,RX).
weight(T,W) :- next_node(T,X), leaf_node(T,X,W).
best_weight(T,BW) :- weight(T, _), BW = #max{W:weight(T,W)}.
worst_weight(T,WW) :- weight(T, _), WW = #min{W:weight(T,W)}.
valid :- SW = #sum{BW:best_weight(_,BW)}, SW<=0, pre_forest(0).
valid :- SW = #sum{WW:worst_weight(_,WW)}, SW>0, pre_forest(1).
:- not valid.
#heuristic selected_literal(L). [1,false]
#show selected_literal/1.
";

pub fn export_encoding(kind: ExplanationKind) -> &'static str {
    match kind {
        ExplanationKind::DtSufficient => DT_SUFFICIENT,
        ExplanationKind::DtContrastive => DT_CONTRASTIVE,
        ExplanationKind::RfSufficient => RF_SUFFICIENT,
        ExplanationKind::RfContrastive => RF_CONTRASTIVE,
        ExplanationKind::RfMajority => RF_MAJORITY,
        ExplanationKind::BtTreeSpecific => BT_TREE_SPECIFIC,
    }
}

/// Facts plus encoding for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspDocument {
    pub kind: ExplanationKind,
    pub facts: String,
    pub encoding: &'static str,
}

impl AspDocument {
    pub fn new(q: &Query, kind: ExplanationKind) -> Result<Self, AspError> {
        Ok(Self {
            kind,
            facts: export_facts(q, kind)?,
            encoding: export_encoding(kind),
        })
    }

    /// Encoding followed by the facts, ready for a grounder.
    pub fn program(&self) -> String {
        format!("{}\n{}", self.encoding, self.facts)
    }
}

pub fn export_facts(q: &Query, kind: ExplanationKind) -> Result<String, AspError> {
    let model_kind = q.model.kind();
    if kind.model_kind() != model_kind {
        return Err(AspError::KindMismatch {
            kind,
            expected: kind.model_kind(),
            found: model_kind,
        });
    }
    let mut out = String::new();
    let class = q.class();
    match model_kind {
        ModelKind::Dt => {
            writeln!(out, "pre_class({class}).").unwrap();
        }
        ModelKind::Rf => {
            let th = q.thresholds();
            for lit in q.table.ids() {
                writeln!(out, "feature({lit},{}).", u8::from(q.bi.value(lit))).unwrap();
            }
            writeln!(out, "pre_forest({class}).").unwrap();
            if kind == ExplanationKind::RfSufficient {
                writeln!(out, "tree_threshold({}).", th.suf).unwrap();
            }
            writeln!(out, "con_tree_threshold({}).", th.con).unwrap();
            writeln!(out, "majo_tree_threshold({}).", th.majo).unwrap();
        }
        ModelKind::Bt => {
            writeln!(out, "pre_forest({class}).").unwrap();
        }
    }
    for t in 0..q.n_trees() {
        let prefix = match model_kind {
            ModelKind::Dt => String::new(),
            ModelKind::Rf => format!("{},", t + 1),
            ModelKind::Bt => format!("{t},"),
        };
        let lit_offset = usize::from(model_kind == ModelKind::Dt);
        let nodes = q.model.tree(t).nodes();
        for (x, node) in nodes.iter().enumerate() {
            if let Node::Split { .. } = node {
                let lit = q.table.literal_at(t, x).expect("split has a literal");
                let b = u8::from(q.bi.value(lit));
                writeln!(out, "node({prefix}{x},{},{b}).", lit - lit_offset).unwrap();
            }
        }
        for (x, node) in nodes.iter().enumerate() {
            match node {
                Node::Class(c) => writeln!(out, "leaf_node({prefix}{x},{c}).").unwrap(),
                Node::Weight(w) => writeln!(out, "leaf_node({prefix}{x},{w}).").unwrap(),
                Node::Split { .. } => {}
            }
        }
        for (x, node) in nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = node {
                writeln!(out, "left_node({prefix}{x},{left}).").unwrap();
                writeln!(out, "right_node({prefix}{x},{right}).").unwrap();
            }
        }
    }
    if kind == ExplanationKind::RfSufficient {
        for lit in q.table.ids() {
            writeln!(out, "fix_lit({lit}).").unwrap();
        }
    }
    Ok(out)
}

/// Collapses all whitespace runs so texts can be compared token by token.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A ground fact `name(a1,...,an).` with integer arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub name: String,
    pub args: Vec<i64>,
}

/// Parses integer-argument facts; `%` starts a comment.
pub fn parse_facts(text: &str) -> Result<Vec<Fact>, AspError> {
    let mut facts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("");
        for piece in line.split('.').map(str::trim).filter(|p| !p.is_empty()) {
            let err = || AspError::Parse {
                line: i + 1,
                text: piece.to_string(),
            };
            let (name, rest) = piece.split_once('(').ok_or_else(err)?;
            let inner = rest.strip_suffix(')').ok_or_else(err)?;
            let args = inner
                .split(',')
                .map(|a| a.trim().parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err())?;
            facts.push(Fact {
                name: name.trim().to_string(),
                args,
            });
        }
    }
    Ok(facts)
}

/// Structure-only view of a tree as encoded in facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkeletonNode {
    Split {
        literal: i64,
        value: i64,
        left: usize,
        right: usize,
    },
    Leaf(i64),
}

/// Trees keyed by their exported number, nodes by id.
pub type Skeleton = BTreeMap<i64, BTreeMap<usize, SkeletonNode>>;

/// Rebuilds tree structure from exported facts. `tree_arg` says whether
/// facts carry a leading tree argument (forests and boosted trees).
pub fn skeleton_from_facts(facts: &[Fact], tree_arg: bool) -> Result<Skeleton, AspError> {
    let mut splits: BTreeMap<(i64, usize), (i64, i64)> = BTreeMap::new();
    let mut children: BTreeMap<(i64, usize), (Option<usize>, Option<usize>)> = BTreeMap::new();
    let mut skeleton = Skeleton::new();
    let bad = |f: &Fact| AspError::Structure(format!("unexpected arity for {}{:?}", f.name, f.args));
    for f in facts {
        let (tree, rest) = if tree_arg {
            match f.args.split_first() {
                Some((t, rest)) => (*t, rest),
                None => continue,
            }
        } else {
            (0, f.args.as_slice())
        };
        let node = |v: i64| usize::try_from(v).map_err(|_| bad(f));
        match (f.name.as_str(), rest) {
            ("node", [x, l, b]) => {
                splits.insert((tree, node(*x)?), (*l, *b));
            }
            ("leaf_node", [x, v]) => {
                skeleton
                    .entry(tree)
                    .or_default()
                    .insert(node(*x)?, SkeletonNode::Leaf(*v));
            }
            ("left_node", [x, c]) => {
                children.entry((tree, node(*x)?)).or_default().0 = Some(node(*c)?);
            }
            ("right_node", [x, c]) => {
                children.entry((tree, node(*x)?)).or_default().1 = Some(node(*c)?);
            }
            ("node" | "leaf_node" | "left_node" | "right_node", _) => return Err(bad(f)),
            _ => {}
        }
    }
    for ((tree, x), (literal, value)) in splits {
        let Some((Some(left), Some(right))) = children.remove(&(tree, x)) else {
            return Err(AspError::Structure(format!("tree {tree} node {x} lacks children")));
        };
        skeleton.entry(tree).or_default().insert(
            x,
            SkeletonNode::Split {
                literal,
                value,
                left,
                right,
            },
        );
    }
    if let Some((tree, x)) = children.keys().next() {
        return Err(AspError::Structure(format!(
            "tree {tree} node {x} has children but no test"
        )));
    }
    Ok(skeleton)
}

/// The skeleton [`export_facts`] encodes for a query.
pub fn skeleton_of(q: &Query) -> Skeleton {
    let kind = q.model.kind();
    let lit_offset = i64::from(kind == ModelKind::Dt);
    let mut skeleton = Skeleton::new();
    for t in 0..q.n_trees() {
        let key = match kind {
            ModelKind::Dt | ModelKind::Bt => t as i64,
            ModelKind::Rf => t as i64 + 1,
        };
        let nodes = q.model.tree(t).nodes().iter().enumerate().map(|(x, node)| {
            let s = match node {
                Node::Split { left, right, .. } => {
                    let lit = q.table.literal_at(t, x).expect("split has a literal");
                    SkeletonNode::Split {
                        literal: lit as i64 - lit_offset,
                        value: i64::from(q.bi.value(lit)),
                        left: *left,
                        right: *right,
                    }
                }
                Node::Class(c) => SkeletonNode::Leaf(i64::from(*c)),
                Node::Weight(w) => SkeletonNode::Leaf(*w),
            };
            (x, s)
        });
        skeleton.insert(key, nodes.collect());
    }
    skeleton
}
