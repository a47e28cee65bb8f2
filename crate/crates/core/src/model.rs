//! Canonical tree-model representation.
//!
//! A [`Model`] is one of three shapes:
//! - `dt`: a single classification tree,
//! - `rf`: a voting forest of classification trees,
//! - `bt`: a boosted ensemble of regression trees whose leaves carry
//!   fixed-point weights (`weight_scale` units per 1.0).
//!
//! Trees are stored as flat node arrays. Node 0 is the root, the left child
//! is taken when the node test holds and the right child otherwise.
//! Models are validated on construction and immutable afterwards.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Binary class label, always 0 or 1.
pub type Class = u8;

/// Default number of fixed-point units per 1.0 for boosted leaf weights.
pub const DEFAULT_WEIGHT_SCALE: i64 = 1000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema violation: {0}")]
    Schema(serde_json::Error),
    #[error("tree {tree}: {reason}")]
    Tree { tree: usize, reason: String },
    #[error("tree {tree}, node {node}: {reason}")]
    Node { tree: usize, node: usize, reason: String },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("instance has {found} values, model expects {expected}")]
    InstanceLength { expected: usize, found: usize },
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("cannot read {path}: {error}")]
    Io { path: String, error: std::io::Error },
}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        ModelError::Schema(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitOp {
    /// `x <= c`
    Le,
    /// `x < c`
    Lt,
    /// `x ∈ S`
    In,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Threshold {
    Value(f64),
    /// Sorted, duplicate-free value set of a membership test.
    Set(Vec<f64>),
}

/// A Boolean node test on one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTest {
    pub feature: usize,
    pub op: SplitOp,
    pub threshold: Threshold,
}

/// Hashable identity of a split test, used to share one literal between
/// identical tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct TestKey {
    feature: usize,
    op: SplitOp,
    bits: Vec<u64>,
}

fn canonical_bits(v: f64) -> u64 {
    // -0.0 and 0.0 compare equal, so they must hash equal too
    if v == 0.0 {
        0.0f64.to_bits()
    } else {
        v.to_bits()
    }
}

impl SplitTest {
    pub fn new(feature: usize, op: SplitOp, threshold: Threshold) -> Self {
        let threshold = match threshold {
            Threshold::Set(mut values) => {
                values.sort_by(f64::total_cmp);
                values.dedup();
                Threshold::Set(values)
            }
            t => t,
        };
        Self { feature, op, threshold }
    }

    pub fn le(feature: usize, c: f64) -> Self {
        Self::new(feature, SplitOp::Le, Threshold::Value(c))
    }

    pub fn lt(feature: usize, c: f64) -> Self {
        Self::new(feature, SplitOp::Lt, Threshold::Value(c))
    }

    pub fn eval(&self, value: f64) -> bool {
        match (&self.op, &self.threshold) {
            (SplitOp::Le, Threshold::Value(c)) => value <= *c,
            (SplitOp::Lt, Threshold::Value(c)) => value < *c,
            (SplitOp::In, Threshold::Set(set)) => set.contains(&value),
            // rejected by validation
            _ => false,
        }
    }

    pub(crate) fn key(&self) -> TestKey {
        let bits = match &self.threshold {
            Threshold::Value(c) => vec![canonical_bits(*c)],
            Threshold::Set(set) => set.iter().map(|v| canonical_bits(*v)).collect(),
        };
        TestKey {
            feature: self.feature,
            op: self.op,
            bits,
        }
    }

    /// Renders the test with the polarity it has on an instance, e.g.
    /// `x1 <= 2` when it holds and `x1 > 2` when it does not. Features are
    /// displayed 1-based.
    pub fn render(&self, holds: bool) -> String {
        let name = format!("x{}", self.feature + 1);
        match (&self.threshold, self.op, holds) {
            (Threshold::Value(c), SplitOp::Le, true) => format!("{name} <= {c}"),
            (Threshold::Value(c), SplitOp::Le, false) => format!("{name} > {c}"),
            (Threshold::Value(c), SplitOp::Lt, true) => format!("{name} < {c}"),
            (Threshold::Value(c), SplitOp::Lt, false) => format!("{name} >= {c}"),
            (Threshold::Set(set), _, holds) => {
                let items: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                let rel = if holds { "in" } else { "not in" };
                format!("{name} {rel} {{{}}}", items.join(", "))
            }
            (Threshold::Value(c), SplitOp::In, _) => format!("{name} ? {c}"),
        }
    }
}

impl fmt::Display for SplitTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(true))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        test: SplitTest,
        left: usize,
        right: usize,
    },
    Class(Class),
    /// Fixed-point leaf weight.
    Weight(i64),
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        !matches!(self, Node::Split { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Builds a tree, checking that the nodes form a binary tree rooted at
    /// node 0. `index` is only used to label errors.
    pub fn new(index: usize, nodes: Vec<Node>) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::Tree {
                tree: index,
                reason: "tree has no nodes".into(),
            });
        }
        let n = nodes.len();
        let mut parent: Vec<Option<usize>> = vec![None; n];
        for (id, node) in nodes.iter().enumerate() {
            let Node::Split { test, left, right } = node else {
                if let Node::Class(c) = node {
                    if *c > 1 {
                        return Err(node_err(index, id, format!("class {c} is not 0 or 1")));
                    }
                }
                continue;
            };
            validate_test(test).map_err(|reason| node_err(index, id, reason))?;
            for child in [*left, *right] {
                if child >= n {
                    return Err(node_err(index, id, format!("child {child} out of bounds")));
                }
                if child == 0 {
                    return Err(node_err(index, id, "root used as a child".into()));
                }
                if let Some(p) = parent[child] {
                    return Err(node_err(index, child, format!("node has two parents ({p} and {id})")));
                }
                parent[child] = Some(id);
            }
        }
        // every non-root node has one parent; rule out detached cycles
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            seen[id] = true;
            if let Node::Split { left, right, .. } = &nodes[id] {
                stack.push(*left);
                stack.push(*right);
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(node_err(index, orphan, "node unreachable from root".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids in depth-first preorder, left before right.
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            order.push(id);
            if let Node::Split { left, right, .. } = &self.nodes[id] {
                stack.push(*right);
                stack.push(*left);
            }
        }
        order
    }

    /// Leaf reached by ordinary traversal.
    pub fn leaf_for(&self, values: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split { test, left, right } => {
                    id = if test.eval(values[test.feature]) { *left } else { *right };
                }
                _ => return id,
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_leaf())
            .map(|(i, _)| i)
    }
}

fn node_err(tree: usize, node: usize, reason: String) -> ModelError {
    ModelError::Node { tree, node, reason }
}

fn validate_test(test: &SplitTest) -> Result<(), String> {
    match (&test.op, &test.threshold) {
        (SplitOp::Le | SplitOp::Lt, Threshold::Value(c)) if c.is_finite() => Ok(()),
        (SplitOp::Le | SplitOp::Lt, Threshold::Value(_)) => Err("threshold is not finite".into()),
        (SplitOp::In, Threshold::Set(set)) if set.is_empty() => Err("membership test has an empty value set".into()),
        (SplitOp::In, Threshold::Set(set)) if set.iter().all(|v| v.is_finite()) => Ok(()),
        (SplitOp::In, Threshold::Set(_)) => Err("value set contains a non-finite value".into()),
        (SplitOp::In, Threshold::Value(_)) => Err("op \"in\" needs an array threshold".into()),
        (_, Threshold::Set(_)) => Err("array threshold is only valid with op \"in\"".into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dt,
    Rf,
    Bt,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Bt => "bt",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "raw::RawModel", into = "raw::RawModel")]
pub struct Model {
    kind: ModelKind,
    n_features: usize,
    weight_scale: i64,
    trees: Vec<Tree>,
}

impl Model {
    pub fn new(kind: ModelKind, n_features: usize, weight_scale: i64, trees: Vec<Tree>) -> Result<Self, ModelError> {
        if trees.is_empty() {
            return Err(ModelError::Model("model has no trees".into()));
        }
        if kind == ModelKind::Dt && trees.len() != 1 {
            return Err(ModelError::Model(format!(
                "a dt model has exactly one tree, found {}",
                trees.len()
            )));
        }
        if weight_scale <= 0 {
            return Err(ModelError::Model("weight_scale must be positive".into()));
        }
        for (t, tree) in trees.iter().enumerate() {
            for (id, node) in tree.nodes().iter().enumerate() {
                match (kind, node) {
                    (_, Node::Split { test, .. }) if test.feature >= n_features => {
                        return Err(node_err(
                            t,
                            id,
                            format!("feature {} out of range (n_features = {n_features})", test.feature),
                        ));
                    }
                    (ModelKind::Bt, Node::Class(_)) => {
                        return Err(node_err(t, id, "bt leaves carry weights, not classes".into()));
                    }
                    (ModelKind::Dt | ModelKind::Rf, Node::Weight(_)) => {
                        return Err(node_err(t, id, format!("{kind} leaves carry classes, not weights")));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            kind,
            n_features,
            weight_scale,
            trees,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn weight_scale(&self) -> i64 {
        self.weight_scale
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn tree(&self, index: usize) -> &Tree {
        &self.trees[index]
    }

    /// Total number of nodes over all trees.
    pub fn size(&self) -> usize {
        self.trees.iter().map(Tree::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn predict(&self, instance: &Instance) -> Result<Prediction, ModelError> {
        instance.check_len(self.n_features)?;
        let values = instance.values();
        Ok(match self.kind {
            ModelKind::Dt | ModelKind::Rf => {
                let votes = self
                    .trees
                    .iter()
                    .filter(|tree| matches!(tree.node(tree.leaf_for(values)), Node::Class(1)))
                    .count();
                Prediction {
                    class: majority_class(votes, self.trees.len()),
                    raw_weight: None,
                }
            }
            ModelKind::Bt => {
                let total: i64 = self
                    .trees
                    .iter()
                    .map(|tree| match tree.node(tree.leaf_for(values)) {
                        Node::Weight(w) => *w,
                        _ => 0,
                    })
                    .sum();
                Prediction {
                    class: weight_class(total),
                    raw_weight: Some(total),
                }
            }
        })
    }
}

/// Forest vote: class 1 iff strictly more than half of the trees vote 1.
pub fn majority_class(ones: usize, trees: usize) -> Class {
    Class::from(2 * ones > trees)
}

/// Boosted decision: class 1 iff the weight sum is strictly positive.
pub fn weight_class(total: i64) -> Class {
    Class::from(total > 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: Class,
    pub raw_weight: Option<i64>,
}

/// Parses and validates a model-IR JSON document.
pub fn load_model(document: &str) -> Result<Model, ModelError> {
    let raw: raw::RawModel = serde_json::from_str(document)?;
    Model::try_from(raw)
}

pub fn load_model_file(path: &Path) -> Result<Model, ModelError> {
    load_model(&read(path)?)
}

fn read(path: &Path) -> Result<String, ModelError> {
    std::fs::read_to_string(path).map_err(|error| ModelError::Io {
        path: path.display().to_string(),
        error,
    })
}

/// Feature vector of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance {
    values: Vec<f64>,
}

impl Instance {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::Instance(format!("value {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, n_features: usize) -> Result<(), ModelError> {
        if self.values.len() != n_features {
            return Err(ModelError::InstanceLength {
                expected: n_features,
                found: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::new(serde_json::from_str(text)?)
    }

    /// Reads a single-row CSV (an optional header row is skipped when it
    /// does not parse as numbers).
    pub fn from_csv(text: &str) -> Result<Self, ModelError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| ModelError::Instance(e.to_string()))?;
            let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            rows.push(parsed);
        }
        let numeric: Vec<Vec<f64>> = match rows.as_slice() {
            [Err(_), rest @ ..] => rest
                .iter()
                .cloned()
                .collect::<Result<_, _>>()
                .map_err(|e| ModelError::Instance(e.to_string()))?,
            _ => rows
                .into_iter()
                .collect::<Result<_, _>>()
                .map_err(|e| ModelError::Instance(e.to_string()))?,
        };
        match numeric.as_slice() {
            [row] => Self::new(row.clone()),
            _ => Err(ModelError::Instance(format!(
                "expected exactly one data row, found {}",
                numeric.len()
            ))),
        }
    }

    /// Loads an instance from a JSON array or a single-row CSV file.
    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = read(path)?;
        if text.trim_start().starts_with('[') {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.values).expect("instance serialization cannot fail")
    }
}

mod raw {
    //! Wire format of the model-IR JSON schema.

    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct RawModel {
        pub kind: ModelKind,
        pub n_features: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub weight_scale: Option<i64>,
        pub trees: Vec<RawTree>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct RawTree {
        pub nodes: Vec<RawNode>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
    pub enum RawNode {
        Split {
            feature: usize,
            op: SplitOp,
            threshold: RawThreshold,
            left: usize,
            right: usize,
        },
        Leaf {
            #[serde(default, skip_serializing_if = "Option::is_none")]
            class: Option<u8>,
            #[serde(default, skip_serializing_if = "Option::is_none")]
            weight: Option<i64>,
        },
    }

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum RawThreshold {
        Value(f64),
        Set(Vec<f64>),
    }

    impl TryFrom<RawModel> for Model {
        type Error = ModelError;

        fn try_from(raw: RawModel) -> Result<Self, ModelError> {
            if raw.kind != ModelKind::Bt && raw.weight_scale.is_some() {
                return Err(ModelError::Model("weight_scale is only allowed for bt models".into()));
            }
            let mut trees = Vec::with_capacity(raw.trees.len());
            for (t, tree) in raw.trees.into_iter().enumerate() {
                let mut nodes = Vec::with_capacity(tree.nodes.len());
                for (id, node) in tree.nodes.into_iter().enumerate() {
                    nodes.push(match node {
                        RawNode::Split {
                            feature,
                            op,
                            threshold,
                            left,
                            right,
                        } => {
                            let threshold = match threshold {
                                RawThreshold::Value(c) => Threshold::Value(c),
                                RawThreshold::Set(s) => Threshold::Set(s),
                            };
                            Node::Split {
                                test: SplitTest::new(feature, op, threshold),
                                left,
                                right,
                            }
                        }
                        RawNode::Leaf {
                            class: Some(c),
                            weight: None,
                        } => Node::Class(c),
                        RawNode::Leaf {
                            class: None,
                            weight: Some(w),
                        } => Node::Weight(w),
                        RawNode::Leaf { .. } => {
                            return Err(node_err(
                                t,
                                id,
                                "a leaf needs exactly one of \"class\" or \"weight\"".into(),
                            ))
                        }
                    });
                }
                trees.push(Tree::new(t, nodes)?);
            }
            Model::new(
                raw.kind,
                raw.n_features,
                raw.weight_scale.unwrap_or(DEFAULT_WEIGHT_SCALE),
                trees,
            )
        }
    }

    impl From<Model> for RawModel {
        fn from(model: Model) -> Self {
            let weight_scale = (model.kind == ModelKind::Bt).then_some(model.weight_scale);
            let trees = model
                .trees
                .into_iter()
                .map(|tree| RawTree {
                    nodes: tree
                        .nodes
                        .into_iter()
                        .map(|node| match node {
                            Node::Split { test, left, right } => RawNode::Split {
                                feature: test.feature,
                                op: test.op,
                                threshold: match test.threshold {
                                    Threshold::Value(c) => RawThreshold::Value(c),
                                    Threshold::Set(s) => RawThreshold::Set(s),
                                },
                                left,
                                right,
                            },
                            Node::Class(c) => RawNode::Leaf {
                                class: Some(c),
                                weight: None,
                            },
                            Node::Weight(w) => RawNode::Leaf {
                                class: None,
                                weight: Some(w),
                            },
                        })
                        .collect(),
                })
                .collect();
            RawModel {
                kind: model.kind,
                n_features: model.n_features,
                weight_scale,
                trees,
            }
        }
    }
}
