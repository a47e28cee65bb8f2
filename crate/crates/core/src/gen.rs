//! Seeded random models and instances for tests and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::literals::LiteralTable;
use crate::model::{Instance, Model, ModelKind, Node, SplitTest, Tree, DEFAULT_WEIGHT_SCALE};

/// Shape of generated models. Thresholds and instance values are drawn from
/// the integer grid `0..=grid`, so tests repeat often and literals collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub kind: ModelKind,
    pub trees: usize,
    pub depth: usize,
    pub features: usize,
    pub grid: u32,
    /// Chance (in percent) that a node above maximum depth splits; the root
    /// always splits when `depth > 0`.
    pub split_percent: u32,
}

impl Shape {
    /// Models small enough for the exhaustive oracle.
    pub fn small(kind: ModelKind) -> Self {
        Self {
            kind,
            trees: if kind == ModelKind::Dt { 1 } else { 3 },
            depth: 3,
            features: 3,
            grid: 4,
            split_percent: 70,
        }
    }

    /// Full-depth forests at benchmark scale.
    pub fn synthetic(kind: ModelKind, trees: usize, depth: usize, features: usize) -> Self {
        Self {
            kind,
            trees,
            depth,
            features,
            grid: 16,
            split_percent: 100,
        }
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn leaf(&mut self, kind: ModelKind) -> Node {
        match kind {
            ModelKind::Bt => Node::Weight(self.rng.gen_range(-6..=6) * 100),
            _ => Node::Class(self.rng.gen_range(0..=1)),
        }
    }

    fn grow(&mut self, shape: &Shape, depth: usize, nodes: &mut Vec<Node>) -> usize {
        let id = nodes.len();
        let split = depth < shape.depth && (depth == 0 || self.rng.gen_range(0..100) < shape.split_percent);
        if !split {
            let leaf = self.leaf(shape.kind);
            nodes.push(leaf);
            return id;
        }
        let feature = self.rng.gen_range(0..shape.features);
        let threshold = f64::from(self.rng.gen_range(0..shape.grid));
        nodes.push(Node::Class(0));
        let left = self.grow(shape, depth + 1, nodes);
        let right = self.grow(shape, depth + 1, nodes);
        nodes[id] = Node::Split {
            test: SplitTest::le(feature, threshold),
            left,
            right,
        };
        id
    }

    pub fn tree(&mut self, shape: &Shape, index: usize) -> Tree {
        let mut nodes = Vec::new();
        self.grow(shape, 0, &mut nodes);
        Tree::new(index, nodes).expect("generated trees are well formed")
    }

    pub fn model(&mut self, shape: &Shape) -> Model {
        let trees = (0..shape.trees).map(|i| self.tree(shape, i)).collect();
        Model::new(shape.kind, shape.features, DEFAULT_WEIGHT_SCALE, trees).expect("generated models are well formed")
    }

    /// A model with both outcomes present among its leaves and at most
    /// `max_literals` distinct tests.
    pub fn model_with_limits(&mut self, shape: &Shape, max_literals: usize) -> Model {
        loop {
            let model = self.model(shape);
            if LiteralTable::build(&model).len() <= max_literals && has_both_outcomes(&model) {
                return model;
            }
        }
    }

    pub fn instance(&mut self, shape: &Shape) -> Instance {
        let grid = shape.grid;
        let values = (0..shape.features)
            .map(|_| f64::from(self.rng.gen_range(0..=grid)))
            .collect();
        Instance::new(values).expect("grid values are finite")
    }
}

fn has_both_outcomes(model: &Model) -> bool {
    let leaves = model.trees().iter().flat_map(|t| t.nodes().iter());
    let (mut low, mut high) = (false, false);
    for node in leaves {
        match node {
            Node::Class(0) => low = true,
            Node::Class(_) => high = true,
            Node::Weight(w) if *w <= 0 => low = true,
            Node::Weight(_) => high = true,
            Node::Split { .. } => {}
        }
    }
    low && high
}

/// Seeded full-depth model used by benchmarks and the performance check.
pub fn synthetic_model(kind: ModelKind, trees: usize, depth: usize, features: usize, seed: u64) -> Model {
    Generator::new(seed).model(&Shape::synthetic(kind, trees, depth, features))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_reproducible() {
        let shape = Shape::small(ModelKind::Rf);
        let a = Generator::new(11).model_with_limits(&shape, 8);
        let b = Generator::new(11).model_with_limits(&shape, 8);
        assert_eq!(a, b);
        assert!(LiteralTable::build(&a).len() <= 8);
        assert!(has_both_outcomes(&a));
    }

    #[test]
    fn synthetic_forest_has_requested_shape() {
        let m = synthetic_model(ModelKind::Rf, 10, 6, 12, 3);
        assert_eq!(m.trees().len(), 10);
        assert!(m.trees().iter().all(|t| t.len() == 127));
    }
}
