//! ID3 decision trees trained on histogram counts instead of records.
//!
//! Each training "instance" is a cell weighted by its count, so noisy
//! fractional counts are used as they are. Negative counts are clamped to 0.

use serde::{Deserialize, Serialize};

use crate::cube::{CellVector, CubeSchema};
use crate::error::{Error, Result};
use crate::estimate::{cell_estimates, Method};
use crate::partition::ReleasedHistogram;

const GAIN_EPS: f64 = 1e-12;

/// Which cube dimensions are features and which is the class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSchema {
    features: Vec<usize>,
    class_dim: usize,
}

impl LabeledSchema {
    pub fn new(schema: &CubeSchema, features: Vec<usize>, class_dim: usize) -> Result<Self> {
        let nd = schema.ndims();
        if class_dim >= nd {
            return Err(Error::InvalidParameter(format!(
                "class dimension {class_dim} out of range"
            )));
        }
        if schema.shape()[class_dim] < 2 {
            return Err(Error::InvalidParameter(
                "class dimension needs at least two bins".into(),
            ));
        }
        let mut seen = vec![false; nd];
        for &f in &features {
            if f >= nd || f == class_dim || seen[f] {
                return Err(Error::InvalidParameter(format!("bad feature dimension {f}")));
            }
            seen[f] = true;
        }
        let mut features = features;
        features.sort_unstable();
        Ok(Self { features, class_dim })
    }

    /// Every dimension except `class` is a feature.
    pub fn with_class(schema: &CubeSchema, class: &str) -> Result<Self> {
        let class_dim = schema
            .dim_index(class)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown class dimension {class:?}")))?;
        let features = (0..schema.ndims()).filter(|&d| d != class_dim).collect();
        Self::new(schema, features, class_dim)
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn class_dim(&self) -> usize {
        self.class_dim
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        dim: usize,
        name: String,
        majority: usize,
        children: Vec<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub class_dim: usize,
    pub class_labels: Vec<String>,
    pub root: Node,
}

impl DecisionTree {
    /// Predicted class bin for a cell given by its cube coordinates.
    pub fn predict(&self, coord: &[usize]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class } => return *class,
                Node::Split { dim, children, .. } => node = &children[coord[*dim]],
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { children, .. } => 1 + children.iter().map(walk).max().unwrap_or(0),
            }
        }
        walk(&self.root)
    }

    /// Fraction of the (nonnegative) mass of `x` that is classified correctly.
    pub fn accuracy(&self, x: &CellVector) -> Result<f64> {
        let schema = x.schema();
        let total: f64 = x.values().iter().map(|v| v.max(0.0)).sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("accuracy needs a non-empty test set".into()));
        }
        let correct: f64 = (0..schema.m())
            .map(|i| {
                let coord = schema.coord_of(i);
                if self.predict(&coord) == coord[self.class_dim] {
                    x.values()[i].max(0.0)
                } else {
                    0.0
                }
            })
            .sum();
        Ok(correct / total)
    }
}

fn entropy(class_mass: &[f64]) -> f64 {
    let total: f64 = class_mass.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    class_mass
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

fn majority(class_mass: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in class_mass.iter().enumerate() {
        if v > class_mass[best] {
            best = c;
        }
    }
    best
}

struct Trainer<'a> {
    schema: &'a CubeSchema,
    ls: &'a LabeledSchema,
    coords: Vec<Vec<usize>>,
    mass: Vec<f64>,
    n_classes: usize,
}

impl Trainer<'_> {
    fn class_mass(&self, cells: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes];
        for &i in cells {
            out[self.coords[i][self.ls.class_dim]] += self.mass[i];
        }
        out
    }

    fn branches(&self, cells: &[usize], dim: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.schema.shape()[dim]];
        for &i in cells {
            out[self.coords[i][dim]].push(i);
        }
        out
    }

    fn gain(&self, cells: &[usize], parent_entropy: f64, parent_total: f64, dim: usize) -> f64 {
        let remainder: f64 = self
            .branches(cells, dim)
            .iter()
            .map(|b| {
                let cm = self.class_mass(b);
                let t: f64 = cm.iter().sum();
                if t > 0.0 {
                    t / parent_total * entropy(&cm)
                } else {
                    0.0
                }
            })
            .sum();
        parent_entropy - remainder
    }

    fn grow(&self, cells: &[usize], available: &[usize], depth: usize, max_depth: usize, fallback: usize) -> Node {
        let cm = self.class_mass(cells);
        let total: f64 = cm.iter().sum();
        if total <= 0.0 {
            return Node::Leaf { class: fallback };
        }
        let label = majority(&cm);
        let h = entropy(&cm);
        if depth >= max_depth || available.is_empty() || h <= 0.0 {
            return Node::Leaf { class: label };
        }
        let mut best: Option<(usize, f64)> = None;
        for &dim in available {
            let g = self.gain(cells, h, total, dim);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((dim, g));
            }
        }
        let (dim, g) = best.expect("available is non-empty");
        if g <= GAIN_EPS {
            return Node::Leaf { class: label };
        }
        let rest: Vec<usize> = available.iter().copied().filter(|&d| d != dim).collect();
        let children = self
            .branches(cells, dim)
            .iter()
            .map(|b| self.grow(b, &rest, depth + 1, max_depth, label))
            .collect();
        Node::Split {
            dim,
            name: self.schema.dims()[dim].name().to_string(),
            majority: label,
            children,
        }
    }
}

/// Trains ID3 with information gain on per-cell counts. On equal gain the
/// lowest feature dimension wins.
/// Branches with no mass predict their parent's majority class.
pub fn train_id3(counts: &CellVector, ls: &LabeledSchema, max_depth: usize) -> Result<DecisionTree> {
    let schema = counts.schema();
    LabeledSchema::new(schema, ls.features.clone(), ls.class_dim)?;
    let trainer = Trainer {
        schema,
        ls,
        coords: (0..schema.m()).map(|i| schema.coord_of(i)).collect(),
        mass: counts.values().iter().map(|v| v.max(0.0)).collect(),
        n_classes: schema.shape()[ls.class_dim],
    };
    let cells: Vec<usize> = (0..schema.m()).collect();
    let root = trainer.grow(&cells, &ls.features, 0, max_depth, 0);
    Ok(DecisionTree {
        class_dim: ls.class_dim,
        class_labels: schema.dims()[ls.class_dim].bins().to_vec(),
        root,
    })
}

/// Trains on the per-cell counts a release implies under `method`.
pub fn train_id3_from_histogram(
    h: &ReleasedHistogram,
    ls: &LabeledSchema,
    max_depth: usize,
    method: Method,
) -> Result<DecisionTree> {
    let cells = CellVector::new(h.schema().clone(), cell_estimates(h, method)?)?;
    train_id3(&cells, ls, max_depth)
}
