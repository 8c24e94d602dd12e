use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};

/// Named, ordered parameter tensors of one network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub names: Vec<String>,
    pub tensors: Vec<Array2<f64>>,
}

/// Index of a tensor inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamId(pub usize);

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Array2<f64>) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Inserts every tensor into `graph` as a trainable leaf.
    pub fn bind(&self, graph: &Graph) -> Bound {
        Bound(self.tensors.iter().map(|t| graph.param(t.clone())).collect())
    }

    /// Inserts every tensor as a constant (inference, or a frozen network).
    pub fn bind_frozen(&self, graph: &Graph) -> Bound {
        Bound(self.tensors.iter().map(|t| graph.constant(t.clone())).collect())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Flat view of parameter `flat_index`, for finite-difference probes.
    pub fn flat_get(&self, flat_index: usize) -> f64 {
        let (t, i) = self.locate(flat_index);
        self.tensors[t].as_slice().expect("standard layout")[i]
    }

    pub fn flat_set(&mut self, flat_index: usize, value: f64) {
        let (t, i) = self.locate(flat_index);
        self.tensors[t].as_slice_mut().expect("standard layout")[i] = value;
    }

    fn locate(&self, mut flat_index: usize) -> (usize, usize) {
        for (t, tensor) in self.tensors.iter().enumerate() {
            if flat_index < tensor.len() {
                return (t, flat_index);
            }
            flat_index -= tensor.len();
        }
        panic!("flat parameter index out of range");
    }

    pub fn zeroed(&self) -> ParamSet {
        ParamSet {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| Array2::zeros(t.raw_dim())).collect(),
        }
    }
}

/// Graph handles for a bound [`ParamSet`], indexed by [`ParamId`].
#[derive(Debug, Clone)]
pub struct Bound(pub Vec<Var>);

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

pub(crate) fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

/// Glorot-uniform weight matrix.
pub(crate) fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(rng, fan_in, fan_out, bound)
}
