//! The sketching problem: a data network, the dangling edges to sketch and
//! the target sketch size.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::network::TensorNetwork;

#[derive(Clone, Debug)]
pub struct SketchSpec {
    pub data: Arc<TensorNetwork>,
    /// Sketched edges e_1..e_N, as edge ids of `data`.
    pub sketch_edges: Vec<usize>,
    pub m: usize,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

impl SketchSpec {
    pub fn new(data: impl Into<Arc<TensorNetwork>>, sketch_edges: Vec<usize>, m: usize) -> Result<Self> {
        let spec = SketchSpec { data: data.into(), sketch_edges, m, epsilon: None, delta: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        for &e in &self.sketch_edges {
            let edge = self.data.edge(e);
            if edge.size < self.m {
                return Err(Error::SketchDimensionTooSmall { edge: edge.name.clone(), size: edge.size, m: self.m });
            }
        }
        Ok(())
    }

    /// Every check except s_i ≥ m. The Khatri-Rao and dense baselines do
    /// not need sketched dimensions at least m.
    pub fn validate_structure(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("sketch size m must be at least 1".into()));
        }
        let mut seen = Vec::new();
        for &e in &self.sketch_edges {
            if e >= self.data.num_edges() {
                return Err(Error::InvalidNetwork(format!("unknown sketch edge {e}")));
            }
            let edge = self.data.edge(e);
            if !edge.dangling || edge.endpoints.len() != 1 {
                return Err(Error::UnsupportedSketchDimension(edge.name.clone()));
            }
            let v = edge.endpoints[0];
            if seen.contains(&v) {
                return Err(Error::UnsupportedSketchDimension(format!(
                    "{} (vertex `{}` already carries a sketch edge)",
                    edge.name,
                    self.data.vertex_name(v)
                )));
            }
            seen.push(v);
        }
        Ok(())
    }

    /// Spec that may have m above some sketched dimensions. Only the
    /// Khatri-Rao and dense builders accept it.
    pub fn new_unsized(data: impl Into<Arc<TensorNetwork>>, sketch_edges: Vec<usize>, m: usize) -> Result<Self> {
        let spec = SketchSpec { data: data.into(), sketch_edges, m, epsilon: None, delta: None };
        spec.validate_structure()?;
        Ok(spec)
    }

    /// Same data and sketch edges with a different sketch size.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        let spec = SketchSpec { m, ..self.clone() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_data(&self) -> usize {
        self.data.num_vertices()
    }

    pub fn n_sketch(&self) -> usize {
        self.sketch_edges.len()
    }

    /// Data vertex carrying sketch edge j.
    pub fn sketch_vertex(&self, j: usize) -> usize {
        self.data.edge(self.sketch_edges[j]).endpoints[0]
    }

    pub fn sketch_size(&self, j: usize) -> usize {
        self.data.edge(self.sketch_edges[j]).size
    }

    /// Index j of the sketch edge on vertex v, if any.
    pub fn sketch_of_vertex(&self, v: usize) -> Option<usize> {
        (0..self.n_sketch()).find(|&j| self.sketch_vertex(j) == v)
    }

    pub fn is_sketch_edge(&self, e: usize) -> bool {
        self.sketch_edges.contains(&e)
    }

    /// ε implied by m for a given δ and embedding size, √(N_E ln(1/δ)/m).
    /// Reported for reference only.
    pub fn implied_epsilon(&self, n_embedding: usize, delta: f64) -> f64 {
        (n_embedding as f64 * (1.0 / delta).ln() / self.m as f64).sqrt()
    }
}
