//! Weighted cuts on hypergraph views, undirected and linearized.

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::network::TensorNetwork;
use crate::set::VertexSet;

#[derive(Clone, Debug, PartialEq)]
pub struct ViewEdge {
    pub endpoints: Vec<usize>,
    pub dangling: bool,
    pub size: usize,
}

impl ViewEdge {
    fn weight(&self) -> f64 {
        (self.size as f64).ln()
    }
}

/// A hypergraph on vertices 0..n, usually a subset of a network's edges.
#[derive(Clone, Debug, Default)]
pub struct GraphView {
    pub n: usize,
    pub edges: Vec<ViewEdge>,
}

impl GraphView {
    pub fn from_network(net: &TensorNetwork) -> Self {
        Self::from_network_filtered(net, |_| true)
    }

    /// View keeping only the edges accepted by `keep`.
    pub fn from_network_filtered(net: &TensorNetwork, keep: impl Fn(usize) -> bool) -> Self {
        let edges = (0..net.num_edges())
            .filter(|&e| keep(e))
            .map(|e| {
                let h = net.edge(e);
                ViewEdge { endpoints: h.endpoints.clone(), dangling: h.dangling, size: h.size }
            })
            .collect();
        GraphView { n: net.num_vertices(), edges }
    }

    /// Edge e belongs to E(A): adjacent to A and leaving it (to V∖A or a free end).
    fn leaves(e: &ViewEdge, a: &VertexSet) -> bool {
        let mut inside = false;
        let mut outside = e.dangling;
        for &u in &e.endpoints {
            if a.contains(u) {
                inside = true;
            } else {
                outside = true;
            }
        }
        inside && outside
    }

    fn joins(e: &ViewEdge, a: &VertexSet, b: &VertexSet) -> bool {
        e.endpoints.iter().any(|&u| a.contains(u)) && e.endpoints.iter().any(|&u| b.contains(u))
    }

    fn check(a: &VertexSet, b: &VertexSet) -> Result<()> {
        if a.is_disjoint(b) {
            Ok(())
        } else {
            Err(Error::InvalidCutQuery)
        }
    }

    pub fn cut(&self, a: &VertexSet) -> f64 {
        self.edges.iter().filter(|e| Self::leaves(e, a)).map(|e| e.weight()).sum()
    }

    pub fn cut_size(&self, a: &VertexSet) -> Flops {
        Flops::product(self.edges.iter().filter(|e| Self::leaves(e, a)).map(|e| e.size))
    }

    pub fn cut_between(&self, a: &VertexSet, b: &VertexSet) -> Result<f64> {
        Self::check(a, b)?;
        Ok(self.edges.iter().filter(|e| Self::joins(e, a, b)).map(|e| e.weight()).sum())
    }

    pub fn cut_between_size(&self, a: &VertexSet, b: &VertexSet) -> Result<Flops> {
        Self::check(a, b)?;
        Ok(Flops::product(self.edges.iter().filter(|e| Self::joins(e, a, b)).map(|e| e.size)))
    }

    /// cut(A) + cut(B) − cut(A,B): log of the multiply-add count of contracting A with B.
    pub fn cost_pair(&self, a: &VertexSet, b: &VertexSet) -> Result<f64> {
        Ok(self.cut(a) + self.cut(b) - self.cut_between(a, b)?)
    }

    /// Exact form of `cost_pair`: product of the sizes of E(A) ∪ E(B).
    pub fn cost_size(&self, a: &VertexSet, b: &VertexSet) -> Result<Flops> {
        Self::check(a, b)?;
        Ok(Flops::product(self.edges.iter().filter(|e| Self::leaves(e, a) || Self::leaves(e, b)).map(|e| e.size)))
    }
}

/// Total order over embedding vertices; data vertices come first implicitly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Linearization {
    pub order: Vec<usize>,
}

impl Linearization {
    /// Rank of every vertex of a combined network where data vertices are
    /// 0..n_data and embedding vertex k is n_data + k.
    pub fn ranks(&self, n_data: usize) -> Vec<usize> {
        let mut rank: Vec<usize> = (0..n_data + self.order.len()).collect();
        for (p, &k) in self.order.iter().enumerate() {
            rank[n_data + k] = n_data + p;
        }
        rank
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirEdge {
    pub tail: usize,
    /// None for a free end.
    pub head: Option<usize>,
    pub size: usize,
}

/// Directed version of a graph view under a vertex ranking: contracted edges
/// point to the higher rank, dangling edges point out of the network.
#[derive(Clone, Debug)]
pub struct DirectedView {
    pub n: usize,
    pub edges: Vec<DirEdge>,
}

impl DirectedView {
    pub fn new(view: &GraphView, rank: &[usize]) -> Result<Self> {
        let mut edges = Vec::new();
        for e in &view.edges {
            match (e.endpoints.len(), e.dangling) {
                (1, true) => edges.push(DirEdge { tail: e.endpoints[0], head: None, size: e.size }),
                (1, false) => {}
                (2, false) => {
                    let (u, w) = (e.endpoints[0], e.endpoints[1]);
                    let (t, h) = if rank[u] < rank[w] { (u, w) } else { (w, u) };
                    edges.push(DirEdge { tail: t, head: Some(h), size: e.size });
                }
                _ => return Err(Error::NotAGraphEmbedding(format!("{:?}", e.endpoints))),
            }
        }
        Ok(DirectedView { n: view.n, edges })
    }

    fn out_of(e: &DirEdge, a: &VertexSet) -> bool {
        a.contains(e.tail) && e.head.is_none_or(|h| !a.contains(h))
    }

    pub fn cut(&self, a: &VertexSet) -> f64 {
        self.edges.iter().filter(|e| Self::out_of(e, a)).map(|e| (e.size as f64).ln()).sum()
    }

    pub fn cut_size(&self, a: &VertexSet) -> Flops {
        Flops::product(self.edges.iter().filter(|e| Self::out_of(e, a)).map(|e| e.size))
    }

    /// Weight of edges directed from A to B.
    pub fn cut_between(&self, a: &VertexSet, b: &VertexSet) -> Result<f64> {
        GraphView::check(a, b)?;
        Ok(self
            .edges
            .iter()
            .filter(|e| a.contains(e.tail) && e.head.is_some_and(|h| b.contains(h)))
            .map(|e| (e.size as f64).ln())
            .sum())
    }
}
