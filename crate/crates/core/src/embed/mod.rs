//! Embedding networks, their builders, the accuracy condition and plan execution.

mod alg1;
mod check;
mod execute;
mod lazy;
mod simple;

pub use alg1::{
    build_alg1_embedding, build_alg1_embedding_with, build_tree_embedding, zi_internal_edge, zi_split_factor,
    Alg1Options, MergeShape,
};
pub use check::{check_sufficient_condition, row_sizes, ConditionReport};
pub use execute::{dense_sketch, execute_plan, execute_plan_with, materialize_data, materialize_embedding, Execution};
pub use lazy::{is_rank_one, rank_one_gain};
pub use simple::{build_dense_embedding, build_khatri_rao_embedding, build_tt_embedding, plan_generic};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::network::TensorNetwork;
use crate::plan::{ContractionTree, GraphView, Linearization};
use crate::rng::{gaussian_tensor, RandomSource};
use crate::set::VertexSet;
use crate::sketch::SketchSpec;
use crate::tensor::DenseTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    Alg1,
    Tree,
    TensorTrain,
    KhatriRao,
    Dense,
}

/// An embedding network G_E. Attach edges are dangling in G_E and are
/// identified with the data sketch edges when composed.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub kind: EmbeddingKind,
    pub network: TensorNetwork,
    /// (G_E edge, sketch edge index j), ordered by j.
    pub attach: Vec<(usize, usize)>,
    /// Output sketch edges of G_E.
    pub output: Vec<usize>,
    pub linearization: Linearization,
    pub variances: Vec<f64>,
}

impl Embedding {
    pub fn num_vertices(&self) -> usize {
        self.network.num_vertices()
    }

    pub fn is_attach(&self, e: usize) -> bool {
        self.attach.iter().any(|&(a, _)| a == e)
    }

    /// Output size: product of the output edge sizes.
    pub fn output_size(&self) -> usize {
        self.output.iter().map(|&e| self.network.edge(e).size).product()
    }

    /// Gaussian tensors for every vertex, in G_E mode order. Vertex k draws
    /// from `src.derive(k)`.
    pub fn instantiate(&self, src: &RandomSource) -> Result<Vec<DenseTensor>> {
        (0..self.num_vertices())
            .map(|k| {
                gaussian_tensor(
                    self.network.incidence(k).to_vec(),
                    self.network.shape(k),
                    self.variances[k],
                    &src.derive(k as u64),
                )
            })
            .collect()
    }

    /// Set variances to 1 / (row size under the recorded linearization).
    pub(crate) fn set_variances_from_rows(&mut self) -> Result<()> {
        let rows = row_sizes(self, &self.linearization.order)?;
        self.variances = rows.iter().map(|r| 1.0 / r.to_f64()).collect();
        Ok(())
    }
}

/// Data and embedding joined into one network. Data vertices and edges keep
/// their ids; embedding vertex k becomes `n_data + k`.
#[derive(Clone, Debug)]
pub struct Composed {
    pub network: TensorNetwork,
    pub n_data: usize,
    /// G_E edge id → combined edge id.
    pub edge_map: Vec<usize>,
}

impl Composed {
    pub fn output_edges(&self, emb: &Embedding) -> Vec<usize> {
        emb.output.iter().map(|&e| self.edge_map[e]).collect()
    }

    /// The combined view restricted to embedding edges (L).
    pub fn embedding_view(&self, spec: &SketchSpec) -> GraphView {
        let data_edges = spec.data.num_edges();
        GraphView::from_network_filtered(&self.network, |e| e >= data_edges || spec.is_sketch_edge(e))
    }

    /// The combined view without embedding edges (R).
    pub fn residual_view(&self, spec: &SketchSpec) -> GraphView {
        let data_edges = spec.data.num_edges();
        GraphView::from_network_filtered(&self.network, |e| e < data_edges && !spec.is_sketch_edge(e))
    }
}

/// Join data and embedding. Tensors are bound when `tensors` is given and the
/// data network is bound.
pub fn compose(spec: &SketchSpec, emb: &Embedding, tensors: Option<&[DenseTensor]>) -> Result<Composed> {
    let data = &spec.data;
    let nd = data.num_vertices();
    let mut net = TensorNetwork::new();
    for v in 0..nd {
        net.add_vertex(data.vertex_name(v));
    }
    for k in 0..emb.num_vertices() {
        net.add_vertex(emb.network.vertex_name(k));
    }
    let mut attach_vertex = vec![None; spec.n_sketch()];
    for &(e, j) in &emb.attach {
        if j >= spec.n_sketch() {
            return Err(Error::PlanDataInconsistency(format!("attach edge for unknown sketch edge {j}")));
        }
        let edge = emb.network.edge(e);
        if edge.size != spec.sketch_size(j) {
            return Err(Error::PlanDataInconsistency(format!(
                "attach edge `{}` has size {} but sketch edge has size {}",
                edge.name,
                edge.size,
                spec.sketch_size(j)
            )));
        }
        attach_vertex[j] = Some(edge.endpoints[0]);
    }
    for (e, edge) in data.edges().iter().enumerate() {
        match spec.sketch_edges.iter().position(|&x| x == e) {
            Some(j) => {
                let k = attach_vertex[j].ok_or_else(|| {
                    Error::PlanDataInconsistency(format!("sketch edge `{}` is not attached", edge.name))
                })?;
                net.add_edge(edge.name.clone(), &[edge.endpoints[0], nd + k], false, edge.size)?;
            }
            None => {
                net.add_edge(edge.name.clone(), &edge.endpoints, edge.dangling, edge.size)?;
            }
        }
    }
    let mut edge_map = vec![usize::MAX; emb.network.num_edges()];
    for &(e, j) in &emb.attach {
        edge_map[e] = spec.sketch_edges[j];
    }
    for (e, edge) in emb.network.edges().iter().enumerate() {
        if emb.is_attach(e) {
            continue;
        }
        let ends: Vec<usize> = edge.endpoints.iter().map(|&k| nd + k).collect();
        edge_map[e] = net.add_edge(edge.name.clone(), &ends, edge.dangling, edge.size)?;
    }
    if let Some(ts) = tensors {
        if ts.len() != emb.num_vertices() {
            return Err(Error::PlanDataInconsistency(format!(
                "{} embedding tensors for {} vertices",
                ts.len(),
                emb.num_vertices()
            )));
        }
        for v in 0..nd {
            if let Some(t) = data.tensor(v) {
                net.bind_tensor(v, t.clone())?;
            }
        }
        for (k, t) in ts.iter().enumerate() {
            let mut t = t.clone();
            t.relabel(|l| edge_map[l]);
            net.bind_tensor(nd + k, t).map_err(|e| Error::PlanDataInconsistency(e.to_string()))?;
        }
    }
    Ok(Composed { network: net, n_data: nd, edge_map })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepRole {
    /// Kronecker-stage matrix for sketch edge j.
    Kronecker(usize),
    /// Part of sketching S contraction i.
    Merge(usize),
    /// Data contraction i (D or I) executed as is.
    Data(usize),
    /// Absorbing an embedding vertex (generic planner).
    Absorb,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanStep {
    pub left: VertexSet,
    pub right: VertexSet,
    pub role: StepRole,
}

#[derive(Clone, Debug)]
pub struct SketchPlan {
    pub n_data: usize,
    pub steps: Vec<PlanStep>,
    pub per_step_flops: Vec<Flops>,
    pub total_flops: Flops,
    pub resulting_tree: ContractionTree,
}

impl SketchPlan {
    /// Attach modeled flops (2·exp(cost_G)) and the resulting tree.
    pub fn new(spec: &SketchSpec, emb: &Embedding, steps: Vec<PlanStep>) -> Result<Self> {
        let comp = compose(spec, emb, None)?;
        let view = GraphView::from_network(&comp.network);
        let per_step_flops =
            steps.iter().map(|s| view.cost_size(&s.left, &s.right).map(|f| f.scale(2))).collect::<Result<Vec<_>>>()?;
        let total_flops = per_step_flops.iter().sum();
        let universe = VertexSet::range(0, comp.network.num_vertices());
        let path: Vec<(VertexSet, VertexSet)> = steps.iter().map(|s| (s.left.clone(), s.right.clone())).collect();
        let resulting_tree = if path.is_empty() && universe.len() == 1 {
            ContractionTree::leaf(0)
        } else {
            ContractionTree::from_path(&universe, &path)?
        };
        Ok(SketchPlan { n_data: comp.n_data, steps, per_step_flops, total_flops, resulting_tree })
    }

    /// Embedding vertices (combined ids) on the embedding-only side of a step.
    pub fn embedding_vertices(&self, step: &PlanStep) -> Vec<usize> {
        let data = VertexSet::range(0, self.n_data);
        [&step.left, &step.right].into_iter().filter(|s| s.is_disjoint(&data)).flat_map(|s| s.iter()).collect()
    }

    /// Flops of steps with a given role predicate.
    pub fn flops_where(&self, pred: impl Fn(&StepRole) -> bool) -> Flops {
        self.steps.iter().zip(&self.per_step_flops).filter(|(s, _)| pred(&s.role)).map(|(_, f)| f.clone()).sum()
    }
}
