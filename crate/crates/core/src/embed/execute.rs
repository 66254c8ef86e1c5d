//! Running a plan on bound data and the dense oracles used to check it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::network::{materialize_network, ContractionState};
use crate::rng::RandomSource;
use crate::sketch::SketchSpec;
use crate::tensor::DenseTensor;

use super::{compose, Embedding, SketchPlan};

#[derive(Clone, Debug, Serialize)]
pub struct Execution {
    #[serde(skip)]
    pub output: DenseTensor,
    pub step_flops: Vec<Flops>,
    pub total_flops: Flops,
}

/// Draw the embedding tensors from `src` and run the plan.
pub fn execute_plan(plan: &SketchPlan, spec: &SketchSpec, emb: &Embedding, src: &RandomSource) -> Result<Execution> {
    let tensors = emb.instantiate(src)?;
    execute_plan_with(plan, spec, emb, &tensors)
}

/// Run the plan with given embedding tensors (G_E mode labels). The output
/// has the sketch output mode first, then the unsketched dangling data
/// modes in ascending edge order.
pub fn execute_plan_with(
    plan: &SketchPlan,
    spec: &SketchSpec,
    emb: &Embedding,
    tensors: &[DenseTensor],
) -> Result<Execution> {
    let comp = compose(spec, emb, Some(tensors))?;
    if let Some(v) = (0..spec.n_data()).find(|&v| comp.network.tensor(v).is_none()) {
        return Err(Error::MissingOperand(spec.data.vertex_name(v).to_string()));
    }
    let mut state = ContractionState::new(&comp.network);
    let mut step_flops = Vec::with_capacity(plan.steps.len());
    for s in &plan.steps {
        let f = state.contract_pair(&s.left, &s.right).map_err(|e| match e {
            Error::InvalidContraction(msg) => Error::PlanDataInconsistency(msg),
            other => other,
        })?;
        step_flops.push(f);
    }
    let total_flops = step_flops.iter().sum();
    let t = state.finish().map_err(|e| Error::PlanDataInconsistency(e.to_string()))?;
    let mut order = comp.output_edges(emb);
    let mut rest: Vec<usize> = comp.network.dangling_edges().into_iter().filter(|e| !order.contains(e)).collect();
    rest.sort_unstable();
    order.extend(rest);
    let output = t.permute(&order)?;
    Ok(Execution { output, step_flops, total_flops })
}

/// The embedding as one dense tensor with modes (output, attach edges in
/// sketch-edge order). Labels are G_E edge ids.
pub fn materialize_embedding(emb: &Embedding, tensors: &[DenseTensor], limit: u128) -> Result<DenseTensor> {
    let mut net = emb.network.clone();
    if tensors.len() != emb.num_vertices() {
        return Err(Error::PlanDataInconsistency(format!(
            "{} tensors for {} vertices",
            tensors.len(),
            emb.num_vertices()
        )));
    }
    for (k, t) in tensors.iter().enumerate() {
        net.bind_tensor(k, t.clone())?;
    }
    let mut order = emb.output.clone();
    order.extend(emb.attach.iter().map(|&(e, _)| e));
    materialize_network(&net, Some(&order), limit)
}

/// The data as one dense tensor with modes (sketch edges in order, then the
/// other dangling edges ascending). Labels are data edge ids.
pub fn materialize_data(spec: &SketchSpec, limit: u128) -> Result<DenseTensor> {
    let mut order = spec.sketch_edges.clone();
    let mut rest: Vec<usize> = spec.data.dangling_edges().into_iter().filter(|e| !order.contains(e)).collect();
    rest.sort_unstable();
    order.extend(rest);
    materialize_network(&spec.data, Some(&order), limit)
}

/// Dense oracle: embedding matrix applied to the data tensor, with the
/// same mode order as [`execute_plan_with`].
pub fn dense_sketch(spec: &SketchSpec, emb: &Embedding, tensors: &[DenseTensor], limit: u128) -> Result<DenseTensor> {
    let e = materialize_embedding(emb, tensors, limit)?;
    let d = materialize_data(spec, limit)?;
    let mut e = e;
    // relabel embedding attach modes to the data sketch edge ids, and the
    // output to a label no data edge uses
    let out_label = spec.data.num_edges();
    let attach: Vec<(usize, usize)> = emb.attach.clone();
    let out = emb.output[0];
    e.relabel(|l| {
        if l == out {
            out_label
        } else {
            attach.iter().find(|&&(a, _)| a == l).map(|&(_, j)| spec.sketch_edges[j]).unwrap_or(l)
        }
    });
    let (r, _) = e.contract(&d, &[])?;
    Ok(r)
}
