//! Fixed-shape embeddings (tensor train, Khatri-Rao, dense) and a generic
//! planner that applies any embedding along a data contraction tree.

use crate::error::{Error, Result};
use crate::network::TensorNetwork;
use crate::plan::{ContractionTree, Linearization};
use crate::set::VertexSet;
use crate::sketch::SketchSpec;

use super::{Embedding, EmbeddingKind, PlanStep, SketchPlan, StepRole};

fn attach_edge(net: &mut TensorNetwork, spec: &SketchSpec, k: usize, j: usize) -> Result<usize> {
    let name = spec.data.edge(spec.sketch_edges[j]).name.clone();
    net.add_edge(name, &[k], true, spec.sketch_size(j))
}

fn finish(
    kind: EmbeddingKind,
    network: TensorNetwork,
    attach: Vec<(usize, usize)>,
    output: usize,
) -> Result<Embedding> {
    let n = network.num_vertices();
    let mut emb = Embedding {
        kind,
        network,
        attach,
        output: vec![output],
        linearization: Linearization { order: (0..n).collect() },
        variances: vec![],
    };
    emb.set_variances_from_rows()?;
    Ok(emb)
}

/// Chain c_1 - c_2 - ... - c_N with bonds of size m; output at c_N.
pub fn build_tt_embedding(spec: &SketchSpec) -> Result<Embedding> {
    spec.validate()?;
    let n = spec.n_sketch();
    if n == 0 {
        return Err(Error::NothingToSketch);
    }
    let mut net = TensorNetwork::new();
    let mut attach = Vec::with_capacity(n);
    for j in 0..n {
        let k = net.add_vertex(format!("c{}", j + 1));
        attach.push((attach_edge(&mut net, spec, k, j)?, j));
    }
    for j in 1..n {
        net.add_edge(format!("r{j}"), &[j - 1, j], false, spec.m)?;
    }
    let out = net.add_edge("out", &[n - 1], true, spec.m)?;
    finish(EmbeddingKind::TensorTrain, net, attach, out)
}

/// Matrices S_j (s_j × m) sharing one dangling hyperedge of size m. Each
/// entry has variance m^(-1/N) so the sketch is unbiased.
pub fn build_khatri_rao_embedding(spec: &SketchSpec) -> Result<Embedding> {
    spec.validate_structure()?;
    let n = spec.n_sketch();
    if n == 0 {
        return Err(Error::NothingToSketch);
    }
    let mut net = TensorNetwork::new();
    let mut attach = Vec::with_capacity(n);
    for j in 0..n {
        let k = net.add_vertex(format!("S{}", j + 1));
        attach.push((attach_edge(&mut net, spec, k, j)?, j));
    }
    let all: Vec<usize> = (0..n).collect();
    let out = net.add_edge("out", &all, true, spec.m)?;
    let v = (spec.m as f64).powf(-1.0 / n as f64);
    Ok(Embedding {
        kind: EmbeddingKind::KhatriRao,
        network: net,
        attach,
        output: vec![out],
        linearization: Linearization { order: all },
        variances: vec![v; n],
    })
}

/// One Gaussian tensor over every sketch edge plus the output.
pub fn build_dense_embedding(spec: &SketchSpec) -> Result<Embedding> {
    spec.validate_structure()?;
    let n = spec.n_sketch();
    if n == 0 {
        return Err(Error::NothingToSketch);
    }
    let mut net = TensorNetwork::new();
    let k = net.add_vertex("G");
    let attach = (0..n).map(|j| attach_edge(&mut net, spec, k, j).map(|e| (e, j))).collect::<Result<Vec<_>>>()?;
    let out = net.add_edge("out", &[k], true, spec.m)?;
    finish(EmbeddingKind::Dense, net, attach, out)
}

/// Plan that follows `t0` on the data and absorbs each embedding vertex as
/// soon as it is ready: its attached data vertices are in the operand, it
/// touches the operand, and its graph neighbours placed earlier in the
/// linearization are already in the operand.
pub fn plan_generic(spec: &SketchSpec, t0: &ContractionTree, emb: &Embedding) -> Result<SketchPlan> {
    spec.validate_structure()?;
    let nd = spec.n_data();
    if t0.vertices() != &VertexSet::range(0, nd) {
        return Err(Error::InvalidTree("tree does not cover the data vertices".into()));
    }
    let ne = emb.num_vertices();
    let g = &emb.network;
    let mut rank = vec![0; ne];
    for (p, &k) in emb.linearization.order.iter().enumerate() {
        rank[k] = p;
    }
    // data vertices each embedding vertex is attached to
    let mut needs = vec![VertexSet::new(); ne];
    for &(e, j) in &emb.attach {
        needs[g.edge(e).endpoints[0]].insert(spec.sketch_vertex(j));
    }
    // embedding neighbours through non-attach edges
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); ne];
    let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for e in g.edges() {
        for &u in &e.endpoints {
            for &w in &e.endpoints {
                if u != w {
                    nbrs[u].push(w);
                    if e.endpoints.len() == 2 && rank[w] < rank[u] {
                        earlier[u].push(w);
                    }
                }
            }
        }
    }

    let mut sets: Vec<VertexSet> = (0..nd).map(VertexSet::singleton).collect();
    let mut owner: Vec<usize> = (0..nd).collect();
    let mut absorbed = vec![false; ne];
    let mut steps = Vec::new();

    let absorb_ready = |o: usize, sets: &mut Vec<VertexSet>, absorbed: &mut Vec<bool>, steps: &mut Vec<PlanStep>| loop {
        let set = &sets[o];
        let ready = emb.linearization.order.iter().copied().find(|&k| {
            !absorbed[k]
                && needs[k].is_subset(set)
                && (!needs[k].is_empty() || nbrs[k].iter().any(|&w| set.contains(nd + w)))
                && earlier[k].iter().all(|&w| set.contains(nd + w))
        });
        match ready {
            Some(k) => {
                steps.push(PlanStep {
                    left: sets[o].clone(),
                    right: VertexSet::singleton(nd + k),
                    role: StepRole::Absorb,
                });
                sets[o].insert(nd + k);
                absorbed[k] = true;
            }
            None => break,
        }
    };

    for v in 0..nd {
        absorb_ready(v, &mut sets, &mut absorbed, &mut steps);
    }
    for (i, (u, v)) in t0.path().iter().enumerate() {
        let ou = owner[u.first().unwrap()];
        let ov = owner[v.first().unwrap()];
        steps.push(PlanStep { left: sets[ou].clone(), right: sets[ov].clone(), role: StepRole::Data(i) });
        let joined = sets[ou].union(&sets[ov]);
        for x in joined.iter().filter(|&x| x < nd) {
            owner[x] = ou;
        }
        sets[ou] = joined;
        absorb_ready(ou, &mut sets, &mut absorbed, &mut steps);
    }
    let root = owner[0];
    for &k in &emb.linearization.order {
        if !absorbed[k] {
            steps.push(PlanStep {
                left: sets[root].clone(),
                right: VertexSet::singleton(nd + k),
                role: StepRole::Absorb,
            });
            sets[root].insert(nd + k);
            absorbed[k] = true;
        }
    }
    SketchPlan::new(spec, emb, steps)
}
