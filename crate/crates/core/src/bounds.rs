//! Closed-form sketching costs and lower bounds. All quantities are exact
//! integers in multiply-add units; square roots are rounded up.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flops::{ceil_sqrt, Flops};
use crate::plan::{classify_contractions, Classification, ContractionKind, ContractionTree, GraphView};
use crate::set::VertexSet;
use crate::sketch::SketchSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContractionLabels {
    pub a: Flops,
    pub b: Flops,
    pub c: Flops,
    pub d: Flops,
}

impl ContractionLabels {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        ContractionLabels { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn abcd(&self) -> Flops {
        &(&self.a * &self.b) * &(&self.c * &self.d)
    }

    pub fn swapped(&self) -> Self {
        ContractionLabels { a: self.c.clone(), b: self.b.clone(), c: self.a.clone(), d: self.d.clone() }
    }
}

/// Data graph without the sketch edges.
pub fn residual_view(spec: &SketchSpec) -> GraphView {
    GraphView::from_network_filtered(&spec.data, |e| !spec.is_sketch_edge(e))
}

/// Labels of contracting data subsets `u` and `v`, read off the residual graph.
pub fn labels_of(spec: &SketchSpec, u: &VertexSet, v: &VertexSet) -> ContractionLabels {
    let (mut a, mut b, mut c, mut d) = (Flops::one(), Flops::one(), Flops::one(), Flops::one());
    let uv = u.union(v);
    for (e, edge) in spec.data.edges().iter().enumerate() {
        if spec.is_sketch_edge(e) {
            continue;
        }
        let in_u = edge.endpoints.iter().any(|&w| u.contains(w));
        let in_v = edge.endpoints.iter().any(|&w| v.contains(w));
        let leaves = edge.dangling || edge.endpoints.iter().any(|&w| !uv.contains(w));
        let s = Flops::from_u64(edge.size as u64);
        match (in_u, in_v, leaves) {
            (true, true, true) => d = d * s,
            (true, true, false) => b = b * s,
            (true, false, true) => a = a * s,
            (false, true, true) => c = c * s,
            _ => {}
        }
    }
    ContractionLabels { a, b, c, d }
}

pub fn labels(spec: &SketchSpec, t0: &ContractionTree, i: usize) -> Result<ContractionLabels> {
    let path = t0.path();
    let (u, v) = path.get(i).ok_or_else(|| Error::InvalidArgument(format!("contraction index {i} out of range")))?;
    Ok(labels_of(spec, u, v))
}

fn big(m: usize) -> BigUint {
    BigUint::from(m)
}

/// y = abcd·m² + m²·d·√(abcm)·min(√a, √c).
pub fn y_cost(l: &ContractionLabels, m: usize) -> Flops {
    let m2 = big(m) * big(m);
    let abcd = l.abcd().0;
    let small = l.a.0.clone().min(l.c.0.clone());
    let root = ceil_sqrt(&(&l.a.0 * &l.b.0 * &l.c.0 * big(m) * small));
    Flops(&abcd * &m2 + &m2 * &l.d.0 * root)
}

/// z = abcd, times m when the operands carry sketch edges.
pub fn z_cost(l: &ContractionLabels, has_sketch_edges: bool, m: usize) -> Flops {
    if has_sketch_edges {
        l.abcd().scale(m as u64)
    } else {
        l.abcd()
    }
}

/// ⌈m^{2.5}⌉.
pub fn m_pow_2_5(m: usize) -> Flops {
    Flops(ceil_sqrt(&(big(m).pow(5))))
}

/// Where the Kronecker-stage matrix of a sketch edge is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SketchPoint {
    /// Directly on the data vertex, before any contraction.
    Direct,
    /// On the operand carrying the edge, just before this D contraction.
    Before(usize),
    /// On the output of the last D contraction.
    After(usize),
}

/// Product of the sizes of all open edges of `set` in the data network.
pub fn data_size(spec: &SketchSpec, set: &VertexSet) -> Flops {
    GraphView::from_network(&spec.data).cut_size(set)
}

/// Cost table f(k) over every sketch point for edge j, in candidate order.
pub fn stt_table(spec: &SketchSpec, cls: &Classification, j: usize, m: usize) -> Vec<(SketchPoint, Flops)> {
    let s = spec.sketch_size(j) as u64;
    let vj = spec.sketch_vertex(j);
    let ds = &cls.d[j];
    let per: Vec<(ContractionLabels, bool)> = ds
        .iter()
        .map(|&i| {
            let (u, v) = &cls.path[i];
            (labels_of(spec, u, v), u.contains(vj))
        })
        .collect();
    let tail_m = |from: usize| -> Flops { per[from..].iter().map(|(l, _)| l.abcd().scale(m as u64)).sum() };
    let head_s = |to: usize| -> Flops { per[..to].iter().map(|(l, _)| l.abcd().scale(s)).sum() };
    let mut out = Vec::with_capacity(ds.len() + 2);
    let direct = data_size(spec, &VertexSet::singleton(vj)).scale(m as u64);
    out.push((SketchPoint::Direct, direct + tail_m(0)));
    for (p, &i) in ds.iter().enumerate() {
        let (l, own_is_u) = &per[p];
        let own = if *own_is_u { &l.a } else { &l.c };
        let sketch = (&(own * &l.b) * &l.d).scale(s).scale(m as u64);
        out.push((SketchPoint::Before(i), head_s(p) + sketch + tail_m(p)));
    }
    if let Some(&last) = ds.last() {
        let xs = residual_view(spec).cut_size(&cls.x[j]).scale(s).scale(m as u64);
        out.push((SketchPoint::After(last), head_s(ds.len()) + xs));
    }
    out
}

/// Minimum of f(k); ties go to the earliest candidate.
pub fn stt_with(spec: &SketchSpec, cls: &Classification, j: usize, m: usize) -> (Flops, SketchPoint) {
    let mut best: Option<(Flops, SketchPoint)> = None;
    for (p, f) in stt_table(spec, cls, j, m) {
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, p));
        }
    }
    best.unwrap()
}

pub fn stt_cost(spec: &SketchSpec, t0: &ContractionTree, j: usize, m: usize) -> Result<(Flops, SketchPoint)> {
    let cls = classify_contractions(spec, t0)?;
    if j >= spec.n_sketch() {
        return Err(Error::InvalidArgument(format!("sketch edge index {j} out of range")));
    }
    Ok(stt_with(spec, &cls, j, m))
}

fn has_sketch(spec: &SketchSpec, set: &VertexSet) -> bool {
    (0..spec.n_sketch()).any(|j| set.contains(spec.sketch_vertex(j)))
}

pub fn lower_bound_uniform(spec: &SketchSpec, t0: &ContractionTree, m: usize) -> Result<Flops> {
    let cls = classify_contractions(spec, t0)?;
    for v in 0..spec.n_data() {
        if spec.sketch_of_vertex(v).is_none() {
            return Err(Error::UniformBoundInapplicable(spec.data.vertex_name(v).to_string()));
        }
    }
    let mut total = Flops::zero();
    for j in 0..spec.n_sketch() {
        total += data_size(spec, &VertexSet::singleton(spec.sketch_vertex(j))).scale(m as u64);
    }
    for &i in &cls.s {
        let (u, v) = &cls.path[i];
        total += y_cost(&labels_of(spec, u, v), m);
    }
    Ok(total)
}

pub fn lower_bound_general(spec: &SketchSpec, t0: &ContractionTree, m: usize) -> Result<Flops> {
    let cls = classify_contractions(spec, t0)?;
    let mut total = Flops::zero();
    for j in 0..spec.n_sketch() {
        total += stt_with(spec, &cls, j, m).0;
    }
    let m2 = (m as u64) * (m as u64);
    for &i in &cls.s {
        let (u, v) = &cls.path[i];
        total += labels_of(spec, u, v).abcd().scale(m2);
    }
    total += m_pow_2_5(m).scale(spec.n_sketch() as u64);
    for &i in &cls.i {
        let (u, v) = &cls.path[i];
        total += z_cost(&labels_of(spec, u, v), has_sketch(spec, &u.union(v)), m);
    }
    Ok(total)
}

/// Achieved cost over the general lower bound.
pub fn approx_ratio(achieved: &Flops, spec: &SketchSpec, t0: &ContractionTree, m: usize) -> Result<f64> {
    let lb = lower_bound_general(spec, t0, m)?;
    Ok(achieved.ratio(&lb.max(Flops::one())))
}

/// True iff every vertex carries a sketch edge and every S contraction has b ≥ m.
pub fn tree_optimal(spec: &SketchSpec, t0: &ContractionTree, m: usize) -> Result<bool> {
    let cls = classify_contractions(spec, t0)?;
    if (0..spec.n_data()).any(|v| spec.sketch_of_vertex(v).is_none()) {
        return Ok(false);
    }
    Ok(cls.s.iter().all(|&i| {
        let (u, v) = &cls.path[i];
        labels_of(spec, u, v).b >= Flops::from_u64(m as u64)
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionCost {
    pub index: usize,
    pub kind: String,
    pub labels: ContractionLabels,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Flops>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Flops>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SketchEdgeCost {
    pub edge: String,
    pub stt: Flops,
    pub point: SketchPoint,
}

/// Achieved cost and the itemized terms (stt, y, z and their sums) are in
/// flops, two per multiply-add. The lower bounds are multiply-add counts.
#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    pub m: usize,
    pub achieved_flops: Flops,
    pub term_kron: Flops,
    pub term_s: Flops,
    pub term_i: Flops,
    pub lb_uniform: Option<Flops>,
    pub lb_general: Flops,
    pub ratio: f64,
    pub tree_optimal: bool,
    pub contractions: Vec<ContractionCost>,
    pub sketch_edges: Vec<SketchEdgeCost>,
}

/// Itemized cost terms and bounds for a plan that achieved `achieved` flops.
pub fn cost_report(spec: &SketchSpec, t0: &ContractionTree, achieved: Flops) -> Result<CostReport> {
    let m = spec.m;
    let cls = classify_contractions(spec, t0)?;
    let mut sketch_edges = Vec::new();
    let mut term_kron = Flops::zero();
    for j in 0..spec.n_sketch() {
        let (stt, point) = stt_with(spec, &cls, j, m);
        let stt = stt.scale(2);
        term_kron += &stt;
        sketch_edges.push(SketchEdgeCost { edge: spec.data.edge(spec.sketch_edges[j]).name.clone(), stt, point });
    }
    let mut contractions = Vec::new();
    let (mut term_s, mut term_i) = (Flops::zero(), Flops::zero());
    for (i, (u, v)) in cls.path.iter().enumerate() {
        let l = labels_of(spec, u, v);
        let (kind, y, z) = match cls.kinds[i] {
            ContractionKind::S => {
                let y = y_cost(&l, m).scale(2);
                term_s += &y;
                ("S".to_string(), Some(y), None)
            }
            ContractionKind::I => {
                let z = z_cost(&l, has_sketch(spec, &u.union(v)), m).scale(2);
                term_i += &z;
                ("I".to_string(), None, Some(z))
            }
            ContractionKind::D(j) => (format!("D({})", spec.data.edge(spec.sketch_edges[j]).name), None, None),
        };
        contractions.push(ContractionCost { index: i, kind, labels: l, y, z });
    }
    let lb_uniform = lower_bound_uniform(spec, t0, m).ok();
    let lb_general = lower_bound_general(spec, t0, m)?;
    let denom = lb_uniform.clone().unwrap_or_else(|| lb_general.clone()).max(Flops::one());
    Ok(CostReport {
        m,
        ratio: achieved.ratio(&denom),
        achieved_flops: achieved,
        term_kron,
        term_s,
        term_i,
        lb_uniform,
        lb_general,
        tree_optimal: tree_optimal(spec, t0, m)?,
        contractions,
        sketch_edges,
    })
}
