//! Sampling ‖Sx‖/‖x‖ for outer-product data without drawing whole embedding
//! tensors.
//!
//! With x = x_1 ⊗ ... ⊗ x_N, each Gaussian tensor only ever meets the data
//! through contractions with fixed operands. Conditioned on what has been
//! drawn so far, an undrawn i.i.d. N(0, σ²) tensor G(a, c) contracted with a
//! fixed F(a, b) is Gaussian with independent columns of covariance
//! σ²·FᵀF. So the contraction can be sampled as σ·Rᵀ·Z from the QR factor
//! of F, at a cost set by |b| instead of |a|. When F has no free modes the
//! result is again an undrawn i.i.d. tensor, with variance σ²‖F‖².
//!
//! Scaling each x_j to unit norm does not change the ratio, so every data
//! vertex enters as the scalar 1 and every attach mode has size 1.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::{gaussian_tensor, RandomSource};
use crate::set::VertexSet;
use crate::sketch::SketchSpec;
use crate::tensor::{DenseTensor, Label};

use super::{compose, Embedding, SketchPlan};

enum Operand {
    Fixed(DenseTensor),
    Undrawn { labels: Vec<Label>, shape: Vec<usize>, variance: f64 },
}

impl Operand {
    fn len(&self) -> usize {
        match self {
            Operand::Fixed(t) => t.len(),
            Operand::Undrawn { shape, .. } => shape.iter().product(),
        }
    }

    fn labels(&self) -> &[Label] {
        match self {
            Operand::Fixed(t) => t.labels(),
            Operand::Undrawn { labels, .. } => labels,
        }
    }

    fn draw(self, src: &RandomSource) -> Result<DenseTensor> {
        match self {
            Operand::Fixed(t) => Ok(t),
            Operand::Undrawn { labels, shape, variance } => gaussian_tensor(labels, shape, variance, src),
        }
    }
}

/// Whether the data is an outer product of the sketched vectors.
pub fn is_rank_one(spec: &SketchSpec) -> bool {
    (0..spec.data.num_edges()).all(|e| spec.is_sketch_edge(e))
}

/// G undrawn, F fixed, no batch modes.
fn undrawn_times_fixed(
    labels: Vec<Label>,
    shape: Vec<usize>,
    variance: f64,
    f: &DenseTensor,
    src: &RandomSource,
) -> Result<Operand> {
    let a: Vec<Label> = labels.iter().copied().filter(|l| f.labels().contains(l)).collect();
    let c: Vec<(Label, usize)> =
        labels.iter().zip(&shape).filter(|(l, _)| !a.contains(l)).map(|(&l, &s)| (l, s)).collect();
    let b: Vec<(Label, usize)> =
        f.labels().iter().zip(f.shape()).filter(|(l, _)| !a.contains(l)).map(|(&l, &s)| (l, s)).collect();
    let (c_labels, c_shape): (Vec<Label>, Vec<usize>) = c.into_iter().unzip();
    if b.is_empty() {
        let norm = f.norm();
        return Ok(Operand::Undrawn { labels: c_labels, shape: c_shape, variance: variance * norm * norm });
    }
    let (b_labels, b_shape): (Vec<Label>, Vec<usize>) = b.into_iter().unzip();
    let na: usize = a.iter().map(|&l| f.size_of(l).unwrap()).product();
    let nb: usize = b_shape.iter().product();
    let nc: usize = c_shape.iter().product();
    let order: Vec<Label> = a.iter().chain(&b_labels).copied().collect();
    let fm = DMatrix::from_row_slice(na, nb, f.permute(&order)?.data());
    let r = fm.qr().r();
    let z = gaussian_tensor(vec![0, 1], vec![r.nrows(), nc], 1.0, src)?;
    let zm = DMatrix::from_row_slice(r.nrows(), nc, z.data());
    let out = r.transpose() * zm * variance.sqrt();
    let labels: Vec<Label> = b_labels.into_iter().chain(c_labels).collect();
    let shape: Vec<usize> = b_shape.into_iter().chain(c_shape).collect();
    Ok(Operand::Fixed(DenseTensor::new(labels, shape, out.transpose().as_slice().to_vec())?))
}

fn combine(x: Operand, y: Operand, keep: &[Label], src: &RandomSource) -> Result<Operand> {
    let (x, y) = match (x, y) {
        (Operand::Fixed(a), Operand::Fixed(b)) => return Ok(Operand::Fixed(a.contract(&b, keep)?.0)),
        (u @ Operand::Undrawn { .. }, Operand::Fixed(f)) | (Operand::Fixed(f), u @ Operand::Undrawn { .. }) => (u, f),
        (p, q) => {
            // draw the smaller one
            let (small, big) = if p.len() <= q.len() { (p, q) } else { (q, p) };
            (big, small.draw(&src.derive(0))?)
        }
    };
    let shared = x.labels().iter().any(|l| y.labels().contains(l));
    match x {
        Operand::Undrawn { labels, shape, variance } if keep.is_empty() && shared => {
            undrawn_times_fixed(labels, shape, variance, &y, &src.derive(1))
        }
        other => Ok(Operand::Fixed(other.draw(&src.derive(2))?.contract(&y, keep)?.0)),
    }
}

/// One draw of ‖Sx‖/‖x‖ for data that is an outer product of its sketched
/// vectors, following the steps of `plan`. Exact in distribution.
pub fn rank_one_gain(plan: &SketchPlan, spec: &SketchSpec, emb: &Embedding, src: &RandomSource) -> Result<f64> {
    if !is_rank_one(spec) {
        return Err(Error::InvalidArgument("data has edges other than the sketched ones".into()));
    }
    let comp = compose(spec, emb, None)?;
    let net = &comp.network;
    let nd = comp.n_data;
    let size = |l: Label| if spec.is_sketch_edge(l) { 1 } else { net.edge(l).size };
    let mut groups: Vec<Option<(VertexSet, Operand)>> = (0..net.num_vertices())
        .map(|v| {
            let labels = net.incidence(v).to_vec();
            let shape: Vec<usize> = labels.iter().map(|&l| size(l)).collect();
            let op = if v < nd {
                Operand::Fixed(DenseTensor::new(labels, shape, vec![1.0])?)
            } else {
                Operand::Undrawn { labels, shape, variance: emb.variances[v - nd] }
            };
            Ok(Some((VertexSet::singleton(v), op)))
        })
        .collect::<Result<_>>()?;
    let mut owner: Vec<usize> = (0..net.num_vertices()).collect();
    let take = |groups: &mut Vec<Option<(VertexSet, Operand)>>, owner: &[usize], s: &VertexSet| {
        let g = s.first().map(|v| owner[v]).ok_or_else(|| Error::PlanDataInconsistency("empty operand".into()))?;
        match groups[g].take() {
            Some((set, op)) if &set == s => Ok((g, op)),
            _ => Err(Error::PlanDataInconsistency(format!("{s:?} is not a current operand"))),
        }
    };
    for (i, step) in plan.steps.iter().enumerate() {
        let (ga, a) = take(&mut groups, &owner, &step.left)?;
        let (_, b) = take(&mut groups, &owner, &step.right)?;
        let union = step.left.union(&step.right);
        let keep: Vec<Label> = a
            .labels()
            .iter()
            .copied()
            .filter(|l| b.labels().contains(l))
            .filter(|&l| {
                let e = net.edge(l);
                e.dangling || e.endpoints.iter().any(|u| !union.contains(*u))
            })
            .collect();
        let op = combine(a, b, &keep, &src.derive(i as u64))?;
        for v in union.iter() {
            owner[v] = ga;
        }
        groups[ga] = Some((union, op));
    }
    let mut live = groups.into_iter().flatten();
    let (_, last) = live.next().ok_or_else(|| Error::PlanDataInconsistency("no operands".into()))?;
    if live.next().is_some() {
        return Err(Error::PlanDataInconsistency("plan leaves several operands".into()));
    }
    Ok(last.draw(&src.derive(u64::MAX))?.norm())
}
