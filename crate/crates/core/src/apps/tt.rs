//! Tensor trains: sketching the left interface matrices X_(≤k) with a
//! tensor-train embedding built along the same chain, and a deterministic
//! truncated-SVD rounding used as a reference.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::instances::Instance;
use crate::network::TensorNetwork;
use crate::plan::ContractionTree;
use crate::rng::{gaussian_tensor, RandomSource};
use crate::tensor::DenseTensor;

const A: usize = 0;
const P: usize = 1;
const C: usize = 2;
const M: usize = 3;
const O: usize = 4;

/// Cores of shape (r_{k−1}, s_k, r_k) with r_0 = r_N = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorTrain {
    cores: Vec<DenseTensor>,
}

impl TensorTrain {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("a tensor train needs at least one core".into()));
        }
        let mut prev = 1;
        for (k, c) in cores.iter().enumerate() {
            if c.order() != 3 || c.shape()[0] != prev {
                return Err(Error::InvalidArgument(format!(
                    "core {k} has shape {:?}, left rank {prev} expected",
                    c.shape()
                )));
            }
            prev = c.shape()[2];
        }
        if prev != 1 {
            return Err(Error::InvalidArgument("last core must have right rank 1".into()));
        }
        let cores = cores
            .into_iter()
            .map(|c| DenseTensor::new(vec![A, P, C], c.shape().to_vec(), c.into_data()))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorTrain { cores })
    }

    /// Random cores with i.i.d. N(0, 1) entries and uniform interior rank r.
    pub fn random(n: usize, s: usize, r: usize, src: &RandomSource) -> Result<Self> {
        let cores = (0..n)
            .map(|k| {
                let r0 = if k == 0 { 1 } else { r };
                let r1 = if k + 1 == n { 1 } else { r };
                gaussian_tensor(vec![A, P, C], vec![r0, s, r1], 1.0, &src.derive(k as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        TensorTrain::new(cores)
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[2]).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    /// Left interface X_(≤k) as an (s_1⋯s_k) × r_k matrix.
    pub fn left_interface(&self, k: usize) -> Result<DMatrix<f64>> {
        if k == 0 || k > self.order() {
            return Err(Error::InvalidArgument(format!("boundary {k} out of range")));
        }
        let mut t = core_matrix(&self.cores[0], true);
        for c in &self.cores[1..k] {
            let r0 = c.shape()[0];
            let sr = c.shape()[1] * c.shape()[2];
            let cm = DMatrix::from_row_slice(r0, sr, c.data());
            let prod = &t * cm;
            // rows (idx, s) in row-major
            let rows = prod.nrows();
            let s = c.shape()[1];
            let r1 = c.shape()[2];
            t = DMatrix::from_fn(rows * s, r1, |i, j| prod[(i / s, (i % s) * r1 + j)]);
        }
        Ok(t)
    }

    /// X_(≤k)ᵀ X_(≤k), an r_k × r_k matrix, without forming the interface.
    pub fn left_gram(&self, k: usize) -> Result<DMatrix<f64>> {
        if k == 0 || k > self.order() {
            return Err(Error::InvalidArgument(format!("boundary {k} out of range")));
        }
        let mut g = DMatrix::identity(1, 1);
        for c in &self.cores[..k] {
            let (r0, s, r1) = (c.shape()[0], c.shape()[1], c.shape()[2]);
            let mut next = DMatrix::zeros(r1, r1);
            for i in 0..s {
                let slice = DMatrix::from_fn(r0, r1, |a, b| c.data()[(a * s + i) * r1 + b]);
                next += slice.transpose() * &g * &slice;
            }
            g = next;
        }
        Ok(g)
    }

    /// Dense tensor, row-major over the physical modes.
    pub fn full(&self) -> Result<Vec<f64>> {
        let t = self.left_interface(self.order())?;
        Ok(t.column(0).iter().copied().collect())
    }

    /// The train as a data network with bound tensors and the left-to-right tree.
    pub fn to_instance(&self) -> Result<Instance> {
        let n = self.order();
        let mut net = TensorNetwork::new();
        for k in 0..n {
            net.add_vertex(format!("v{}", k + 1));
        }
        let mut sketch = Vec::new();
        let mut bonds = Vec::new();
        for k in 0..n {
            sketch.push(net.add_edge(format!("x{}", k + 1), &[k], true, self.cores[k].shape()[1])?);
            if k + 1 < n {
                bonds.push(net.add_edge(format!("r{}", k + 1), &[k, k + 1], false, self.cores[k].shape()[2])?);
            }
        }
        for k in 0..n {
            let c = &self.cores[k];
            let mut labels = Vec::new();
            let mut shape = Vec::new();
            if k > 0 {
                labels.push(bonds[k - 1]);
                shape.push(c.shape()[0]);
            }
            labels.push(sketch[k]);
            shape.push(c.shape()[1]);
            if k + 1 < n {
                labels.push(bonds[k]);
                shape.push(c.shape()[2]);
            }
            net.bind_tensor(k, DenseTensor::new(labels, shape, c.data().to_vec())?)?;
        }
        let order: Vec<usize> = (0..n).collect();
        Ok(Instance { network: net, sketch_edges: sketch, tree: ContractionTree::left_to_right(&order)? })
    }
}

/// Core k as an (r_{k−1}·s) × r_k matrix (left) or r_{k−1} × (s·r_k) (right).
fn core_matrix(c: &DenseTensor, left: bool) -> DMatrix<f64> {
    let (r0, s, r1) = (c.shape()[0], c.shape()[1], c.shape()[2]);
    if left {
        DMatrix::from_row_slice(r0 * s, r1, c.data())
    } else {
        DMatrix::from_row_slice(r0, s * r1, c.data())
    }
}

fn core_from(mat: &DMatrix<f64>, r0: usize, s: usize, r1: usize) -> Result<DenseTensor> {
    let data: Vec<f64> = (0..mat.nrows()).flat_map(|i| (0..mat.ncols()).map(move |j| mat[(i, j)])).collect();
    DenseTensor::new(vec![A, P, C], vec![r0, s, r1], data)
}

/// Gaussian cores of a tensor-train embedding over the physical modes, with
/// the output at the last core: T_1 is (s_1, m), T_k is (m, s_k, m).
#[derive(Clone, Debug)]
pub struct TtSketch {
    pub m: usize,
    cores: Vec<DenseTensor>,
}

impl TtSketch {
    pub fn new(dims: &[usize], m: usize, src: &RandomSource) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("sketch size must be positive".into()));
        }
        let var = 1.0 / m as f64;
        let cores = dims
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                if k == 0 {
                    gaussian_tensor(vec![P, O], vec![s, m], var, &src.derive(0))
                } else {
                    gaussian_tensor(vec![M, P, O], vec![m, s, m], var, &src.derive(k as u64))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TtSketch { m, cores })
    }

    /// The embedding restricted to modes 1..=k, as an m × (s_1⋯s_k) matrix.
    pub fn dense(&self, k: usize) -> Result<DMatrix<f64>> {
        let first = &self.cores[0];
        let (s0, m) = (first.shape()[0], first.shape()[1]);
        // rows over (physical prefix), cols over output
        let mut t = DMatrix::from_row_slice(s0, m, first.data());
        for c in &self.cores[1..k] {
            let s = c.shape()[1];
            let cm = DMatrix::from_row_slice(m, s * m, c.data());
            let prod = &t * cm;
            let rows = prod.nrows();
            t = DMatrix::from_fn(rows * s, m, |i, j| prod[(i / s, (i % s) * m + j)]);
        }
        Ok(t.transpose())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TtLedger {
    pub m: usize,
    /// Flops to extend the sketch across core k (k = 1..N).
    pub per_core: Vec<Flops>,
    pub total: Flops,
    /// 2·N·s·R²·m with the largest rank and physical size.
    pub leading_model: f64,
    /// m ≥ R: outside the regime where the leading term dominates.
    pub outside_regime: bool,
}

#[derive(Clone, Debug)]
pub struct TtRoundSketch {
    /// S_(≤k) X_(≤k) as m × r_k matrices for boundaries k = 1..N−1.
    pub sketches: Vec<DMatrix<f64>>,
    /// S·vec(X), length m.
    pub full: Vec<f64>,
    pub ledger: TtLedger,
    pub embedding: TtSketch,
}

/// Sketch every left interface of the train with one tensor-train
/// embedding, reusing the chain from left to right.
pub fn tt_round_sketch(tt: &TensorTrain, m: usize, src: &RandomSource) -> Result<TtRoundSketch> {
    let emb = TtSketch::new(&tt.dims(), m, src)?;
    let n = tt.order();
    let mut per_core = Vec::with_capacity(n);
    let c0 = &tt.cores[0];
    let first = DenseTensor::new(vec![P, C], vec![c0.shape()[1], c0.shape()[2]], c0.data().to_vec())?;
    let (mut w, f) = first.contract(&emb.cores[0], &[])?;
    per_core.push(f);
    let mut sketches = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        sketches.push(cp_matrix(&w, O, C)?);
        w.relabel(|l| match l {
            C => A,
            O => M,
            x => x,
        });
        let (t, f1) = w.contract(&tt.cores[k], &[])?;
        let (t, f2) = t.contract(&emb.cores[k], &[])?;
        per_core.push(f1 + f2);
        w = t;
    }
    let full = w.permute(&[O, C])?.into_data();
    let total: Flops = per_core.iter().sum();
    let r = tt.ranks().into_iter().max().unwrap_or(1);
    let s = tt.dims().into_iter().max().unwrap_or(1);
    let leading_model = 2.0 * n as f64 * s as f64 * (r * r) as f64 * m as f64;
    let ledger = TtLedger { m, per_core, total, leading_model, outside_regime: m >= r };
    Ok(TtRoundSketch { sketches, full, ledger, embedding: emb })
}

fn cp_matrix(t: &DenseTensor, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let p = t.permute(&[rows, cols])?;
    Ok(DMatrix::from_row_slice(p.shape()[0], p.shape()[1], p.data()))
}

/// Deterministic rounding: right-to-left orthogonalization, then truncated
/// SVDs from left to right. Keeps at most `max_rank` singular values per
/// bond and drops those below the relative tolerance `tol`.
pub fn tt_round_svd(tt: &TensorTrain, max_rank: usize, tol: f64) -> Result<TensorTrain> {
    let n = tt.order();
    let mut cores: Vec<DenseTensor> = tt.cores.clone();
    for k in (1..n).rev() {
        let (r0, s, r1) = (cores[k].shape()[0], cores[k].shape()[1], cores[k].shape()[2]);
        let mt = core_matrix(&cores[k], false).transpose();
        let qr = mt.qr();
        let (q, r) = (qr.q(), qr.r());
        let rk = q.ncols();
        cores[k] = core_from(&q.transpose(), rk, s, r1)?;
        let prev = &cores[k - 1];
        let (p0, ps) = (prev.shape()[0], prev.shape()[1]);
        let left = core_matrix(prev, true) * r.transpose();
        cores[k - 1] = core_from(&left, p0, ps, rk)?;
        debug_assert_eq!(r0, r.ncols());
    }
    let norm = cores[0].norm();
    let delta = if n > 1 { tol * norm / ((n - 1) as f64).sqrt() } else { 0.0 };
    for k in 0..n.saturating_sub(1) {
        let (r0, s, _) = (cores[k].shape()[0], cores[k].shape()[1], cores[k].shape()[2]);
        let svd = core_matrix(&cores[k], true).svd(true, true);
        let (u, sv, vt) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
        let mut idx: Vec<usize> = (0..sv.len()).collect();
        idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        // smallest rank whose discarded tail is within delta
        let mut keep = idx.len();
        let mut tail = 0.0;
        while keep > 1 {
            let t = tail + sv[idx[keep - 1]].powi(2);
            if t.sqrt() > delta {
                break;
            }
            tail = t;
            keep -= 1;
        }
        let keep = keep.min(max_rank.max(1));
        let idx = &idx[..keep];
        let ut = DMatrix::from_fn(u.nrows(), keep, |i, j| u[(i, idx[j])]);
        let svt = DMatrix::from_fn(keep, vt.ncols(), |i, j| sv[idx[i]] * vt[(idx[i], j)]);
        cores[k] = core_from(&ut, r0, s, keep)?;
        let next = &cores[k + 1];
        let (ns, nr1) = (next.shape()[1], next.shape()[2]);
        let merged = svt * core_matrix(next, false);
        cores[k + 1] = core_from(&merged, keep, ns, nr1)?;
    }
    TensorTrain::new(cores)
}

/// Sum of two trains with the same physical sizes (block cores).
pub fn tt_add(x: &TensorTrain, y: &TensorTrain) -> Result<TensorTrain> {
    let n = x.order();
    if y.order() != n || x.dims() != y.dims() {
        return Err(Error::InvalidArgument("trains differ in shape".into()));
    }
    let mut cores = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = (&x.cores[k], &y.cores[k]);
        let s = a.shape()[1];
        let r0 = if k == 0 { 1 } else { a.shape()[0] + b.shape()[0] };
        let r1 = if k + 1 == n { 1 } else { a.shape()[2] + b.shape()[2] };
        let mut data = vec![0.0; r0 * s * r1];
        let (o0, o1) = (if k == 0 { 0 } else { a.shape()[0] }, if k + 1 == n { 0 } else { a.shape()[2] });
        for (t, (off0, off1)) in [(a, (0, 0)), (b, (o0, o1))] {
            let (t0, _, t1) = (t.shape()[0], t.shape()[1], t.shape()[2]);
            for i in 0..t0 {
                for p in 0..s {
                    for j in 0..t1 {
                        data[((i + off0) * s + p) * r1 + j + off1] += t.get(&[i, p, j]);
                    }
                }
            }
        }
        cores.push(DenseTensor::new(vec![A, P, C], vec![r0, s, r1], data)?);
    }
    TensorTrain::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_recovers_doubled_train() {
        let x = TensorTrain::random(4, 3, 2, &RandomSource::new(1)).unwrap();
        let y = tt_add(&x, &x).unwrap();
        assert_eq!(y.ranks(), vec![4, 4, 4, 1]);
        let z = tt_round_svd(&y, 10, 1e-10).unwrap();
        assert!(z.ranks().iter().all(|&r| r <= 2));
        let (fx, fz) = (x.full().unwrap(), z.full().unwrap());
        let err: f64 = fx.iter().zip(&fz).map(|(a, b)| (2.0 * a - b).powi(2)).sum::<f64>().sqrt();
        let nx: f64 = fx.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * nx, "{err}");
    }

    #[test]
    fn two_core_sketch_is_a_matrix_product() {
        let x = TensorTrain::random(2, 5, 3, &RandomSource::new(2)).unwrap();
        let out = tt_round_sketch(&x, 2, &RandomSource::new(3)).unwrap();
        assert_eq!(out.sketches.len(), 1);
        let s1 = out.embedding.dense(1).unwrap();
        let direct = &s1 * x.left_interface(1).unwrap();
        assert!((&direct - &out.sketches[0]).norm() <= 1e-12 * direct.norm());
    }
}
