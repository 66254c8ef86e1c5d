//! CP-ALS where every least-squares subproblem is sketched by a network
//! embedding built on the left/right chain trees, so that sketched
//! intermediates are shared between subproblems.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bounds::ContractionLabels;
use crate::embed::zi_internal_edge;
use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::plan::ContractionTree;
use crate::rng::{gaussian_tensor, RandomSource};
use crate::set::VertexSet;
use crate::tensor::{DenseTensor, Label};

const LP: Label = usize::MAX - 1;
const LA: Label = usize::MAX - 2;
const LB: Label = usize::MAX - 3;
const L1: Label = usize::MAX - 4;
const RANK: Label = usize::MAX - 5;
const O1: Label = usize::MAX - 6;
const O2: Label = usize::MAX - 7;
const O3: Label = usize::MAX - 8;

/// Sketch size m = ceil(C·N·R·ln(1/δ)/ε²).
pub fn cp_sketch_size(n: usize, r: usize, epsilon: f64, delta: f64, c: f64) -> Result<usize> {
    if !(epsilon > 0.0 && delta > 0.0 && delta < 1.0 && c > 0.0) {
        return Err(Error::InvalidArgument("need ε > 0, 0 < δ < 1 and C > 0".into()));
    }
    let m = (c * n as f64 * r as f64 * (1.0 / delta).ln() / (epsilon * epsilon)).ceil();
    Ok((m as usize).max(1))
}

/// Modeled multiply-adds of one sweep, N(s·m·R + m^2.5·R).
pub fn cp_iteration_model(n: usize, s: usize, r: usize, m: usize) -> f64 {
    let (s, r, m) = (s as f64, r as f64, m as f64);
    n as f64 * (s * m * r + m.powf(2.5) * r)
}

/// Data trees T_1..T_N of the Khatri-Rao products L_i. Tree i is over the
/// N−1 local vertices of L_i, where local k stands for mode k (k < i) or
/// mode k+1 (k ≥ i): the left chain and the right chain are contracted
/// separately and then joined.
pub fn cp_subproblem_trees(n: usize) -> Result<Vec<ContractionTree>> {
    if n < 3 {
        return Err(Error::InvalidArgument("CP subproblem trees need order at least 3".into()));
    }
    let mut trees = Vec::with_capacity(n);
    for i in 0..n {
        let local = |mode: usize| if mode < i { mode } else { mode - 1 };
        let mut path = Vec::new();
        let mut left = VertexSet::new();
        for mode in 0..i {
            if !left.is_empty() {
                path.push((left.clone(), VertexSet::singleton(local(mode))));
            }
            left.insert(local(mode));
        }
        let mut right = VertexSet::new();
        for mode in (i + 1..n).rev() {
            if !right.is_empty() {
                path.push((VertexSet::singleton(local(mode)), right.clone()));
            }
            right.insert(local(mode));
        }
        if !left.is_empty() && !right.is_empty() {
            path.push((left, right));
        }
        trees.push(ContractionTree::from_path(&VertexSet::range(0, n - 1), &path)?);
    }
    Ok(trees)
}

fn with_labels(t: &DenseTensor, labels: &[Label]) -> Result<DenseTensor> {
    DenseTensor::new(labels.to_vec(), t.shape().to_vec(), t.data().to_vec())
}

/// Replace mode `l` by two modes (LA, LB) of sizes (a, b).
fn split_mode(t: &DenseTensor, l: Label, a: usize, b: usize) -> Result<DenseTensor> {
    let mut order: Vec<Label> = t.labels().iter().copied().filter(|&x| x != l).collect();
    order.push(l);
    let p = t.permute(&order)?;
    let mut labels = order[..order.len() - 1].to_vec();
    let mut shape = p.shape()[..order.len() - 1].to_vec();
    labels.extend([LA, LB]);
    shape.extend([a, b]);
    DenseTensor::new(labels, shape, p.into_data())
}

fn matrix(t: &DenseTensor, rows: Label, cols: Label) -> Result<DMatrix<f64>> {
    let p = t.permute(&[rows, cols])?;
    Ok(DMatrix::from_row_slice(p.shape()[0], p.shape()[1], p.data()))
}

fn to_tensor(a: &DMatrix<f64>, rows: Label, cols: Label) -> Result<DenseTensor> {
    let data: Vec<f64> = (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| a[(i, j)])).collect();
    DenseTensor::new(vec![rows, cols], vec![a.nrows(), a.ncols()], data)
}

/// v1 (m_eff, α, m_eff) and v2 (m_eff, β, m_eff) merging two sketched sides.
#[derive(Clone, Debug)]
struct ZPair {
    v1: DenseTensor,
    v2: DenseTensor,
}

/// Gaussian tensors shared by the N subproblem embeddings.
#[derive(Clone, Debug)]
pub struct CpSketch {
    pub shape: Vec<usize>,
    pub m: usize,
    pub alpha: usize,
    pub beta: usize,
    /// Output size of every sketched intermediate, α·β ≥ m.
    pub m_eff: usize,
    g: Vec<DenseTensor>,
    zl: Vec<Option<ZPair>>,
    zr: Vec<Option<ZPair>>,
    zm: Vec<Option<ZPair>>,
}

impl CpSketch {
    pub fn new(shape: &[usize], rank: usize, m: usize, src: &RandomSource) -> Result<Self> {
        let n = shape.len();
        if n < 3 {
            return Err(Error::InvalidArgument("sketched CP-ALS needs order at least 3".into()));
        }
        if m == 0 || rank == 0 {
            return Err(Error::InvalidArgument("rank and sketch size must be positive".into()));
        }
        let alpha = zi_internal_edge(&ContractionLabels::new(1, 1, 1, rank as u64), m);
        let beta = m.div_ceil(alpha);
        let me = alpha * beta;
        let total: usize = shape.iter().product();
        for &s in shape {
            let dim = total / s;
            if me > dim {
                return Err(Error::SketchExceedsSubspace { m: me, dim });
            }
        }
        let var = 1.0 / me as f64;
        let g = (0..n)
            .map(|k| gaussian_tensor(vec![0, 1], vec![shape[k], me], var, &src.derive(k as u64)))
            .collect::<Result<Vec<_>>>()?;
        let z = |key: u64| -> Result<ZPair> {
            Ok(ZPair {
                v1: gaussian_tensor(vec![0, 1, 2], vec![me, alpha, me], var, &src.derive(key))?,
                v2: gaussian_tensor(vec![0, 1, 2], vec![me, beta, me], var, &src.derive(key + 1))?,
            })
        };
        let inner = |base: u64| -> Result<Vec<Option<ZPair>>> {
            (0..n).map(|k| if k >= 1 && k + 1 < n { z(base + 2 * k as u64).map(Some) } else { Ok(None) }).collect()
        };
        Ok(CpSketch {
            shape: shape.to_vec(),
            m,
            alpha,
            beta,
            m_eff: me,
            g,
            zl: inner(1 << 20)?,
            zr: inner(2 << 20)?,
            zm: inner(3 << 20)?,
        })
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// Apply a Z pair to one tensor carrying both sketched modes p and q.
    fn z_apply(&self, t: &DenseTensor, p: Label, q: Label, z: &ZPair, out: Label) -> Result<(DenseTensor, Flops)> {
        let t = split_mode(t, q, self.alpha, self.beta)?;
        let (t1, f1) = t.contract(&with_labels(&z.v1, &[p, LA, L1])?, &[])?;
        let (t2, f2) = t1.contract(&with_labels(&z.v2, &[L1, LB, out])?, &[])?;
        Ok((t2, f1 + f2))
    }

    /// Merge two sketched factors (modes RANK, O1): ((P, v1), Q), v2).
    fn z_merge(&self, p: &DenseTensor, q: &DenseTensor, z: &ZPair) -> Result<(DenseTensor, Flops)> {
        let mut p = p.clone();
        p.relabel(|l| if l == O1 { LP } else { l });
        let q = split_mode(q, O1, self.alpha, self.beta)?;
        let (t1, f1) = p.contract(&with_labels(&z.v1, &[LP, LA, L1])?, &[RANK])?;
        let (t2, f2) = t1.contract(&q, &[RANK])?;
        let (t3, f3) = t2.contract(&with_labels(&z.v2, &[L1, LB, O1])?, &[RANK])?;
        Ok((t3, f1 + f2 + f3))
    }

    fn kron(&self, a: &DMatrix<f64>, k: usize) -> Result<(DenseTensor, Flops)> {
        let at = to_tensor(a, k, RANK)?;
        at.contract(&with_labels(&self.g[k], &[k, O1])?, &[])
    }

    /// S_i L_i from scratch (m_eff × R).
    pub fn sketch_lhs(&self, factors: &[DMatrix<f64>], i: usize) -> Result<(DMatrix<f64>, Flops)> {
        let n = self.order();
        let mut flops = Flops::zero();
        let mut hat = Vec::with_capacity(n);
        for (k, a) in factors.iter().enumerate() {
            if k == i {
                hat.push(None);
                continue;
            }
            let (h, f) = self.kron(a, k)?;
            flops += f;
            hat.push(Some(h));
        }
        let mut left: Option<DenseTensor> = None;
        for k in 0..i {
            let h = hat[k].clone().unwrap();
            left = Some(match left {
                None => h,
                Some(l) => {
                    let (t, f) = self.z_merge(&l, &h, self.zl[k].as_ref().unwrap())?;
                    flops += f;
                    t
                }
            });
        }
        let mut right: Option<DenseTensor> = None;
        for k in (i + 1..n).rev() {
            let h = hat[k].clone().unwrap();
            right = Some(match right {
                None => h,
                Some(r) => {
                    let (t, f) = self.z_merge(&h, &r, self.zr[k].as_ref().unwrap())?;
                    flops += f;
                    t
                }
            });
        }
        let out = match (left, right) {
            (Some(l), Some(r)) => {
                let (t, f) = self.z_merge(&l, &r, self.zm[i].as_ref().unwrap())?;
                flops += f;
                t
            }
            (Some(t), None) | (None, Some(t)) => t,
            (None, None) => unreachable!(),
        };
        Ok((matrix(&out, O1, RANK)?, flops))
    }

    /// Right-hand sides S_i X_(i)^T for all i (m_eff × s_i), sharing the
    /// left-chain intermediates.
    pub fn sketch_rhs(&self, x: &DenseTensor) -> Result<(Vec<DMatrix<f64>>, Flops)> {
        let n = self.order();
        if x.shape() != self.shape.as_slice() {
            return Err(Error::PlanDataInconsistency(format!(
                "tensor shape {:?} but sketch built for {:?}",
                x.shape(),
                self.shape
            )));
        }
        let x = DenseTensor::new((0..n).collect(), x.shape().to_vec(), x.data().to_vec())?;
        let g = |k: usize, out: Label| with_labels(&self.g[k], &[k, out]);
        let mut flops = Flops::zero();
        let mut rhs = vec![None; n];
        // left chain: lefts[k] has modes 0..=k sketched into O1
        let mut lefts: Vec<DenseTensor> = Vec::with_capacity(n - 1);
        let (mut t, f) = x.contract(&g(0, O1)?, &[])?;
        flops += f;
        lefts.push(t.clone());
        for k in 1..n - 1 {
            let (u, f) = t.contract(&g(k, O2)?, &[])?;
            flops += f;
            let (u, f) = self.z_apply(&u, O1, O2, self.zl[k].as_ref().unwrap(), O1)?;
            flops += f;
            t = u;
            lefts.push(t.clone());
        }
        rhs[n - 1] = Some(matrix(&t, O1, n - 1)?);
        // right chain for the first subproblem
        let (mut t, f) = x.contract(&g(n - 1, O1)?, &[])?;
        flops += f;
        for k in (1..n - 1).rev() {
            let (u, f) = t.contract(&g(k, O2)?, &[])?;
            flops += f;
            let (u, f) = self.z_apply(&u, O2, O1, self.zr[k].as_ref().unwrap(), O1)?;
            flops += f;
            t = u;
        }
        rhs[0] = Some(matrix(&t, O1, 0)?);
        // middle subproblems continue from the shared left intermediates
        for i in 1..n - 1 {
            let (mut t, f) = lefts[i - 1].contract(&g(n - 1, O2)?, &[])?;
            flops += f;
            for k in (i + 1..n - 1).rev() {
                let (u, f) = t.contract(&g(k, O3)?, &[])?;
                flops += f;
                let (u, f) = self.z_apply(&u, O3, O2, self.zr[k].as_ref().unwrap(), O2)?;
                flops += f;
                t = u;
            }
            let (u, f) = self.z_apply(&t, O1, O2, self.zm[i].as_ref().unwrap(), O1)?;
            flops += f;
            rhs[i] = Some(matrix(&u, O1, i)?);
        }
        Ok((rhs.into_iter().map(Option::unwrap).collect(), flops))
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepLedger {
    pub kronecker: Flops,
    pub merges: Flops,
    pub solves: Flops,
    /// Sketching flops attributed to each subproblem, in update order.
    pub subproblems: Vec<Flops>,
    pub total: Flops,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CpLedger {
    pub m: usize,
    pub m_eff: usize,
    pub prep: Flops,
    pub init: Flops,
    pub sweeps: Vec<SweepLedger>,
    pub total: Flops,
}

#[derive(Clone, Debug, Serialize)]
pub struct CpResult {
    #[serde(skip)]
    pub factors: Vec<DMatrix<f64>>,
    pub ledger: CpLedger,
    /// Relative residual after each sweep.
    pub residuals: Vec<f64>,
    /// Subproblems that fell back to the minimum-norm solve.
    pub rank_deficient: usize,
}

/// Least squares min ||L Y − B||: QR, or SVD minimum-norm when L is
/// numerically rank deficient. Returns (Y, modeled flops, deficient).
fn solve_ls(l: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, Flops, bool) {
    let (m, r, s) = (l.nrows() as u64, l.ncols() as u64, b.ncols() as u64);
    let flops = Flops::from_u64(2 * m * r * r + 2 * m * r * s + r * r * s);
    let qr = l.clone().qr();
    let rr = qr.r();
    let dmax = (0..rr.nrows().min(rr.ncols())).map(|k| rr[(k, k)].abs()).fold(0.0, f64::max);
    let full =
        rr.nrows() == rr.ncols() && (0..rr.nrows()).all(|k| rr[(k, k)].abs() > 1e-12 * dmax.max(f64::MIN_POSITIVE));
    if full {
        let qtb = qr.q().transpose() * b;
        if let Some(y) = rr.solve_upper_triangular(&qtb) {
            return (y, flops, false);
        }
    }
    let svd = l.clone().svd(true, true);
    let y = svd.solve(b, 1e-12 * dmax).unwrap_or_else(|_| DMatrix::zeros(l.ncols(), b.ncols()));
    (y, flops, true)
}

/// Least-squares solution of min ‖L·Y − B‖_F, flagged when the minimum-norm
/// fallback was used.
pub fn least_squares(l: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let (y, _, deficient) = solve_ls(l, b);
    (y, deficient)
}

/// Dense tensor of a CP model, row-major over the factor rows.
pub fn cp_full(factors: &[DMatrix<f64>]) -> Vec<f64> {
    let r = factors[0].ncols();
    let mut t: Vec<f64> =
        (0..factors[0].nrows()).flat_map(|i| (0..r).map(move |c| (i, c))).map(|(i, c)| factors[0][(i, c)]).collect();
    for a in &factors[1..] {
        let rows = t.len() / r;
        let mut next = Vec::with_capacity(rows * a.nrows() * r);
        for idx in 0..rows {
            for j in 0..a.nrows() {
                for c in 0..r {
                    next.push(t[idx * r + c] * a[(j, c)]);
                }
            }
        }
        t = next;
    }
    t.chunks(r).map(|row| row.iter().sum()).collect()
}

/// ‖X − ⟦A_1..A_N⟧‖ / ‖X‖, computed densely.
pub fn cp_residual(x: &DenseTensor, factors: &[DMatrix<f64>]) -> f64 {
    let model = cp_full(factors);
    let num: f64 = x.data().iter().zip(&model).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    num / x.norm()
}

/// Khatri-Rao product of all factors but i, rows ordered like X_(i)^T.
fn khatri_rao_except(factors: &[DMatrix<f64>], i: usize) -> DMatrix<f64> {
    let others: Vec<DMatrix<f64>> =
        factors.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, a)| a.clone()).collect();
    let r = others[0].ncols();
    let mut rows: Vec<Vec<f64>> = (0..others[0].nrows()).map(|j| others[0].row(j).iter().copied().collect()).collect();
    for a in &others[1..] {
        let mut next = Vec::with_capacity(rows.len() * a.nrows());
        for row in &rows {
            for j in 0..a.nrows() {
                next.push((0..r).map(|c| row[c] * a[(j, c)]).collect());
            }
        }
        rows = next;
    }
    DMatrix::from_fn(rows.len(), r, |p, c| rows[p][c])
}

/// X_(i)^T: rows over the other modes in order, columns over mode i.
fn unfold_t(x: &DenseTensor, i: usize) -> Result<DMatrix<f64>> {
    let n = x.order();
    let x = DenseTensor::new((0..n).collect(), x.shape().to_vec(), x.data().to_vec())?;
    let mut order: Vec<Label> = (0..n).filter(|&k| k != i).collect();
    order.push(i);
    let p = x.permute(&order)?;
    let cols = x.shape()[i];
    Ok(DMatrix::from_row_slice(p.len() / cols, cols, p.data()))
}

/// Exact solution of subproblem i and its residual ||L_i Y − X_(i)^T||_F.
pub fn exact_subproblem(x: &DenseTensor, factors: &[DMatrix<f64>], i: usize) -> Result<(DMatrix<f64>, f64)> {
    let l = khatri_rao_except(factors, i);
    let b = unfold_t(x, i)?;
    let (y, _, _) = solve_ls(&l, &b);
    let res = (&l * &y - &b).norm();
    Ok((y, res))
}

/// Residual of a candidate Y for subproblem i.
pub fn subproblem_residual(x: &DenseTensor, factors: &[DMatrix<f64>], i: usize, y: &DMatrix<f64>) -> Result<f64> {
    let l = khatri_rao_except(factors, i);
    let b = unfold_t(x, i)?;
    Ok((&l * y - &b).norm())
}

pub fn random_factors(shape: &[usize], rank: usize, src: &RandomSource) -> Result<Vec<DMatrix<f64>>> {
    shape
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let t = gaussian_tensor(vec![0, 1], vec![s, rank], 1.0, &src.derive(k as u64))?;
            Ok(DMatrix::from_row_slice(s, rank, t.data()))
        })
        .collect()
}

/// Exact rank-R tensor from Gaussian factors, plus Gaussian noise of relative
/// size `noise`.
pub fn cp_synthetic(shape: &[usize], rank: usize, noise: f64, src: &RandomSource) -> Result<DenseTensor> {
    let factors = random_factors(shape, rank, &src.derive(1))?;
    let mut x = DenseTensor::new((0..shape.len()).collect(), shape.to_vec(), cp_full(&factors))?;
    if noise > 0.0 {
        let g = gaussian_tensor((0..shape.len()).collect(), shape.to_vec(), 1.0, &src.derive(2))?;
        let scale = noise * x.norm() / g.norm();
        for (a, b) in x.data_mut().iter_mut().zip(g.data()) {
            *a += scale * b;
        }
    }
    Ok(x)
}

/// Unsketched ALS with the same alternating sweep order and initial factors.
pub fn als_reference(
    x: &DenseTensor,
    rank: usize,
    sweeps: usize,
    src: &RandomSource,
) -> Result<(Vec<DMatrix<f64>>, Vec<f64>)> {
    let n = x.order();
    let mut factors = random_factors(x.shape(), rank, &src.derive(0xfac7))?;
    let mut residuals = Vec::with_capacity(sweeps);
    for t in 0..sweeps {
        let order: Vec<usize> = if t % 2 == 0 { (0..n).collect() } else { (0..n).rev().collect() };
        for i in order {
            let (y, _) = exact_subproblem(x, &factors, i)?;
            factors[i] = y.transpose();
        }
        residuals.push(cp_residual(x, &factors));
    }
    Ok((factors, residuals))
}

/// Cached sketches for the alternating sweeps. `wl[k]` sketches modes 0..=k,
/// `wr[k]` sketches modes k..N−1.
pub struct CpState<'a> {
    pub sketch: &'a CpSketch,
    pub factors: Vec<DMatrix<f64>>,
    pub rhs: Vec<DMatrix<f64>>,
    hat: Vec<Option<DenseTensor>>,
    wl: Vec<Option<DenseTensor>>,
    wr: Vec<Option<DenseTensor>>,
}

impl<'a> CpState<'a> {
    /// Prepare right-hand sides and the right chain. Returns (state, prep, init).
    pub fn new(sketch: &'a CpSketch, x: &DenseTensor, factors: Vec<DMatrix<f64>>) -> Result<(Self, Flops, Flops)> {
        let n = sketch.order();
        let (rhs, prep) = sketch.sketch_rhs(x)?;
        let mut st = CpState { sketch, factors, rhs, hat: vec![None; n], wl: vec![None; n], wr: vec![None; n] };
        let mut init = Flops::zero();
        for k in 0..n {
            let (h, f) = sketch.kron(&st.factors[k], k)?;
            init += f;
            st.hat[k] = Some(h);
        }
        st.wr[n - 1] = st.hat[n - 1].clone();
        for k in (1..n - 1).rev() {
            let (t, f) = sketch.z_merge(
                st.hat[k].as_ref().unwrap(),
                st.wr[k + 1].as_ref().unwrap(),
                sketch.zr[k].as_ref().unwrap(),
            )?;
            init += f;
            st.wr[k] = Some(t);
        }
        Ok((st, prep, init))
    }

    /// Sketched L_i from the cache (merges are charged to `merges`).
    pub fn lhs(&self, i: usize, merges: &mut Flops) -> Result<DMatrix<f64>> {
        let n = self.sketch.order();
        let missing = || Error::InvalidArgument(format!("cached chain for subproblem {i} is stale"));
        let t = if i == 0 {
            self.wr[1].clone().ok_or_else(missing)?
        } else if i == n - 1 {
            self.wl[n - 2].clone().ok_or_else(missing)?
        } else {
            let l = self.wl[i - 1].as_ref().ok_or_else(missing)?;
            let r = self.wr[i + 1].as_ref().ok_or_else(missing)?;
            let (t, f) = self.sketch.z_merge(l, r, self.sketch.zm[i].as_ref().unwrap())?;
            *merges += f;
            t
        };
        matrix(&t, O1, RANK)
    }

    /// One sweep, forward when `forward`, else backward.
    pub fn sweep(&mut self, forward: bool) -> Result<(SweepLedger, usize)> {
        let n = self.sketch.order();
        let mut led = SweepLedger::default();
        let mut deficient = 0;
        let order: Vec<usize> = if forward { (0..n).collect() } else { (0..n).rev().collect() };
        for i in order {
            let mut merges = Flops::zero();
            let l = self.lhs(i, &mut merges)?;
            let (y, fs, bad) = solve_ls(&l, &self.rhs[i]);
            deficient += bad as usize;
            led.solves += fs;
            self.factors[i] = y.transpose();
            let (h, fk) = self.sketch.kron(&self.factors[i], i)?;
            self.hat[i] = Some(h.clone());
            if forward {
                self.wr[i] = None;
                if i == 0 {
                    self.wl[0] = Some(h);
                } else if i + 1 < n {
                    let (t, f) = self.sketch.z_merge(
                        self.wl[i - 1].as_ref().unwrap(),
                        &h,
                        self.sketch.zl[i].as_ref().unwrap(),
                    )?;
                    merges += f;
                    self.wl[i] = Some(t);
                }
            } else {
                self.wl[i] = None;
                if i == n - 1 {
                    self.wr[i] = Some(h);
                } else if i > 0 {
                    let (t, f) = self.sketch.z_merge(
                        &h,
                        self.wr[i + 1].as_ref().unwrap(),
                        self.sketch.zr[i].as_ref().unwrap(),
                    )?;
                    merges += f;
                    self.wr[i] = Some(t);
                }
            }
            led.subproblems.push(&merges + &fk);
            led.merges += merges;
            led.kronecker += fk;
        }
        led.total = &(&led.kronecker + &led.merges) + &led.solves;
        Ok((led, deficient))
    }
}

/// Sketched CP-ALS with alternating sweep directions.
pub fn sketched_cp_als(x: &DenseTensor, rank: usize, m: usize, sweeps: usize, src: &RandomSource) -> Result<CpResult> {
    let sketch = CpSketch::new(x.shape(), rank, m, &src.derive(0x5e7c))?;
    let factors = random_factors(x.shape(), rank, &src.derive(0xfac7))?;
    let (mut st, prep, init) = CpState::new(&sketch, x, factors)?;
    let mut ledger = CpLedger { m, m_eff: sketch.m_eff, prep, init, ..Default::default() };
    let mut residuals = Vec::with_capacity(sweeps);
    let mut rank_deficient = 0;
    for t in 0..sweeps {
        let (led, bad) = st.sweep(t % 2 == 0)?;
        rank_deficient += bad;
        ledger.sweeps.push(led);
        residuals.push(cp_residual(x, &st.factors));
    }
    ledger.total = &ledger.prep + &ledger.init;
    for s in &ledger.sweeps {
        ledger.total += &s.total;
    }
    Ok(CpResult { factors: st.factors, ledger, residuals, rank_deficient })
}
