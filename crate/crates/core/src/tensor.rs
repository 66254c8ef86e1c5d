//! Dense row-major tensors with labelled modes.

use crate::error::{Error, Result};
use crate::flops::Flops;

/// Mode label. Labels are hyperedge indices of the owning network.
pub type Label = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    labels: Vec<Label>,
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

impl DenseTensor {
    pub fn new(labels: Vec<Label>, shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if labels.len() != shape.len() {
            return Err(Error::InvalidArgument(format!("{} labels for {} modes", labels.len(), shape.len())));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidArgument(format!("duplicate mode label {l}")));
            }
        }
        if shape.contains(&0) {
            return Err(Error::InvalidArgument("zero-sized mode".into()));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::InvalidArgument(format!("shape {:?} needs {} values, got {}", shape, n, data.len())));
        }
        Ok(DenseTensor { labels, shape, data })
    }

    pub fn zeros(labels: Vec<Label>, shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        DenseTensor::new(labels, shape, vec![0.0; n])
    }

    pub fn scalar(v: f64) -> Self {
        DenseTensor { labels: vec![], shape: vec![], data: vec![v] }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn size_of(&self, label: Label) -> Option<usize> {
        self.labels.iter().position(|&l| l == label).map(|i| self.shape[i])
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, lambda: f64) {
        for x in &mut self.data {
            *x *= lambda;
        }
    }

    pub fn relabel(&mut self, map: impl Fn(Label) -> Label) {
        for l in &mut self.labels {
            *l = map(*l);
        }
    }

    /// Value at a multi-index given in label order.
    pub fn get(&self, index: &[usize]) -> f64 {
        let strides = row_major_strides(&self.shape);
        self.data[index.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// Reorder modes so that the labels appear in `order`.
    pub fn permute(&self, order: &[Label]) -> Result<DenseTensor> {
        if order.len() != self.labels.len() {
            return Err(Error::InvalidArgument(format!(
                "permutation {:?} does not match labels {:?}",
                order, self.labels
            )));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::InvalidArgument(format!("label {l} not in {:?}", self.labels)))
            })
            .collect::<Result<_>>()?;
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src = row_major_strides(&self.shape);
        let strides: Vec<usize> = perm.iter().map(|&p| src[p]).collect();
        let data = gather(&self.data, &shape, &strides);
        Ok(DenseTensor { labels: order.to_vec(), shape, data })
    }

    /// Contract with `other`. Shared labels listed in `keep` become batch
    /// modes; every other shared label is summed. The result carries this
    /// tensor's surviving modes in order followed by `other`'s private modes.
    /// Returns the result and the flop count (2 per multiply-add).
    pub fn contract(&self, other: &DenseTensor, keep: &[Label]) -> Result<(DenseTensor, Flops)> {
        let mut batch = Vec::new();
        let mut summed = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(j) = other.labels.iter().position(|x| x == l) {
                if self.shape[i] != other.shape[j] {
                    return Err(Error::InvalidContraction(format!(
                        "mode {l} has size {} vs {}",
                        self.shape[i], other.shape[j]
                    )));
                }
                if keep.contains(l) {
                    batch.push(*l);
                } else {
                    summed.push(*l);
                }
            }
        }
        let free_a: Vec<Label> = self.labels.iter().copied().filter(|l| !other.labels.contains(l)).collect();
        let free_b: Vec<Label> = other.labels.iter().copied().filter(|l| !self.labels.contains(l)).collect();

        let size = |t: &DenseTensor, ls: &[Label]| -> usize { ls.iter().map(|&l| t.size_of(l).unwrap()).product() };
        let nb = size(self, &batch);
        let fa = size(self, &free_a);
        let k = size(self, &summed);
        let fb = size(other, &free_b);

        let a_order: Vec<Label> = batch.iter().chain(&free_a).chain(&summed).copied().collect();
        let b_order: Vec<Label> = batch.iter().chain(&summed).chain(&free_b).copied().collect();
        let a = self.permute(&a_order)?;
        let b = other.permute(&b_order)?;

        let mut out = vec![0.0; nb * fa * fb];
        for bi in 0..nb {
            let ap = &a.data[bi * fa * k..(bi + 1) * fa * k];
            let bp = &b.data[bi * k * fb..(bi + 1) * k * fb];
            let cp = &mut out[bi * fa * fb..(bi + 1) * fa * fb];
            gemm(fa, k, fb, ap, bp, cp);
        }
        let mut labels: Vec<Label> = batch.iter().chain(&free_a).chain(&free_b).copied().collect();
        let mut shape: Vec<usize> =
            labels.iter().map(|&l| self.size_of(l).or_else(|| other.size_of(l)).unwrap()).collect();
        let flops = Flops::product([nb, fa, k, fb, 2]);

        let want: Vec<Label> =
            self.labels.iter().copied().filter(|l| !summed.contains(l)).chain(free_b.iter().copied()).collect();
        let mut t = DenseTensor { labels: std::mem::take(&mut labels), shape: std::mem::take(&mut shape), data: out };
        if t.labels != want {
            t = t.permute(&want)?;
        }
        Ok((t, flops))
    }
}

/// C (m×n) = A (m×k) · B (k×n), all row-major and contiguous.
fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    // SAFETY: slice lengths match the dimensions and strides passed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn gather(src: &[f64], shape: &[usize], strides: &[usize]) -> Vec<f64> {
    let n: usize = shape.iter().product();
    let mut out = Vec::with_capacity(n);
    let d = shape.len();
    if d == 0 {
        out.push(src[0]);
        return out;
    }
    let inner = shape[d - 1];
    let inner_stride = strides[d - 1];
    let mut idx = vec![0usize; d - 1];
    let mut base = 0usize;
    loop {
        if inner_stride == 1 {
            out.extend_from_slice(&src[base..base + inner]);
        } else {
            out.extend((0..inner).map(|i| src[base + i * inner_stride]));
        }
        let mut ax = d - 1;
        loop {
            if ax == 0 {
                return out;
            }
            ax -= 1;
            idx[ax] += 1;
            base += strides[ax];
            if idx[ax] < shape[ax] {
                break;
            }
            base -= strides[ax] * shape[ax];
            idx[ax] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(labels: Vec<Label>, shape: Vec<usize>) -> DenseTensor {
        let n = shape.iter().product::<usize>();
        DenseTensor::new(labels, shape, (0..n).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap()
    }

    #[test]
    fn matmul_matches_loops() {
        let a = seq(vec![0, 1], vec![3, 4]);
        let b = seq(vec![1, 2], vec![4, 5]);
        let (c, f) = a.contract(&b, &[]).unwrap();
        assert_eq!(c.labels(), &[0, 2]);
        assert_eq!(f, Flops::from_u64(2 * 3 * 4 * 5));
        for i in 0..3 {
            for j in 0..5 {
                let want: f64 = (0..4).map(|k| a.get(&[i, k]) * b.get(&[k, j])).sum();
                assert!((c.get(&[i, j]) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batch_mode_is_kept_once() {
        // A (a,b,d), B (c,b,d): contract b, keep d.
        let a = seq(vec![0, 1, 3], vec![2, 3, 4]);
        let b = seq(vec![2, 1, 3], vec![5, 3, 4]);
        let (c, f) = a.contract(&b, &[3]).unwrap();
        assert_eq!(c.labels(), &[0, 3, 2]);
        assert_eq!(f, Flops::from_u64(2 * 2 * 3 * 4 * 5));
        for i in 0..2 {
            for d in 0..4 {
                for k in 0..5 {
                    let want: f64 = (0..3).map(|j| a.get(&[i, j, d]) * b.get(&[k, j, d])).sum();
                    assert!((c.get(&[i, d, k]) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_mode_is_transparent() {
        let a = seq(vec![0, 9], vec![3, 1]);
        let b = seq(vec![9, 1], vec![1, 2]);
        let (c, _) = a.contract(&b, &[]).unwrap();
        let a2 = seq(vec![0], vec![3]);
        let b2 = seq(vec![1], vec![2]);
        let (c2, _) = a2.contract(&b2, &[]).unwrap();
        assert_eq!(c.data(), c2.data());
    }

    #[test]
    fn permute_roundtrip() {
        let a = seq(vec![4, 5, 6], vec![2, 3, 4]);
        let p = a.permute(&[6, 4, 5]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        assert_eq!(p.get(&[3, 1, 2]), a.get(&[1, 2, 3]));
        assert_eq!(p.permute(&[4, 5, 6]).unwrap(), a);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let a = seq(vec![0, 1], vec![3, 4]);
        let b = seq(vec![1], vec![5]);
        assert!(matches!(a.contract(&b, &[]), Err(Error::InvalidContraction(_))));
    }
}
