//! Seeded random sources. Each tensor draws from its own ChaCha stream so that
//! results do not depend on generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        RandomSource { seed, stream }
    }

    /// A child source, independent of the parent and of siblings with other keys.
    pub fn derive(&self, key: u64) -> RandomSource {
        RandomSource { seed: self.seed, stream: splitmix(self.stream ^ splitmix(key.wrapping_add(1))) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Tensor with i.i.d. N(0, variance) entries.
pub fn gaussian_tensor(
    labels: Vec<Label>,
    shape: Vec<usize>,
    variance: f64,
    src: &RandomSource,
) -> Result<DenseTensor> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidDistribution(variance));
    }
    let n: usize = shape.iter().product();
    let sd = variance.sqrt();
    let mut rng = src.rng();
    let data = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    DenseTensor::new(labels, shape, data)
}

/// Tensor with i.i.d. uniform [0, 1) entries.
pub fn uniform_tensor(labels: Vec<Label>, shape: Vec<usize>, src: &RandomSource) -> Result<DenseTensor> {
    let n: usize = shape.iter().product();
    let mut rng = src.rng();
    let data = (0..n).map(|_| rng.random::<f64>()).collect();
    DenseTensor::new(labels, shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_stream_separated() {
        let s = RandomSource::new(7);
        let a = gaussian_tensor(vec![0, 1], vec![3, 5], 0.25, &s).unwrap();
        let b = gaussian_tensor(vec![0, 1], vec![3, 5], 0.25, &s).unwrap();
        assert_eq!(a.data(), b.data());
        let c = gaussian_tensor(vec![0, 1], vec![3, 5], 0.25, &s.derive(1)).unwrap();
        assert_ne!(a.data(), c.data());
        assert_ne!(s.derive(1), s.derive(2));
    }

    #[test]
    fn rejects_bad_variance() {
        let s = RandomSource::new(1);
        assert_eq!(gaussian_tensor(vec![0], vec![2], 0.0, &s), Err(Error::InvalidDistribution(0.0)));
        assert!(gaussian_tensor(vec![0], vec![2], -1.0, &s).is_err());
    }

    #[test]
    fn variance_matches() {
        let t = gaussian_tensor(vec![0], vec![200_000], 1.0 / 64.0, &RandomSource::new(3)).unwrap();
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        let var = t.data().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 1e-3);
        assert!((var * 64.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn square_sketch_is_unbiased() {
        // 4x4 sketch with variance 1/4: E|Sx|^2 = |x|^2.
        let x = [0.3, -1.2, 0.5, 2.0];
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let base = RandomSource::new(11);
        let trials = 100_000;
        let mut acc = 0.0;
        for t in 0..trials {
            let s = gaussian_tensor(vec![0, 1], vec![4, 4], 0.25, &base.derive(t)).unwrap();
            let d = s.data();
            let mut sx2 = 0.0;
            for r in 0..4 {
                let v: f64 = (0..4).map(|c| d[r * 4 + c] * x[c]).sum();
                sx2 += v * v;
            }
            acc += sx2 / nx;
        }
        let mean = acc / trials as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }
}
