//! Exact operation counts. Products of dimension sizes overflow 64 bits on
//! large networks, so counts are held as arbitrary-precision integers.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Flops(pub BigUint);

impl Flops {
    pub fn zero() -> Self {
        Flops(BigUint::zero())
    }

    pub fn one() -> Self {
        Flops(BigUint::one())
    }

    pub fn from_u64(v: u64) -> Self {
        Flops(BigUint::from(v))
    }

    /// Product of a list of sizes.
    pub fn product<I: IntoIterator<Item = usize>>(sizes: I) -> Self {
        let mut acc = BigUint::one();
        for s in sizes {
            acc *= BigUint::from(s);
        }
        Flops(acc)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn ln(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.0.bits();
        if bits < 1000 {
            return self.to_f64().ln();
        }
        let shift = bits - 64;
        let top = (&self.0 >> shift).to_f64().unwrap_or(0.0);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    pub fn ceil_sqrt(&self) -> Self {
        Flops(ceil_sqrt(&self.0))
    }

    pub fn scale(&self, k: u64) -> Self {
        Flops(&self.0 * BigUint::from(k))
    }

    /// Ratio as a float, robust to values beyond f64 range.
    pub fn ratio(&self, other: &Flops) -> f64 {
        if other.is_zero() {
            return f64::INFINITY;
        }
        (self.ln() - other.ln()).exp()
    }
}

pub fn ceil_sqrt(n: &BigUint) -> BigUint {
    let r = n.sqrt();
    if &(&r * &r) == n {
        r
    } else {
        r + BigUint::one()
    }
}

impl fmt::Display for Flops {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Flops {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_u64() {
            Some(v) => s.serialize_u64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl From<u64> for Flops {
    fn from(v: u64) -> Self {
        Flops::from_u64(v)
    }
}

impl From<BigUint> for Flops {
    fn from(v: BigUint) -> Self {
        Flops(v)
    }
}

impl Add for Flops {
    type Output = Flops;
    fn add(self, rhs: Flops) -> Flops {
        Flops(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Flops> for &'a Flops {
    type Output = Flops;
    fn add(self, rhs: &Flops) -> Flops {
        Flops(&self.0 + &rhs.0)
    }
}

impl AddAssign for Flops {
    fn add_assign(&mut self, rhs: Flops) {
        self.0 += rhs.0;
    }
}

impl AddAssign<&Flops> for Flops {
    fn add_assign(&mut self, rhs: &Flops) {
        self.0 += &rhs.0;
    }
}

impl Mul for Flops {
    type Output = Flops;
    fn mul(self, rhs: Flops) -> Flops {
        Flops(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Flops> for &'a Flops {
    type Output = Flops;
    fn mul(self, rhs: &Flops) -> Flops {
        Flops(&self.0 * &rhs.0)
    }
}

impl Sum for Flops {
    fn sum<I: Iterator<Item = Flops>>(iter: I) -> Flops {
        iter.fold(Flops::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Flops> for Flops {
    fn sum<I: Iterator<Item = &'a Flops>>(iter: I) -> Flops {
        iter.fold(Flops::zero(), |a, b| &a + b)
    }
}

impl Product for Flops {
    fn product<I: Iterator<Item = Flops>>(iter: I) -> Flops {
        iter.fold(Flops::one(), |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_sqrt_rounds_up() {
        for n in 0u64..2000 {
            let r = ceil_sqrt(&BigUint::from(n)).to_u64().unwrap();
            assert!(r * r >= n);
            assert!(r == 0 || (r - 1) * (r - 1) < n);
        }
    }

    #[test]
    fn no_wraparound() {
        let big = Flops::product([1usize << 40, 1 << 40, 1 << 40]);
        assert_eq!(big.to_u64(), None);
        assert!((big.ln() - 120.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let s: Flops = [big.clone(), big.clone()].iter().sum();
        assert_eq!(s, big.scale(2));
    }
}
