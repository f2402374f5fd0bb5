//! Double-double arithmetic (an unevaluated sum `hi + lo` of two `f64`s),
//! enough for the alternating spectral sums that cancel to ~1e-10 of their
//! largest term.

use core::ops::{Add, Mul, Neg, Sub};
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: core::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a; // 2^27 + 1
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    pub fn from_u128(x: u128) -> Self {
        let hi = x as f64;
        let rest = x as i128 - hi as i128;
        let (hi, lo) = quick_two_sum(hi, rest as f64);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - Self::product(q1, b);
        let q2 = r.hi / b;
        let r = r - Self::product(q2, b);
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }

    fn ldexp(self, n: i32) -> Self {
        let f = 2f64.powi(n);
        Self {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn exp(self) -> Self {
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        let n = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(n);
        // scale down by 2^5, Taylor, then square back
        let r = r.ldexp(-5);
        let mut term = Self::ONE;
        let mut sum = Self::ONE;
        for i in 1..=20 {
            term = (term * r).div_f64(i as f64);
            sum = sum + term;
        }
        for _ in 0..5 {
            sum = sum * sum;
        }
        // split the power of two so the intermediate never overflows
        let n = n as i32;
        let half = n / 2;
        sum.ldexp(half).ldexp(n - half)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_matches_f64_and_is_finer() {
        for &x in &[-30.0, -1.0, -0.1, 0.0, 0.5, 3.0] {
            let e = DoubleDouble::from_f64(x).exp();
            assert!(
                (e.to_f64() - f64::exp(x)).abs() <= 2e-16 * f64::exp(x),
                "x={x}"
            );
        }
        // e^{a} e^{-a} = 1 to double-double accuracy
        let a = DoubleDouble::product(7.0, 0.3);
        let one = a.exp() * (-a).exp();
        assert!((one - DoubleDouble::ONE).to_f64().abs() < 1e-30);
    }

    #[test]
    fn cancellation_survives() {
        let big = DoubleDouble::from_f64(1e10);
        let small = DoubleDouble::from_f64(1.25e-10);
        let r = (big + small) - big;
        assert_eq!(r.to_f64(), 1.25e-10);
        let third = DoubleDouble::ONE.div_f64(3.0);
        let back = third.mul_f64(3.0) - DoubleDouble::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn u128_conversion_is_exact_enough() {
        let x: u128 = (1u128 << 80) + 12345;
        let d = DoubleDouble::from_u128(x);
        assert_eq!(d.hi as i128 + d.lo as i128, x as i128);
    }
}
