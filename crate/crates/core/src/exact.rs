//! Exact rationals carrying at most one factor of √π, and polynomials in `t`
//! with rational coefficients.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `q · (√π)^p` with `p ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactScalar {
    q: BigRational,
    sqrtpi_power: u8,
}

impl ExactScalar {
    pub fn rational(q: BigRational) -> Self {
        Self { q, sqrtpi_power: 0 }
    }

    pub fn with_sqrt_pi(q: BigRational) -> Self {
        Self { q, sqrtpi_power: 1 }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(n.into()))
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn sqrtpi_power(&self) -> u8 {
        self.sqrtpi_power
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }

    /// Product; two `√π`-carrying factors are refused rather than folded into π.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let p = self.sqrtpi_power + other.sqrtpi_power;
        if p > 1 {
            return Err(Error::Usage("product of two √π-carrying scalars".into()));
        }
        Ok(Self {
            q: &self.q * &other.q,
            sqrtpi_power: p,
        })
    }

    /// Quotient of two scalars with matching `√π` power, which is rational.
    pub fn ratio(&self, other: &Self) -> Result<BigRational> {
        if self.sqrtpi_power != other.sqrtpi_power {
            return Err(Error::Usage(
                "ratio of scalars with different √π powers".into(),
            ));
        }
        if other.q.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        Ok(&self.q / &other.q)
    }

    /// Sum; both terms must carry the same `√π` power unless one is zero.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.sqrtpi_power != other.sqrtpi_power {
            return Err(Error::Usage(
                "sum of scalars with different √π powers".into(),
            ));
        }
        Ok(Self {
            q: &self.q + &other.q,
            sqrtpi_power: self.sqrtpi_power,
        })
    }

    pub fn to_f64(&self) -> f64 {
        let q = rational_to_f64(&self.q);
        if self.sqrtpi_power == 1 {
            q * core::f64::consts::PI.sqrt()
        } else {
            q
        }
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", RationalText(&self.q))?;
        if self.sqrtpi_power == 1 {
            write!(f, "·√π")?;
        }
        Ok(())
    }
}

/// Renders a rational as `p/q`, or `p` when the denominator is 1.
pub struct RationalText<'a>(pub &'a BigRational);

impl fmt::Display for RationalText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    // scale so both parts fit comfortably before dividing
    let n = q.numer();
    let d = q.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
    let nf = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let df = (d >> shift).to_f64().unwrap_or(f64::NAN);
    nf / df
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub(crate) fn ratio(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `Γ(j + 1/2) = (2j)! / (4^j j!) · √π`.
pub fn gamma_half(j: u32) -> ExactScalar {
    let j = j as u64;
    let num = factorial(2 * j);
    let den = (BigUint::one() << (2 * j)) * factorial(j);
    ExactScalar::with_sqrt_pi(ratio(num, den))
}

/// Polynomial in `t` with rational coefficients, ascending powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(alloc::vec![c])
    }

    /// `a + b t`.
    pub fn linear(a: BigRational, b: BigRational) -> Self {
        Self::new(alloc::vec![a, b])
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = alloc::vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a * BigRational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    /// Multiplication by `t`.
    pub fn times_t(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = alloc::vec![BigRational::zero()];
        c.extend(self.coeffs.iter().cloned());
        Self::new(c)
    }

    /// `p(-t)`.
    pub fn reflect(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| if k % 2 == 1 { -a.clone() } else { a.clone() })
                .collect(),
        )
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t + rational_to_f64(c))
    }

    /// Coefficients as `p/q` strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs
            .iter()
            .map(|c| alloc::format!("{}", RationalText(c)))
            .collect()
    }
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{}", RationalText(&a))?,
                1 => write!(f, "{} t", RationalText(&a))?,
                _ => write!(f, "{} t^{k}", RationalText(&a))?,
            }
        }
        Ok(())
    }
}
