//! Eigenfunction expansion of the sphere heat kernel: the independent
//! oracle for everything computed through recurrences.
//!
//! On `S^n` the eigenvalues are `k(k+n-1)` with the multiplicity of degree-`k`
//! spherical harmonics, and the zonal eigenfunctions are Gegenbauer
//! polynomials `C_k^{(n-1)/2}(cos r)` normalized to 1 at `r = 0`.

use alloc::format;
use num_bigint::BigUint;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;
use num_traits::One;

use crate::dd::DoubleDouble;
use crate::error::{domain, Error, Result};
use crate::evaluator::{Capabilities, KernelEvaluator};
use crate::geometry::{sphere_volume_f64, SpaceForm};
use crate::jet::{jet_elementary, Elementary, Jet};

/// Arithmetic used to accumulate the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    /// Double-double accumulation; needed where the series cancels heavily
    /// (kernel values near the antipode at small times).
    DoubleDouble,
}

/// Stopping rule: drop terms once `multiplicity · e^{-λ t} < tol` and the
/// bound has started to decrease.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTruncation {
    pub tol: f64,
    pub k_max: usize,
    pub precision: Precision,
}

impl SpectralTruncation {
    pub fn new(tol: f64, k_max: usize, precision: Precision) -> Result<Self> {
        if !(tol > 0.0) || k_max < 1 {
            return Err(domain("spectral truncation needs tol > 0 and k_max >= 1"));
        }
        Ok(Self {
            tol,
            k_max,
            precision,
        })
    }

    /// Oracle grade: double-double sums to an absolute tail of 1e-26.
    pub fn oracle() -> Self {
        Self {
            tol: 1e-26,
            k_max: 200_000,
            precision: Precision::DoubleDouble,
        }
    }

    /// Plain double sums; used inside quadratures where only absolute
    /// accuracy matters.
    pub fn fast() -> Self {
        Self {
            tol: 1e-18,
            k_max: 400_000,
            precision: Precision::Double,
        }
    }
}

impl Default for SpectralTruncation {
    fn default() -> Self {
        Self::oracle()
    }
}

fn check_dim(n: u32) -> Result<()> {
    if n < 2 {
        return Err(domain(format!("spectral expansion needs n >= 2, got {n}")));
    }
    Ok(())
}

/// Dimension of the degree-`k` spherical harmonics on `S^n`:
/// `(2k+n-1) (k+n-2)! / (k! (n-1)!)`.
pub fn multiplicity(n: u32, k: u64) -> Result<BigUint> {
    check_dim(n)?;
    let mut binom = BigUint::one();
    for j in 1..=(n as u64 - 2) {
        binom = binom * BigUint::from(k + j) / BigUint::from(j);
    }
    Ok(binom * BigUint::from(2 * k + n as u64 - 1) / BigUint::from(n as u64 - 1))
}

pub(crate) fn multiplicity_u128(n: u32, k: u64) -> Option<u128> {
    let mut binom: u128 = 1;
    for j in 1..=(n as u128 - 2) {
        binom = binom.checked_mul(k as u128 + j)? / j;
    }
    Some(binom.checked_mul(2 * k as u128 + n as u128 - 1)? / (n as u128 - 1))
}

/// `C_k(x) / C_k(1)` for the Gegenbauer parameter `(n-1)/2`, via the
/// normalized three-term recurrence
/// `R_{k+1} = ((2k+n-1) x R_k - k R_{k-1}) / (k+n-1)`.
pub fn zonal_ratio(n: u32, k: usize, x: f64) -> Result<f64> {
    check_dim(n)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain(format!("zonal argument {x} outside [-1, 1]")));
    }
    let mut prev = 1.0;
    if k == 0 {
        return Ok(prev);
    }
    let mut cur = x;
    for j in 1..k {
        let next = ((2 * j + n as usize - 1) as f64 * x * cur - j as f64 * prev)
            / (j + n as usize - 1) as f64;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Walks the spectrum term by term, calling `visit(k, weight)` with
/// `weight = multiplicity · e^{-k(k+n-1)t}` until the stopping rule fires.
/// Returns the number of terms visited.
fn walk_spectrum(
    n: u32,
    t: f64,
    trunc: &SpectralTruncation,
    mut visit: impl FnMut(usize, f64),
) -> Result<usize> {
    let mut prev_bound = f64::INFINITY;
    for k in 0..=trunc.k_max {
        let mult = multiplicity_u128(n, k as u64).ok_or(Error::Truncation {
            what: "spectral multiplicity",
            max_terms: k,
        })? as f64;
        let lambda = (k * (k + n as usize - 1)) as f64;
        let bound = mult * (-lambda * t).exp();
        if k > 0 && bound < trunc.tol && bound <= prev_bound {
            return Ok(k);
        }
        visit(k, bound);
        prev_bound = bound;
    }
    Err(Error::Truncation {
        what: "spectral series",
        max_terms: trunc.k_max,
    })
}

/// Number of spectral terms the stopping rule keeps.
pub fn term_count(n: u32, t: f64, trunc: &SpectralTruncation) -> Result<usize> {
    check_dim(n)?;
    walk_spectrum(n, t, trunc, |_, _| {})
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// Sum of `multiplicity · e^{-λ t} · zonal(cos r)` over the spectrum, before
/// dividing by the volume.
fn zonal_series(n: u32, t: f64, x: f64, trunc: &SpectralTruncation) -> Result<f64> {
    match trunc.precision {
        Precision::Double => {
            let (mut prev, mut cur) = (1.0, x);
            let mut sum = 0.0;
            walk_spectrum(n, t, trunc, |k, w| {
                let z = match k {
                    0 => 1.0,
                    1 => x,
                    _ => {
                        let j = k - 1;
                        let next = ((2 * j + n as usize - 1) as f64 * x * cur - j as f64 * prev)
                            / (j + n as usize - 1) as f64;
                        prev = cur;
                        cur = next;
                        next
                    }
                };
                sum += w * z;
            })?;
            Ok(sum)
        }
        Precision::DoubleDouble => {
            let xd = DoubleDouble::from_f64(x);
            let (mut prev, mut cur) = (DoubleDouble::ONE, xd);
            let mut sum = DoubleDouble::ZERO;
            let mut overflow = false;
            walk_spectrum(n, t, trunc, |k, _| {
                let z = match k {
                    0 => DoubleDouble::ONE,
                    1 => xd,
                    _ => {
                        let j = k - 1;
                        let next = (xd * cur).mul_f64((2 * j + n as usize - 1) as f64)
                            - prev.mul_f64(j as f64);
                        let next = next.div_f64((j + n as usize - 1) as f64);
                        prev = cur;
                        cur = next;
                        next
                    }
                };
                let lambda = (k * (k + n as usize - 1)) as f64;
                let decay = (-DoubleDouble::product(lambda, t)).exp();
                match multiplicity_u128(n, k as u64) {
                    Some(m) => sum = sum + decay * DoubleDouble::from_u128(m) * z,
                    None => overflow = true,
                }
            })?;
            if overflow {
                return Err(Error::Truncation {
                    what: "spectral multiplicity",
                    max_terms: trunc.k_max,
                });
            }
            Ok(sum.to_f64())
        }
    }
}

/// Heat kernel of `S^n` from its eigenfunction expansion.
pub fn sphere_kernel_spectral(n: u32, t: f64, r: f64, trunc: &SpectralTruncation) -> Result<f64> {
    check_dim(n)?;
    check_time(t)?;
    if !(0.0..=core::f64::consts::PI).contains(&r) {
        return Err(domain(format!("sphere distance {r} outside [0, π]")));
    }
    Ok(zonal_series(n, t, r.cos(), trunc)? / sphere_volume_f64(n))
}

/// Heat trace `Σ multiplicity · e^{-λ t}` of `S^n`.
pub fn sphere_trace(n: u32, t: f64, trunc: &SpectralTruncation) -> Result<f64> {
    check_dim(n)?;
    check_time(t)?;
    zonal_series(n, t, 1.0, trunc)
}

/// Diagonal value `κ_n(t, 0) = trace / Vol(S^n)`.
pub fn sphere_diagonal_spectral(n: u32, t: f64, trunc: &SpectralTruncation) -> Result<f64> {
    Ok(sphere_trace(n, t, trunc)? / sphere_volume_f64(n))
}

/// Spectral sphere kernel as an evaluator. Jets come from running the
/// Gegenbauer recurrence on the jet of `cos r`; the time derivative is
/// the termwise derivative of the series.
#[derive(Debug, Clone, Copy)]
pub struct SpectralSphereKernel {
    n: u32,
    trunc: SpectralTruncation,
}

impl SpectralSphereKernel {
    pub fn new(n: u32, trunc: SpectralTruncation) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n, trunc })
    }

    pub fn oracle(n: u32) -> Result<Self> {
        Self::new(n, SpectralTruncation::oracle())
    }

    pub fn fast(n: u32) -> Result<Self> {
        Self::new(n, SpectralTruncation::fast())
    }
}

impl KernelEvaluator for SpectralSphereKernel {
    fn space(&self) -> SpaceForm {
        SpaceForm::sphere(self.n).expect("n >= 2")
    }

    fn value(&self, t: f64, r: f64) -> Result<f64> {
        sphere_kernel_spectral(self.n, t, r, &self.trunc)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            radial_jet: true,
            time_derivative: true,
        }
    }

    fn radial_jet(&self, t: f64, r0: f64, order: usize) -> Result<Jet> {
        check_time(t)?;
        let n = self.n as usize;
        let x = jet_elementary(Elementary::Cos, r0, order)?;
        let mut prev = Jet::constant(x.center(), 1.0, order);
        let mut cur = x.clone();
        let mut sum = Jet::constant(x.center(), 0.0, order);
        let mut err = None;
        walk_spectrum(self.n, t, &self.trunc, |k, w| {
            if err.is_some() {
                return;
            }
            let z = match k {
                0 => prev.clone(),
                1 => cur.clone(),
                _ => {
                    let j = k - 1;
                    let next = x
                        .mul(&cur)
                        .and_then(|xc| xc.scale((2 * j + n - 1) as f64).sub(&prev.scale(j as f64)))
                        .map(|v| v.scale(1.0 / (j + n - 1) as f64));
                    match next {
                        Ok(next) => {
                            prev = core::mem::replace(&mut cur, next.clone());
                            next
                        }
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    }
                }
            };
            match sum.add(&z.scale(w)) {
                Ok(s) => sum = s,
                Err(e) => err = Some(e),
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(sum.scale(1.0 / sphere_volume_f64(self.n)))
    }

    fn time_derivative(&self, t: f64, r: f64) -> Result<f64> {
        check_time(t)?;
        let n = self.n as usize;
        let x = r.cos();
        let (mut prev, mut cur) = (1.0, x);
        let mut sum = 0.0;
        walk_spectrum(self.n, t, &self.trunc, |k, w| {
            let z = match k {
                0 => 1.0,
                1 => x,
                _ => {
                    let j = k - 1;
                    let next =
                        ((2 * j + n - 1) as f64 * x * cur - j as f64 * prev) / (j + n - 1) as f64;
                    prev = cur;
                    cur = next;
                    next
                }
            };
            sum -= (k * (k + n - 1)) as f64 * w * z;
        })?;
        Ok(sum / sphere_volume_f64(self.n))
    }

    fn method(&self) -> &'static str {
        "spectral"
    }
}
