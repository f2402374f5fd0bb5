//! Diagonal heat-kernel polynomials and heat-trace coefficients of odd
//! dimensional spheres and hyperbolic spaces, in exact arithmetic.
//!
//! With `n = 2m + 1`,
//! `K_n(t, 0) = (4πt)^{-n/2} e^{-m²t} P_m(t)` exactly and
//! `κ_n(t, 0) ~ (4πt)^{-n/2} e^{m²t} p_m(t)` as `t → 0⁺`, where
//! `P_m(t) = Σ_k Γ(m-k+½) c_{m,k} / Γ(m+½) · t^k` and `p_m(t) = P_m(-t)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::closed_form::{sphere_odd_kernel, ThetaTruncation};
use crate::error::{domain, Error, Result};
use crate::exact::{gamma_half, ratio, ExactScalar, RationalPoly};

/// Which family of diagonal polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DiagKind {
    Hyperbolic,
    Sphere,
}

/// The three diagonal recurrences in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagIdentity {
    Hyperbolic,
    SphereAtZero,
    SphereAtPi,
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(domain("m must be at least 1"));
    }
    Ok(())
}

/// Elementary symmetric polynomial `e_k(1², 2², …, (m-1)²)`.
pub fn c_mk(m: u32, k: u32) -> Result<BigUint> {
    check_m(m)?;
    if k >= m {
        return Ok(BigUint::zero());
    }
    Ok(c_row(m).swap_remove(k as usize))
}

/// `[c_{m,0}, …, c_{m,m-1}]` by multiplying out `Π_{i<m} (1 + i² x)`.
fn c_row(m: u32) -> Vec<BigUint> {
    let mut e = alloc::vec![BigUint::one()];
    for i in 1..m {
        let sq = BigUint::from(i) * i;
        e.push(BigUint::zero());
        for k in (1..e.len()).rev() {
            let add = &e[k - 1] * &sq;
            e[k] += add;
        }
    }
    e
}

fn int(n: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn diag_poly(m: u32, alternate: bool) -> Result<RationalPoly> {
    check_m(m)?;
    let top = gamma_half(m);
    let coeffs = c_row(m)
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let g = gamma_half(m - k as u32).ratio(&top).expect("same √π power");
            let v = g * int(c);
            if alternate && k % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect();
    Ok(RationalPoly::new(coeffs))
}

/// `P_m`, the exact diagonal polynomial of `ℍ^{2m+1}`.
pub fn hyper_diag_poly(m: u32) -> Result<RationalPoly> {
    diag_poly(m, false)
}

/// `p_m(t) = P_m(-t)`, the diagonal polynomial of `S^{2m+1}`.
pub fn sphere_diag_poly(m: u32) -> Result<RationalPoly> {
    diag_poly(m, true)
}

/// `Q_m / √π` from `Q_j = (j - ½ ± (j-1)² t) Q_{j-1} - t Q'_{j-1}`, `Q₀ = 1`
/// (plus sign for hyperbolic, minus for the sphere).
pub fn q_recurrence(m: u32, kind: DiagKind) -> Result<RationalPoly> {
    check_m(m)?;
    let mut q = RationalPoly::constant(BigRational::one());
    for j in 1..=m as i64 {
        let sq = (j - 1) * (j - 1);
        let slope = match kind {
            DiagKind::Hyperbolic => sq,
            DiagKind::Sphere => -sq,
        };
        let factor = RationalPoly::linear(
            BigRational::new(BigInt::from(2 * j - 1), BigInt::from(2)),
            BigRational::from_integer(slope.into()),
        );
        q = factor.mul(&q).sub(&q.derivative().times_t());
    }
    Ok(q)
}

/// `q_recurrence(m) / (Γ(m+½)/√π)`; equals the diagonal polynomial.
pub fn q_normalized(m: u32, kind: DiagKind) -> Result<RationalPoly> {
    let q = q_recurrence(m, kind)?;
    let g = gamma_half(m).q().clone();
    Ok(q.scale(&(BigRational::one() / g)))
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Heat-trace coefficients `a_{2m+1,k}` for `k = 0..=k_max`:
/// `Σ_l (-1)^l m^{2k-2l} Γ(m-l+½) c_{m,l} / ((2m)! (k-l)!)`.
/// Each is a rational multiple of `√π`.
pub fn heat_trace_coeffs(m: u32, k_max: u32) -> Result<Vec<ExactScalar>> {
    check_m(m)?;
    let c = c_row(m);
    let two_m_fact = factorial(2 * m as u64);
    let mut out = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let mut acc = ExactScalar::from_integer(0);
        for l in 0..=k.min(m - 1) {
            let power = BigUint::from(m).pow(2 * (k - l));
            let q = ratio(
                power * &c[l as usize],
                &two_m_fact * factorial((k - l) as u64),
            );
            let q = if l % 2 == 1 { -q } else { q };
            let term = gamma_half(m - l).mul(&ExactScalar::rational(q))?;
            acc = acc.add(&term)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `Vol(S^{2m+1}) (4π)^{-(2m+1)/2}` as an exact multiple of `√π`, from
/// `Vol(S^{2m+1}) = 2π^{m+1}/m!` with the powers of π tracked in halves.
pub fn weyl_leading(m: u32) -> Result<ExactScalar> {
    check_m(m)?;
    // 2 π^{m+1} / m!  ·  4^{-m} 2^{-1} π^{-m-1/2}
    let half_pi_power = 2 * (m as i64 + 1) - (2 * m as i64 + 1);
    if half_pi_power != 1 {
        return Err(Error::Usage("π powers do not reduce to √π".into()));
    }
    let q = ratio(
        BigUint::from(2u32),
        factorial(m as u64) * (BigUint::one() << (2 * m as u64 + 1)),
    );
    Ok(ExactScalar::with_sqrt_pi(q))
}

/// `(4πt)^{-d/2} · π^{pi_power} · c · e^{rate·t} · poly(t)` kept symbolically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalForm {
    pub dim: u32,
    pub rate: i64,
    pub pi_power: i32,
    pub poly: RationalPoly,
}

impl DiagonalForm {
    /// `(4πt)^{-n/2} e^{∓m²t} poly` for `n = 2m + 1`.
    pub fn odd(m: u32, kind: DiagKind, poly: RationalPoly) -> Self {
        let sq = (m as i64) * (m as i64);
        Self {
            dim: 2 * m + 1,
            rate: match kind {
                DiagKind::Hyperbolic => -sq,
                DiagKind::Sphere => sq,
            },
            pi_power: 0,
            poly,
        }
    }

    /// `∂_t`, using `(4πt)^{-d/2} / t = 4π (4πt)^{-(d+2)/2}`:
    /// the new polynomial is `4π [(-d/2 + rate·t) p + t p']`.
    pub fn time_derivative(&self) -> Self {
        let lin = RationalPoly::linear(
            BigRational::new(BigInt::from(-(self.dim as i64)), BigInt::from(2)),
            BigRational::from_integer(self.rate.into()),
        );
        let poly = lin
            .mul(&self.poly)
            .add(&self.poly.derivative().times_t())
            .scale(&BigRational::from_integer(4.into()));
        Self {
            dim: self.dim + 2,
            rate: self.rate,
            pi_power: self.pi_power + 1,
            poly,
        }
    }

    /// Multiplies by `c · π^{pi_power} · e^{rate·t}`.
    pub fn times(&self, c: &BigRational, pi_power: i32, rate: i64) -> Self {
        Self {
            dim: self.dim,
            rate: self.rate + rate,
            pi_power: self.pi_power + pi_power,
            poly: self.poly.scale(c),
        }
    }
}

/// Checks one of the diagonal time recurrences.
///
/// `Hyperbolic`: `K_{n+2}(t,0) = -e^{-nt}/(2nπ) ∂_t K_n(t,0)` and
/// `SphereAtZero`: `κ_{n+2}(t,0) = -e^{nt}/(2nπ) ∂_t κ_n(t,0)` are compared
/// as exact symbolic forms on the diagonal polynomials. `SphereAtPi`:
/// `κ_{n+2}(t,π) = e^{nt}/(2nπ) ∂_t κ_n(t,π)` is checked numerically at
/// `t ∈ {0.1, 0.2, 0.3}` to relative tolerance 1e-7; later times leave
/// `κ_n(t, π)` so close to uniform that the difference quotient loses it.
pub fn diag_recurrence_identity(m: u32, which: DiagIdentity) -> Result<bool> {
    check_m(m)?;
    let n = 2 * m + 1;
    match which {
        DiagIdentity::Hyperbolic | DiagIdentity::SphereAtZero => {
            let (kind, rate) = if which == DiagIdentity::Hyperbolic {
                (DiagKind::Hyperbolic, -(n as i64))
            } else {
                (DiagKind::Sphere, n as i64)
            };
            let poly = |j| match kind {
                DiagKind::Hyperbolic => hyper_diag_poly(j),
                DiagKind::Sphere => sphere_diag_poly(j),
            };
            let lower = DiagonalForm::odd(m, kind, poly(m)?);
            let upper = DiagonalForm::odd(m + 1, kind, poly(m + 1)?);
            let c = BigRational::new(BigInt::from(-1), BigInt::from(2 * n));
            let rhs = lower.time_derivative().times(&c, -1, rate);
            Ok(rhs == upper)
        }
        DiagIdentity::SphereAtPi => {
            let tr = ThetaTruncation::default();
            for &t in &[0.1, 0.2, 0.3] {
                let upper = sphere_odd_kernel(m + 1, t, PI, &tr)?;
                let dt = richardson_time_derivative(|s| sphere_odd_kernel(m, s, PI, &tr), t)?;
                let rhs = (n as f64 * t).exp() / (2.0 * n as f64 * PI) * dt;
                if (upper - rhs).abs() > 1e-7 * upper.abs() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Central difference with step `1e-3·t` and one Richardson level.
fn richardson_time_derivative(f: impl Fn(f64) -> Result<f64>, t: f64) -> Result<f64> {
    let h = 1e-3 * t;
    let d1 = (f(t + h)? - f(t - h)?) / (2.0 * h);
    let d2 = (f(t + 2.0 * h)? - f(t - 2.0 * h)?) / (4.0 * h);
    Ok((4.0 * d1 - d2) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn c_examples() {
        for m in 1..8 {
            assert_eq!(c_mk(m, 0).unwrap(), BigUint::one());
            assert_eq!(c_mk(m, m).unwrap(), BigUint::zero());
        }
        assert_eq!(c_mk(3, 2).unwrap(), BigUint::from(4u32));
        assert_eq!(c_mk(4, 2).unwrap(), BigUint::from(49u32));
        assert!(c_mk(0, 0).is_err());
    }

    #[test]
    fn diag_poly_examples() {
        assert_eq!(
            hyper_diag_poly(1).unwrap(),
            RationalPoly::from_integers(&[1])
        );
        assert_eq!(
            hyper_diag_poly(2).unwrap(),
            RationalPoly::new(alloc::vec![r(1, 1), r(2, 3)])
        );
        assert_eq!(
            hyper_diag_poly(3).unwrap(),
            RationalPoly::new(alloc::vec![r(1, 1), r(2, 1), r(16, 15)])
        );
        assert_eq!(
            sphere_diag_poly(2).unwrap(),
            RationalPoly::new(alloc::vec![r(1, 1), r(-2, 3)])
        );
        for m in 1..8 {
            assert_eq!(
                sphere_diag_poly(m).unwrap(),
                hyper_diag_poly(m).unwrap().reflect()
            );
        }
    }

    #[test]
    fn q_examples() {
        assert_eq!(
            q_recurrence(1, DiagKind::Hyperbolic).unwrap(),
            RationalPoly::constant(r(1, 2))
        );
        assert_eq!(
            q_recurrence(2, DiagKind::Hyperbolic).unwrap(),
            RationalPoly::new(alloc::vec![r(3, 4), r(1, 2)])
        );
        assert_eq!(
            q_recurrence(2, DiagKind::Sphere).unwrap(),
            RationalPoly::new(alloc::vec![r(3, 4), r(-1, 2)])
        );
        assert_eq!(
            q_normalized(2, DiagKind::Sphere).unwrap(),
            sphere_diag_poly(2).unwrap()
        );
    }

    #[test]
    fn trace_coefficient_examples() {
        let a = heat_trace_coeffs(1, 3).unwrap();
        assert_eq!(a[0], ExactScalar::with_sqrt_pi(r(1, 4)));
        assert_eq!(a[1], ExactScalar::with_sqrt_pi(r(1, 4)));
        assert_eq!(a[2], ExactScalar::with_sqrt_pi(r(1, 8)));
        assert_eq!(a[3], ExactScalar::with_sqrt_pi(r(1, 24)));
        for m in 1..=3 {
            assert_eq!(
                heat_trace_coeffs(m, 0).unwrap()[0],
                weyl_leading(m).unwrap()
            );
        }
    }

    #[test]
    fn trace_coefficients_expand_the_diagonal() {
        // a_k / √π = Vol-free coefficients of e^{m²t} p_m(t) times Γ(m+½)/(2m)!/√π
        for m in 1..6u32 {
            let p = sphere_diag_poly(m).unwrap();
            let lead = gamma_half(m).q().clone() / int(factorial(2 * m as u64));
            let a = heat_trace_coeffs(m, 8).unwrap();
            for (k, ak) in a.iter().enumerate() {
                let mut s = BigRational::zero();
                for j in 0..=k {
                    let e = int(BigUint::from(m).pow(2 * (k - j) as u32))
                        / int(factorial((k - j) as u64));
                    s += p.coeff(j) * e;
                }
                assert_eq!(ak.q(), &(s * &lead), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn exact_diagonal_identities() {
        for m in 1..=6 {
            assert!(diag_recurrence_identity(m, DiagIdentity::Hyperbolic).unwrap());
            assert!(diag_recurrence_identity(m, DiagIdentity::SphereAtZero).unwrap());
        }
        assert!(diag_recurrence_identity(1, DiagIdentity::SphereAtPi).unwrap());
    }

    #[test]
    fn symbolic_derivative_by_hand() {
        // -e^{-3t}/(6π) ∂_t[(4πt)^{-3/2} e^{-t}] = (4πt)^{-5/2} e^{-4t}(1 + 2t/3)
        let k3 = DiagonalForm::odd(1, DiagKind::Hyperbolic, RationalPoly::from_integers(&[1]));
        let got = k3.time_derivative().times(&r(-1, 6), -1, -3);
        assert_eq!(got.dim, 5);
        assert_eq!(got.rate, -4);
        assert_eq!(got.pi_power, 0);
        assert_eq!(got.poly, RationalPoly::new(alloc::vec![r(1, 1), r(2, 3)]));
    }
}
