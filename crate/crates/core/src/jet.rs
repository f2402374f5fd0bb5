//! Truncated Taylor expansions ("jets") of functions of the geodesic distance.
//!
//! A [`Jet`] of order `d` at `r0` stores `a_k = f^{(k)}(r0)/k!` for `k = 0..=d`.
//! Division understands matched vanishing orders, so `(1/sin r) ∂_r f` is
//! computed exactly at `r = 0` and `r = π` when `f` is even about the center.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Neg;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Centers within this distance of 0 or π are snapped onto the exact point.
pub const SNAP_TOL: f64 = 1e-14;

/// Leading numerator coefficients below this fraction of the largest one are
/// treated as vanishing when dividing by a series that vanishes at the center.
const VANISH_TOL: f64 = 1e-10;

/// Distinguished centers where `sin` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetricCenter {
    Zero,
    Pi,
}

/// Returns the symmetric center `r0` snaps to, if any.
pub fn symmetric_center(r0: f64) -> Option<SymmetricCenter> {
    if r0.abs() <= SNAP_TOL {
        Some(SymmetricCenter::Zero)
    } else if (r0 - PI).abs() <= SNAP_TOL {
        Some(SymmetricCenter::Pi)
    } else {
        None
    }
}

pub(crate) fn snap(r0: f64) -> f64 {
    match symmetric_center(r0) {
        Some(SymmetricCenter::Zero) => 0.0,
        Some(SymmetricCenter::Pi) => PI,
        None => r0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    center: f64,
    coeffs: Vec<f64>,
}

/// Binary operations accepted by [`jet_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Analytic functions with closed-form Taylor coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Sinh,
    Cosh,
    /// `exp(-(r + shift)^2 / (4 t))`
    Gaussian {
        shift: f64,
        t: f64,
    },
}

impl Jet {
    pub fn new(center: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Usage("a jet needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Usage("jet coefficients must be finite".into()));
        }
        Ok(Self { center, coeffs })
    }

    pub(crate) fn from_parts(center: f64, coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { center, coeffs }
    }

    pub fn constant(center: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    /// The identity function `r` expanded at `center`.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = center;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Self { center, coeffs }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `k`-th derivative at the center, `k! a_k`.
    pub fn derivative_at_center(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for j in 2..=k {
            f *= j as f64;
        }
        self.coeffs.get(k).copied().unwrap_or(0.0) * f
    }

    /// Sum of the truncated series at `center + offset`.
    pub fn eval_offset(&self, offset: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * offset + c)
    }

    /// Re-expands the truncated series about `center + offset`, keeping the order.
    pub fn recenter(&self, offset: f64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division by (x - offset)
        for j in 0..n {
            for k in (j..n - 1).rev() {
                c[k] += offset * c[k + 1];
            }
        }
        Self {
            center: self.center + offset,
            coeffs: c,
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = (order + 1).min(self.coeffs.len());
        Self {
            center: self.center,
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `d/dr`, lowering the order by one. A constant jet differentiates to a zero constant.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(self.center, 0.0, 0);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| (k + 1) as f64 * c)
            .collect();
        Self {
            center: self.center,
            coeffs,
        }
    }

    /// Index of the first coefficient that is not negligible against the largest one.
    pub fn valuation(&self, rel_tol: f64) -> Option<usize> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return None;
        }
        self.coeffs.iter().position(|c| c.abs() > rel_tol * scale)
    }

    /// Zeroes the odd coefficients, making the jet exactly even about its center.
    pub fn even_part(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 1 { 0.0 } else { c })
            .collect();
        Self {
            center: self.center,
            coeffs,
        }
    }

    fn check_center(&self, other: &Self) -> Result<()> {
        if self.center == other.center {
            Ok(())
        } else {
            Err(Error::Usage(alloc::format!(
                "jets expanded at different centers ({} vs {})",
                self.center,
                other.center
            )))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let d = self.order().min(other.order());
        let coeffs = (0..=d).map(|k| self.coeffs[k] + other.coeffs[k]).collect();
        Ok(Self::from_parts(self.center, coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let d = self.order().min(other.order());
        let coeffs = (0..=d).map(|k| self.coeffs[k] - other.coeffs[k]).collect();
        Ok(Self::from_parts(self.center, coeffs))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let d = self.order().min(other.order());
        let coeffs = (0..=d)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum())
            .collect();
        Ok(Self::from_parts(self.center, coeffs))
    }

    /// Series quotient. When the divisor vanishes to order `v` at the center
    /// (exact zeros), the numerator must vanish to at least the same order and
    /// the quotient loses `v` orders.
    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let v_b = match other.coeffs.iter().position(|&c| c != 0.0) {
            Some(v) => v,
            None => {
                return Err(Error::Singularity {
                    numerator: self.valuation(VANISH_TOL).unwrap_or(usize::MAX),
                    divisor: usize::MAX,
                })
            }
        };
        let d = self.order().min(other.order());
        if v_b > d {
            return Err(Error::Singularity {
                numerator: self.valuation(VANISH_TOL).unwrap_or(usize::MAX),
                divisor: v_b,
            });
        }
        if v_b > 0 {
            let head = self.truncate(d);
            if let Some(v_a) = head.valuation(VANISH_TOL) {
                if v_a < v_b {
                    return Err(Error::Singularity {
                        numerator: v_a,
                        divisor: v_b,
                    });
                }
            }
        }
        let num = &self.coeffs[v_b..=d];
        let den = &other.coeffs[v_b..=d];
        let mut out: Vec<f64> = Vec::with_capacity(num.len());
        for k in 0..num.len() {
            let mut acc = num[k];
            for j in 1..=k {
                acc -= den[j] * out[k - j];
            }
            out.push(acc / den[0]);
        }
        Ok(Self::from_parts(self.center, out))
    }

    /// `exp` of the jet.
    pub fn exp(&self) -> Self {
        let p = &self.coeffs;
        let mut g = Vec::with_capacity(p.len());
        g.push(p[0].exp());
        for k in 1..p.len() {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * p[j] * g[k - j];
            }
            g.push(acc / k as f64);
        }
        Self::from_parts(self.center, g)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for c in &mut self.coeffs {
            *c = -*c;
        }
        self
    }
}

/// Applies `op` to two jets expanded at the same center.
pub fn jet_arith(a: &Jet, b: &Jet, op: JetOp) -> Result<Jet> {
    match op {
        JetOp::Add => a.add(b),
        JetOp::Sub => a.sub(b),
        JetOp::Mul => a.mul(b),
        JetOp::Div => a.div(b),
    }
}

/// Taylor coefficients of an elementary function about `center`.
///
/// Centers within [`SNAP_TOL`] of 0 or π are moved onto the exact point and
/// use exact values of `sin` and `cos` there.
pub fn jet_elementary(kind: Elementary, center: f64, order: usize) -> Result<Jet> {
    let c = snap(center);
    let (s, co) = match symmetric_center(c) {
        Some(SymmetricCenter::Zero) => (0.0, 1.0),
        Some(SymmetricCenter::Pi) => (0.0, -1.0),
        None => (c.sin(), c.cos()),
    };
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut inv_fact = 1.0;
    match kind {
        Elementary::Sin | Elementary::Cos => {
            let cycle = if kind == Elementary::Sin {
                [s, co, -s, -co]
            } else {
                [co, -s, -co, s]
            };
            for k in 0..=order {
                if k > 0 {
                    inv_fact /= k as f64;
                }
                coeffs.push(cycle[k % 4] * inv_fact);
            }
        }
        Elementary::Sinh | Elementary::Cosh => {
            let (sh, ch) = if c == 0.0 {
                (0.0, 1.0)
            } else {
                (c.sinh(), c.cosh())
            };
            let (even, odd) = if kind == Elementary::Sinh {
                (sh, ch)
            } else {
                (ch, sh)
            };
            for k in 0..=order {
                if k > 0 {
                    inv_fact /= k as f64;
                }
                coeffs.push(if k % 2 == 0 { even } else { odd } * inv_fact);
            }
        }
        Elementary::Gaussian { shift, t } => {
            if !(t > 0.0) {
                return Err(crate::error::domain("gaussian jet needs t > 0"));
            }
            return Ok(Jet::from_parts(c, gaussian_coeffs(c + shift, t, order)));
        }
    }
    Ok(Jet::from_parts(c, coeffs))
}

/// Coefficients of `x ↦ exp(-(y0 + x)^2 / (4t))` at `x = 0`.
pub(crate) fn gaussian_coeffs(y0: f64, t: f64, order: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(order + 1);
    g.push((-y0 * y0 / (4.0 * t)).exp());
    let p1 = -y0 / (2.0 * t);
    let p2 = -1.0 / (4.0 * t);
    for k in 1..=order {
        let mut acc = p1 * g[k - 1];
        if k >= 2 {
            acc += 2.0 * p2 * g[k - 2];
        }
        g.push(acc / k as f64);
    }
    g
}

/// `∓(1/s) ∂_r f`: one rung of the dimension ladder.
///
/// `s` is the warp jet (`sin` or `sinh`) at the same center. At centers where
/// `s` vanishes the derivative of `f` must vanish too, and the result loses an
/// extra order.
pub fn ladder_apply(f: &Jet, s: &Jet, negate: bool) -> Result<Jet> {
    if f.order() == 0 {
        return Err(Error::Usage(
            "ladder needs a jet of order at least 1".into(),
        ));
    }
    let df = f.derivative();
    let q = df.div(&s.truncate(df.order()))?;
    Ok(if negate { -q } else { q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn product_of_linear_jets() {
        let a = Jet::new(0.0, vec![1.0, 1.0, 0.0]).unwrap();
        let b = Jet::new(0.0, vec![1.0, -1.0, 0.0]).unwrap();
        let p = jet_arith(&a, &b, JetOp::Mul).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn sin_over_sin_is_one() {
        let s = jet_elementary(Elementary::Sin, 0.0, 4).unwrap();
        let q = jet_arith(&s, &s, JetOp::Div).unwrap();
        assert_eq!(q.order(), 3);
        close(q.coeffs(), &[1.0, 0.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn removable_and_pole_division() {
        let r2 = Jet::new(0.0, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let r1 = Jet::new(0.0, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let q = r2.div(&r1).unwrap();
        close(q.coeffs(), &[0.0, 1.0, 0.0], 0.0);
        assert_eq!(
            r1.div(&r2),
            Err(Error::Singularity {
                numerator: 1,
                divisor: 2
            })
        );
    }

    #[test]
    fn mismatched_centers_rejected() {
        let a = Jet::constant(0.0, 1.0, 2);
        let b = Jet::constant(0.5, 1.0, 2);
        assert!(matches!(a.add(&b), Err(Error::Usage(_))));
    }

    #[test]
    fn elementary_coefficients() {
        let s = jet_elementary(Elementary::Sin, 0.0, 3).unwrap();
        close(s.coeffs(), &[0.0, 1.0, 0.0, -1.0 / 6.0], 1e-16);
        let ch = jet_elementary(Elementary::Cosh, 0.0, 2).unwrap();
        close(ch.coeffs(), &[1.0, 0.0, 0.5], 1e-16);
        let g = jet_elementary(
            Elementary::Gaussian {
                shift: 0.0,
                t: 0.25,
            },
            0.0,
            2,
        )
        .unwrap();
        close(g.coeffs(), &[1.0, 0.0, -1.0], 1e-16);
        // exact zeros at π
        let sp = jet_elementary(Elementary::Sin, PI + 5e-15, 3).unwrap();
        assert_eq!(sp.center(), PI);
        assert_eq!(sp.coeffs(), &[0.0, -1.0, 0.0, 1.0 / 6.0]);
    }

    #[test]
    fn gaussian_matches_exp_of_quadratic() {
        let (r0, t, shift) = (0.7, 0.3, 2.0);
        let g = jet_elementary(Elementary::Gaussian { shift, t }, r0, 6).unwrap();
        let y = Jet::variable(r0, 6)
            .add(&Jet::constant(r0, shift, 6))
            .unwrap();
        let e = y.mul(&y).unwrap().scale(-1.0 / (4.0 * t)).exp();
        close(g.coeffs(), e.coeffs(), 1e-15);
    }

    #[test]
    fn ladder_examples() {
        let c = jet_elementary(Elementary::Cos, 0.0, 3).unwrap();
        let s = jet_elementary(Elementary::Sin, 0.0, 3).unwrap();
        let q = ladder_apply(&c, &s, true).unwrap();
        close(q.coeffs(), &[1.0, 0.0], 1e-15);

        let ch = jet_elementary(Elementary::Cosh, 0.0, 3).unwrap();
        let sh = jet_elementary(Elementary::Sinh, 0.0, 3).unwrap();
        let q = ladder_apply(&ch, &sh, false).unwrap();
        close(q.coeffs(), &[1.0, 0.0], 1e-15);

        // hand derivative of exp(-r^2/4t): -(r/2t) e^{-r^2/4t}
        let t = 0.4;
        let g = jet_elementary(Elementary::Gaussian { shift: 0.0, t }, 1.0, 3).unwrap();
        let s = jet_elementary(Elementary::Sin, 1.0, 3).unwrap();
        let q = ladder_apply(&g, &s, true).unwrap();
        let expect = (1.0 / (2.0 * t)) * (-1.0 / (4.0 * t)).exp() / 1f64.sin();
        assert!((q.value() - expect).abs() < 1e-15 * expect.abs());
        assert_eq!(q.order(), 2);
    }

    #[test]
    fn ladder_pole_detected() {
        // f = r has f' = 1, not vanishing where sin does
        let f = Jet::variable(0.0, 3);
        let s = jet_elementary(Elementary::Sin, 0.0, 3).unwrap();
        assert!(matches!(
            ladder_apply(&f, &s, true),
            Err(Error::Singularity {
                numerator: 0,
                divisor: 1
            })
        ));
    }

    fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    #[test]
    fn ladder_agrees_with_difference_quotient() {
        let t = 0.35;
        let f = |r: f64| (-(r * r) / (4.0 * t)).exp() * r.cos();
        for &r0 in &[0.3, 1.1, 2.5] {
            let g = jet_elementary(Elementary::Gaussian { shift: 0.0, t }, r0, 4).unwrap();
            let c = jet_elementary(Elementary::Cos, r0, 4).unwrap();
            let s = jet_elementary(Elementary::Sin, r0, 4).unwrap();
            let q = ladder_apply(&g.mul(&c).unwrap(), &s, true).unwrap();
            let fd = -richardson_derivative(f, r0, 1e-3) / r0.sin();
            assert!(
                (q.value() - fd).abs() < 1e-8 * fd.abs().max(1e-3),
                "r0={r0}"
            );
        }
    }

    #[test]
    fn evenness_propagates_through_ladder() {
        let t = 0.2;
        let mut f = jet_elementary(Elementary::Gaussian { shift: 0.0, t }, 0.0, 8).unwrap();
        let s = jet_elementary(Elementary::Sin, 0.0, 8).unwrap();
        for _ in 0..3 {
            f = ladder_apply(&f, &s, true).unwrap();
            let scale = f.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for (k, c) in f.coeffs().iter().enumerate() {
                if k % 2 == 1 {
                    assert!(c.abs() <= 1e-12 * scale);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mul_then_div_roundtrips(
            a in proptest::collection::vec(-3.0f64..3.0, 6),
            b_tail in proptest::collection::vec(-0.5f64..0.5, 5),
            b0 in 1.0f64..2.0,
        ) {
            let mut bc = vec![b0];
            bc.extend(b_tail);
            let a = Jet::new(0.4, a).unwrap();
            let b = Jet::new(0.4, bc).unwrap();
            let back = a.mul(&b).unwrap().div(&b).unwrap();
            let scale = a.coeffs().iter().fold(1.0f64, |m, c| m.max(c.abs()));
            for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-13 * scale);
            }
        }
    }
}
