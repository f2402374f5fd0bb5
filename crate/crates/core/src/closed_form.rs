//! Closed-form kernels: the Euclidean Gaussian, the wrapped Gaussian on the
//! circle, and the odd-dimensional sphere and hyperbolic kernels produced by
//! iterating the dimension ladder on them.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::evaluator::{Capabilities, KernelEvaluator};
use crate::geometry::SpaceForm;
use crate::jet::{
    gaussian_coeffs, jet_elementary, ladder_apply, snap, symmetric_center, Elementary, Jet,
};
use crate::quadrature::{integrate_doubling, GaussLegendre};
use crate::spectral::{sphere_kernel_spectral, SpectralTruncation};

/// Sphere and hyperbolic kernels are not evaluated below this time.
pub const MIN_TIME: f64 = 1e-4;

/// Extra Taylor orders carried when a jet is expanded at a symmetric point
/// and then shifted to a nearby center.
const SHIFT_GUARD: usize = 40;

/// How many images of the wrapped Gaussian to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaTruncation {
    pub tol: f64,
    pub max_terms: usize,
}

impl ThetaTruncation {
    pub fn new(tol: f64, max_terms: usize) -> Result<Self> {
        if !(tol > 0.0) || max_terms < 1 {
            return Err(domain("theta truncation needs tol > 0 and max_terms >= 1"));
        }
        Ok(Self { tol, max_terms })
    }

    /// Smallest `K >= 1` whose tail majorant
    /// `2 (4πt)^{-1/2} e^{-(2Kπ-π)^2/4t} / (1 - e^{-π^2/t})` is below `tol`.
    /// `K >= 1` keeps both images nearest to any `r` in `[0, π]`.
    pub fn images(&self, t: f64) -> Result<usize> {
        let ln_tol = self.tol.ln();
        let head = 2f64.ln() - 0.5 * (4.0 * PI * t).ln() - (-(-PI * PI / t).exp_m1()).ln();
        for k in 1..=self.max_terms {
            let d = (2 * k - 1) as f64 * PI;
            if head - d * d / (4.0 * t) < ln_tol {
                return Ok(k);
            }
        }
        Err(Error::Truncation {
            what: "theta series",
            max_terms: self.max_terms,
        })
    }
}

impl Default for ThetaTruncation {
    fn default() -> Self {
        Self {
            tol: 1e-30,
            max_terms: 10_000,
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

fn check_floor(t: f64) -> Result<()> {
    check_time(t)?;
    if t < MIN_TIME {
        return Err(domain(format!(
            "t = {t} is below the small-time floor {MIN_TIME}"
        )));
    }
    Ok(())
}

/// `H_n(t, r) = (4πt)^{-n/2} e^{-r^2/4t}`.
pub fn euclid_kernel(n: u32, t: f64, r: f64) -> Result<f64> {
    check_time(t)?;
    if n == 0 || !(r >= 0.0) {
        return Err(domain("euclidean kernel needs n >= 1 and r >= 0"));
    }
    Ok((4.0 * PI * t).powf(-0.5 * n as f64) * (-r * r / (4.0 * t)).exp())
}

/// Jet of the wrapped Gaussian `κ₁(t, ·)` at `r0`. Any real `r0` is accepted;
/// the images are re-indexed around the one nearest to `r0`.
pub fn circle_kernel_jet(t: f64, r0: f64, order: usize, trunc: &ThetaTruncation) -> Result<Jet> {
    check_time(t)?;
    if !r0.is_finite() {
        return Err(domain("circle kernel center must be finite"));
    }
    let big_k = trunc.images(t)? as i64;
    let base = snap(r0);
    let shift = (base / (2.0 * PI)).round() as i64;
    let mut images: Vec<f64> = (-big_k..=big_k)
        .map(|k| base + 2.0 * (k - shift) as f64 * PI)
        .collect();
    // smallest contributions first
    images.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let mut coeffs = alloc::vec![0.0; order + 1];
    for y in images {
        for (c, g) in coeffs.iter_mut().zip(gaussian_coeffs(y, t, order)) {
            *c += g;
        }
    }
    let norm = (4.0 * PI * t).powf(-0.5);
    let jet = Jet::new(base, coeffs)?.scale(norm);
    Ok(if symmetric_center(base).is_some() {
        jet.even_part()
    } else {
        jet
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ladder {
    Sphere,
    Hyperbolic,
}

/// Distance below which a center is treated through the nearby symmetric point.
fn shift_radius(kind: Ladder, t: f64) -> f64 {
    match kind {
        Ladder::Sphere => 0.5 * t.sqrt().min(t).min(1.0),
        Ladder::Hyperbolic => 0.5 * t.sqrt().min(1.0),
    }
}

fn nearby_symmetric_point(kind: Ladder, t: f64, r0: f64) -> Option<f64> {
    let radius = shift_radius(kind, t);
    if r0.abs() <= radius {
        Some(0.0)
    } else if kind == Ladder::Sphere && (PI - r0).abs() <= radius {
        Some(PI)
    } else {
        None
    }
}

fn ladder_jet(
    kind: Ladder,
    m: u32,
    t: f64,
    r0: f64,
    order: usize,
    trunc: &ThetaTruncation,
) -> Result<Jet> {
    check_floor(t)?;
    let m_us = m as usize;
    let (center, base_order) = match nearby_symmetric_point(kind, t, r0) {
        Some(c) if symmetric_center(r0).is_some() => (c, order + 2 * m_us + 2),
        Some(c) => (c, order + 2 * m_us + SHIFT_GUARD),
        None => (r0, order + m_us + 2),
    };
    let (mut f, warp, sign) = match kind {
        Ladder::Sphere => (
            circle_kernel_jet(t, center, base_order, trunc)?,
            Elementary::Sin,
            (m as f64 * m as f64 * t).exp(),
        ),
        Ladder::Hyperbolic => {
            let g = jet_elementary(Elementary::Gaussian { shift: 0.0, t }, center, base_order)?;
            let g = g.scale((4.0 * PI * t).powf(-0.5));
            let g = if center == 0.0 { g.even_part() } else { g };
            (g, Elementary::Sinh, (-(m as f64) * m as f64 * t).exp())
        }
    };
    let s = jet_elementary(warp, center, base_order)?;
    for _ in 0..m {
        f = ladder_apply(&f, &s, true)?;
        if symmetric_center(center).is_some() {
            f = f.even_part();
        }
    }
    let f = f.scale(sign * (2.0 * PI).powi(-(m as i32)));
    let f = if f.center() == r0 || symmetric_center(r0).is_some() {
        f
    } else {
        f.recenter(r0 - f.center())
    };
    if f.order() < order {
        return Err(Error::Singularity {
            numerator: f.order(),
            divisor: order,
        });
    }
    Ok(f.truncate(order))
}

fn check_sphere_r(r: f64) -> Result<()> {
    if !(0.0..=PI).contains(&r) {
        return Err(domain(format!("sphere distance {r} outside [0, π]")));
    }
    Ok(())
}

fn check_hyper_r(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain(format!(
            "hyperbolic distance {r} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(domain("odd-dimensional ladder needs m >= 1"));
    }
    Ok(())
}

/// Jet of `κ_{2m+1}(t, ·)` at `r0`.
pub fn sphere_odd_kernel_jet(
    m: u32,
    t: f64,
    r0: f64,
    order: usize,
    trunc: &ThetaTruncation,
) -> Result<Jet> {
    check_m(m)?;
    check_sphere_r(r0)?;
    ladder_jet(Ladder::Sphere, m, t, r0, order, trunc)
}

/// `κ_{2m+1}(t, r) = e^{m²t} (2π)^{-m} (-(1/sin r) ∂_r)^m κ₁`.
pub fn sphere_odd_kernel(m: u32, t: f64, r: f64, trunc: &ThetaTruncation) -> Result<f64> {
    Ok(sphere_odd_kernel_jet(m, t, r, 0, trunc)?.value())
}

/// Jet of `K_{2m+1}(t, ·)` at `r0`.
pub fn hyperbolic_odd_kernel_jet(m: u32, t: f64, r0: f64, order: usize) -> Result<Jet> {
    check_m(m)?;
    check_hyper_r(r0)?;
    ladder_jet(
        Ladder::Hyperbolic,
        m,
        t,
        r0,
        order,
        &ThetaTruncation::default(),
    )
}

/// `K_{2m+1}(t, r) = e^{-m²t} (2π)^{-m} (-(1/sinh r) ∂_r)^m H₁`, starting
/// from the line kernel `K₁ = H₁`.
pub fn hyperbolic_odd_kernel(m: u32, t: f64, r: f64) -> Result<f64> {
    Ok(hyperbolic_odd_kernel_jet(m, t, r, 0)?.value())
}

/// Residuals of the two Euclidean recurrences at `(t, r)`:
/// `|H_{n+2} + factor · (1/r) ∂_r H_n| / H_{n+2}` and
/// `|H_n - 2∫_r^∞ H_{n+1}(ρ) ρ (ρ²-r²)^{-1/2} dρ| / H_n`.
/// The correct `factor` is `1/(2π)`.
pub fn euclid_recurrence_residuals(n: u32, t: f64, r: f64, factor: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(domain("the derivative form needs r > 0"));
    }
    let h_n = euclid_kernel(n, t, r)?;
    let upper = euclid_kernel(n + 2, t, r)?;
    let dh = -r / (2.0 * t) * h_n;
    let derivative = (upper + factor * dh / r).abs() / upper;
    // u² = ρ² - r² turns the weight into du
    let cut = (160.0 * t).sqrt();
    let rule = GaussLegendre::new(20);
    let est = integrate_doubling(
        |u| {
            let rho = (r * r + u * u).sqrt();
            2.0 * euclid_kernel(n + 1, t, rho).unwrap_or(0.0)
        },
        0.0,
        cut,
        &rule,
        2,
        1 << 10,
        1e-14 * h_n,
    )?;
    let integral = (h_n - est.value).abs() / h_n;
    Ok((derivative, integral))
}

/// Larger of the two Euclidean recurrence residuals.
pub fn euclid_recurrence_identity(n: u32, t: f64, r: f64) -> Result<f64> {
    let (a, b) = euclid_recurrence_residuals(n, t, r, 1.0 / (2.0 * PI))?;
    Ok(a.max(b))
}

/// Euclidean Gaussian `H_n`.
#[derive(Debug, Clone, Copy)]
pub struct EuclidKernel {
    n: u32,
}

impl EuclidKernel {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        Ok(Self { n })
    }
}

impl KernelEvaluator for EuclidKernel {
    fn space(&self) -> SpaceForm {
        SpaceForm::euclidean(self.n).expect("n >= 1")
    }

    fn value(&self, t: f64, r: f64) -> Result<f64> {
        euclid_kernel(self.n, t, r)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            radial_jet: true,
            time_derivative: true,
        }
    }

    fn radial_jet(&self, t: f64, r0: f64, order: usize) -> Result<Jet> {
        check_time(t)?;
        let g = jet_elementary(Elementary::Gaussian { shift: 0.0, t }, r0, order)?;
        Ok(g.scale((4.0 * PI * t).powf(-0.5 * self.n as f64)))
    }

    fn time_derivative(&self, t: f64, r: f64) -> Result<f64> {
        let h = euclid_kernel(self.n, t, r)?;
        Ok(h * (-0.5 * self.n as f64 / t + r * r / (4.0 * t * t)))
    }

    fn method(&self) -> &'static str {
        "closed_form"
    }
}

/// `h_t` from the radial heat equation and a second-order jet:
/// `2a₂ + (n-1) c(r) a₁`, whose limit at a symmetric point is `2n a₂`.
fn time_derivative_from_jet(jet: &Jet, n: u32, mean_curvature: f64, symmetric: bool) -> f64 {
    let a = jet.coeffs();
    if symmetric {
        2.0 * n as f64 * a[2]
    } else {
        2.0 * a[2] + (n as f64 - 1.0) * mean_curvature * a[1]
    }
}

/// The wrapped Gaussian `κ₁` on the circle.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleKernel {
    pub trunc: ThetaTruncation,
}

impl KernelEvaluator for CircleKernel {
    fn space(&self) -> SpaceForm {
        SpaceForm::sphere(1).expect("n >= 1")
    }

    fn value(&self, t: f64, r: f64) -> Result<f64> {
        check_sphere_r(r)?;
        Ok(circle_kernel_jet(t, r, 0, &self.trunc)?.value())
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            radial_jet: true,
            time_derivative: true,
        }
    }

    fn radial_jet(&self, t: f64, r0: f64, order: usize) -> Result<Jet> {
        circle_kernel_jet(t, r0, order, &self.trunc)
    }

    fn time_derivative(&self, t: f64, r: f64) -> Result<f64> {
        Ok(2.0 * circle_kernel_jet(t, r, 2, &self.trunc)?.coeffs()[2])
    }

    fn method(&self) -> &'static str {
        "theta"
    }
}

/// `κ_{2m+1}` through the ladder.
/// Beyond `m²t` of this size the image sum cancels by `e^{m²t}` and the
/// evaluator switches to the zonal series, which then needs a few terms.
const LATE_EXPONENT: f64 = 8.0;

#[derive(Debug, Clone, Copy)]
pub struct SphereOddKernel {
    m: u32,
    trunc: ThetaTruncation,
}

impl SphereOddKernel {
    pub fn new(m: u32, trunc: ThetaTruncation) -> Result<Self> {
        check_m(m)?;
        Ok(Self { m, trunc })
    }

    /// The kernel of `S^n` for odd `n >= 3`.
    pub fn of_dim(n: u32) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(domain(format!("closed form needs odd n >= 3, got {n}")));
        }
        Self::new((n - 1) / 2, ThetaTruncation::default())
    }
}

impl KernelEvaluator for SphereOddKernel {
    fn space(&self) -> SpaceForm {
        SpaceForm::sphere(2 * self.m + 1).expect("n >= 1")
    }

    fn value(&self, t: f64, r: f64) -> Result<f64> {
        if (self.m * self.m) as f64 * t > LATE_EXPONENT {
            let n = 2 * self.m + 1;
            return sphere_kernel_spectral(n, t, r, &SpectralTruncation::fast());
        }
        sphere_odd_kernel(self.m, t, r, &self.trunc)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            radial_jet: true,
            time_derivative: true,
        }
    }

    fn radial_jet(&self, t: f64, r0: f64, order: usize) -> Result<Jet> {
        sphere_odd_kernel_jet(self.m, t, r0, order, &self.trunc)
    }

    fn time_derivative(&self, t: f64, r: f64) -> Result<f64> {
        let jet = self.radial_jet(t, r, 2)?;
        let space = self.space();
        Ok(time_derivative_from_jet(
            &jet,
            space.dim(),
            space.mean_curvature(r),
            symmetric_center(jet.center()).is_some(),
        ))
    }

    fn method(&self) -> &'static str {
        "closed_form"
    }
}

/// `K_{2m+1}` through the ladder.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolicOddKernel {
    m: u32,
}

impl HyperbolicOddKernel {
    pub fn new(m: u32) -> Result<Self> {
        check_m(m)?;
        Ok(Self { m })
    }

    pub fn of_dim(n: u32) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(domain(format!("closed form needs odd n >= 3, got {n}")));
        }
        Self::new((n - 1) / 2)
    }
}

impl KernelEvaluator for HyperbolicOddKernel {
    fn space(&self) -> SpaceForm {
        SpaceForm::hyperbolic(2 * self.m + 1).expect("n >= 1")
    }

    fn value(&self, t: f64, r: f64) -> Result<f64> {
        hyperbolic_odd_kernel(self.m, t, r)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            radial_jet: true,
            time_derivative: true,
        }
    }

    fn radial_jet(&self, t: f64, r0: f64, order: usize) -> Result<Jet> {
        hyperbolic_odd_kernel_jet(self.m, t, r0, order)
    }

    fn time_derivative(&self, t: f64, r: f64) -> Result<f64> {
        let jet = self.radial_jet(t, r, 2)?;
        let space = self.space();
        Ok(time_derivative_from_jet(
            &jet,
            space.dim(),
            space.mean_curvature(r),
            symmetric_center(jet.center()).is_some(),
        ))
    }

    fn method(&self) -> &'static str {
        "closed_form"
    }
}
