//! Oracle harness: radial heat-equation residuals, total mass, delta
//! convergence, dimension-raising recurrence residuals and the semigroup
//! property, all over [`KernelEvaluator`].

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use crate::abel::{HyperbolicDescent, QuadratureSpec, SphereDescent};
use crate::closed_form::{
    euclid_kernel, CircleKernel, EuclidKernel, HyperbolicOddKernel, SphereOddKernel,
};
use crate::error::{domain, Error, Result};
use crate::evaluator::{Capabilities, FnKernel, KernelEvaluator};
use crate::geometry::{sphere_volume_f64, Curvature, SpaceForm};
use crate::jet::Jet;
use crate::quadrature::{adaptive, integrate_doubling, GaussLegendre};
use crate::spectral::{sphere_kernel_spectral, SpectralSphereKernel, SpectralTruncation};
use crate::trace::{
    c_mk, diag_recurrence_identity, hyper_diag_poly, q_normalized, sphere_diag_poly, DiagIdentity,
    DiagKind,
};

/// Distance step of the radial difference quotients.
pub const R_STEP: f64 = 1e-3;
/// Time step of the time difference quotient, relative to `t`.
pub const T_STEP_REL: f64 = 1e-3;
/// Closest admissible distance to `r = 0` and `r = π`.
pub const SINGULAR_MARGIN: f64 = 0.1;

/// How the derivatives in a residual were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ResidualMethod {
    Jet,
    FiniteDifference,
}

/// Worst residual over a sample grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub max_abs: f64,
    /// Largest residual relative to the kernel value at the same point.
    pub max_rel: f64,
    pub grid: String,
    pub samples: usize,
    /// `(t, r)` of the largest relative residual.
    pub worst: (f64, f64),
    pub method: ResidualMethod,
}

/// Tensor grid of sample times and distances.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    times: Vec<f64>,
    distances: Vec<f64>,
}

impl SampleGrid {
    pub fn new(times: Vec<f64>, distances: Vec<f64>) -> Result<Self> {
        if times.is_empty() || distances.is_empty() {
            return Err(domain("sample grid must be non-empty"));
        }
        if times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(domain("sample times must be positive"));
        }
        Ok(Self { times, distances })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn describe(&self) -> String {
        format!("t={:?} x r={:?}", self.times, self.distances)
    }

    fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .flat_map(move |&t| self.distances.iter().map(move |&r| (t, r)))
    }

    fn check_open_domain(&self, space: &SpaceForm) -> Result<()> {
        for &r in &self.distances {
            let far_from_pi = space.kind() != Curvature::Sphere || r <= PI - SINGULAR_MARGIN;
            if !(r >= SINGULAR_MARGIN) || !far_from_pi || !r.is_finite() {
                return Err(domain(format!(
                    "residual sample r={r} is within {SINGULAR_MARGIN} of a coordinate singularity"
                )));
            }
        }
        Ok(())
    }
}

/// Coordinate in which the radial operator is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `h_rr + (n-1) H(r) h_r` in the geodesic distance.
    #[default]
    Geodesic,
    /// `±(1 - σ²) h_σσ ∓ nσ h_σ` in `σ = cos r` or `cosh r`.
    Sigma,
}

/// Central first and second differences with one Richardson level.
fn central(f: &impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<(f64, f64, f64)> {
    let f0 = f(x)?;
    let (p1, m1) = (f(x + h)?, f(x - h)?);
    let (p2, m2) = (f(x + 2.0 * h)?, f(x - 2.0 * h)?);
    let d1h = (p1 - m1) / (2.0 * h);
    let d1h2 = (p2 - m2) / (4.0 * h);
    let d2h = (p1 - 2.0 * f0 + m1) / (h * h);
    let d2h2 = (p2 - 2.0 * f0 + m2) / (4.0 * h * h);
    Ok((f0, (4.0 * d1h - d1h2) / 3.0, (4.0 * d2h - d2h2) / 3.0))
}

fn checked_step(x: f64, h: f64) -> Result<f64> {
    if x + h == x || !(h > 0.0) {
        return Err(Error::Accuracy {
            what: "difference step underflow",
            estimate: h,
            tol: f64::EPSILON * x.abs(),
        });
    }
    Ok(h)
}

fn time_derivative(k: &impl KernelEvaluator, t: f64, r: f64) -> Result<f64> {
    if k.capabilities().time_derivative {
        return k.time_derivative(t, r);
    }
    let h = checked_step(t, T_STEP_REL * t)?;
    Ok(central(&|s| k.value(s, r), t, h)?.1)
}

/// `(h, h_r, h_rr, method)` at `(t, r)`.
fn radial_derivatives(
    k: &impl KernelEvaluator,
    t: f64,
    r: f64,
) -> Result<(f64, f64, f64, ResidualMethod)> {
    if k.capabilities().radial_jet {
        let j = k.radial_jet(t, r, 2)?;
        return Ok((
            j.value(),
            j.derivative_at_center(1),
            j.derivative_at_center(2),
            ResidualMethod::Jet,
        ));
    }
    let h = checked_step(r, R_STEP)?;
    let (f0, d1, d2) = central(&|x| k.value(t, x), r, h)?;
    Ok((f0, d1, d2, ResidualMethod::FiniteDifference))
}

fn check_space(k: &impl KernelEvaluator, space: &SpaceForm) -> Result<()> {
    if k.space() != *space {
        return Err(Error::Usage(format!(
            "evaluator lives on {:?}, harness asked for {:?}",
            k.space(),
            space
        )));
    }
    Ok(())
}

struct Worst {
    max_abs: f64,
    max_rel: f64,
    worst: (f64, f64),
    samples: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            max_abs: 0.0,
            max_rel: 0.0,
            worst: (f64::NAN, f64::NAN),
            samples: 0,
        }
    }

    fn push(&mut self, t: f64, r: f64, residual: f64, scale: f64) {
        let abs = residual.abs();
        let rel = abs / scale.abs();
        self.samples += 1;
        self.max_abs = self.max_abs.max(abs);
        if rel > self.max_rel || rel.is_nan() || self.worst.0.is_nan() {
            self.max_rel = if rel.is_nan() {
                f64::INFINITY
            } else {
                rel.max(self.max_rel)
            };
            self.worst = (t, r);
        }
    }

    fn report(self, grid: &SampleGrid, method: ResidualMethod) -> ResidualReport {
        ResidualReport {
            max_abs: self.max_abs,
            max_rel: self.max_rel,
            grid: grid.describe(),
            samples: self.samples,
            worst: self.worst,
            method,
        }
    }
}

/// Residual of `h_t = h_rr + (n-1) H(r) h_r` with `H = cot, 1/r, coth`.
pub fn pde_residual(
    k: &impl KernelEvaluator,
    space: &SpaceForm,
    grid: &SampleGrid,
) -> Result<ResidualReport> {
    pde_residual_with(k, space, grid, Stencil::Geodesic)
}

/// [`pde_residual`] with a choice of stencil. The σ stencil always
/// differences in `σ`; on Euclidean space it coincides with the geodesic one.
pub fn pde_residual_with(
    k: &impl KernelEvaluator,
    space: &SpaceForm,
    grid: &SampleGrid,
    stencil: Stencil,
) -> Result<ResidualReport> {
    check_space(k, space)?;
    grid.check_open_domain(space)?;
    let n = space.dim() as f64;
    let mut worst = Worst::new();
    let mut method = ResidualMethod::Jet;
    for (t, r) in grid.points() {
        let ht = time_derivative(k, t, r)?;
        let (h, lap) = match (stencil, space.kind()) {
            (Stencil::Sigma, Curvature::Sphere) | (Stencil::Sigma, Curvature::Hyperbolic) => {
                method = ResidualMethod::FiniteDifference;
                let sphere = space.kind() == Curvature::Sphere;
                let s0 = space.sigma(r);
                let to_r = |s: f64| {
                    if sphere {
                        s.clamp(-1.0, 1.0).acos()
                    } else {
                        s.max(1.0).acosh()
                    }
                };
                let d = checked_step(s0, R_STEP * space.warp(r))?;
                let (g, gs, gss) = central(&|s| k.value(t, to_r(s)), s0, d)?;
                let lap = if sphere {
                    (1.0 - s0 * s0) * gss - n * s0 * gs
                } else {
                    (s0 * s0 - 1.0) * gss + n * s0 * gs
                };
                (g, lap)
            }
            _ => {
                let (h, hr, hrr, m) = radial_derivatives(k, t, r)?;
                if m == ResidualMethod::FiniteDifference {
                    method = m;
                }
                (h, hrr + (n - 1.0) * space.mean_curvature(r) * hr)
            }
        };
        worst.push(t, r, ht - lap, h);
    }
    Ok(worst.report(grid, method))
}

/// `∫ g(r) ω_{n-1} warp(r)^{n-1} dr` over the domain, by Gauss–Legendre
/// panel doubling; non-compact domains are cut where the Gaussian envelope
/// of the heat kernel has fallen below `e^{-100}` and the remainder is bounded.
fn integrate_radial(
    space: &SpaceForm,
    t: f64,
    tol: f64,
    g: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let rule = GaussLegendre::new(32);
    let mut failure: Option<Error> = None;
    let mut integrand = |r: f64| match g(r) {
        Ok(v) => v * space.radial_density(r),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let (top, drift) = match space.kind() {
        Curvature::Sphere => (PI, 0.0),
        Curvature::Euclidean => (20.0 * t.sqrt(), 0.0),
        Curvature::Hyperbolic => {
            let drift = (space.dim() - 1) as f64 * t;
            (drift + 20.0 * t.sqrt(), drift)
        }
    };
    let est = integrate_doubling(&mut integrand, 0.0, top, &rule, 4, 1 << 14, tol)?;
    let tail = if space.kind() == Curvature::Sphere {
        0.0
    } else {
        integrand(top).abs() * 2.0 * t / (top - drift)
    };
    if let Some(e) = failure {
        return Err(e);
    }
    if tail > tol {
        return Err(Error::Accuracy {
            what: "radial tail",
            estimate: tail,
            tol,
        });
    }
    Ok(est.value)
}

/// Total mass `∫ k(t, r) dμ(r)`; stochastic completeness makes it 1.
pub fn normalization(k: &impl KernelEvaluator, space: &SpaceForm, t: f64, tol: f64) -> Result<f64> {
    check_space(k, space)?;
    if !(t > 0.0) || !(tol > 0.0) {
        return Err(domain("normalization needs t > 0 and tol > 0"));
    }
    integrate_radial(space, t, 0.1 * tol, |r| k.value(t, r))
}

/// Radial test functions with `f(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TestFunction {
    One,
    Cosine,
    Gaussian,
}

impl TestFunction {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Cosine => r.cos(),
            Self::Gaussian => (-r * r).exp(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::One => "one",
            Self::Cosine => "cos",
            Self::Gaussian => "gauss",
        }
    }
}

/// `|∫ k(t, r) f(r) dμ(r) - f(0)|` for each `t` of a decreasing sequence.
pub fn delta_convergence(
    k: &impl KernelEvaluator,
    space: &SpaceForm,
    f: TestFunction,
    t_sequence: &[f64],
) -> Result<Vec<f64>> {
    check_space(k, space)?;
    if t_sequence.is_empty() {
        return Err(domain("empty time sequence"));
    }
    if t_sequence.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(domain("time sequence must be strictly decreasing"));
    }
    if !(t_sequence[t_sequence.len() - 1] >= 0.02) {
        return Err(domain("delta convergence times must be >= 0.02"));
    }
    t_sequence
        .iter()
        .map(|&t| {
            Ok(
                (integrate_radial(space, t, 1e-11, |r| Ok(k.value(t, r)? * f.eval(r)))?
                    - f.eval(0.0))
                .abs(),
            )
        })
        .collect()
}

/// Multiplier of the dimension-raising recurrence:
/// `h_{n+2} = -c(t)/(2π warp(r)) ∂_r h_n` with `c = e^{nt}, 1, e^{-nt}`.
pub fn ladder_prefactor(space: &SpaceForm, t: f64) -> f64 {
    let n = space.dim() as f64;
    match space.kind() {
        Curvature::Sphere => (n * t).exp(),
        Curvature::Euclidean => 1.0,
        Curvature::Hyperbolic => (-n * t).exp(),
    }
}

/// Residual of the dimension-raising recurrence between `lower` (dimension
/// `n`) and `upper` (dimension `n + 2`), relative to `upper`.
pub fn up_recurrence_residual(
    lower: &impl KernelEvaluator,
    upper: &impl KernelEvaluator,
    space: &SpaceForm,
    grid: &SampleGrid,
) -> Result<ResidualReport> {
    check_space(lower, space)?;
    let up_space = SpaceForm::new(space.kind(), space.dim() + 2)?;
    check_space(upper, &up_space)?;
    grid.check_open_domain(space)?;
    let mut worst = Worst::new();
    let mut method = ResidualMethod::Jet;
    for (t, r) in grid.points() {
        let (_, dr, _, m) = radial_derivatives(lower, t, r)?;
        if m == ResidualMethod::FiniteDifference {
            method = m;
        }
        let expected = -ladder_prefactor(space, t) / (2.0 * PI * space.warp(r)) * dr;
        let u = upper.value(t, r)?;
        worst.push(t, r, u - expected, u);
    }
    Ok(worst.report(grid, method))
}

/// `sin²(d/2)` for the cosine-law distance between points at distances `r`
/// and `ρ` from a pole separated by angle `θ`, without cancellation.
fn half_chord_sq(r: f64, rho: f64, theta: f64) -> f64 {
    let a = (0.5 * (r - rho)).sin();
    let b = (0.5 * theta).sin();
    (a * a + r.sin() * rho.sin() * b * b).clamp(0.0, 1.0)
}

/// `|k(t+s, r) - (k(t) * k(s))(r)| / k(t+s, r)` on `S^n`, with the
/// convolution in polar coordinates about the pole.
pub fn semigroup_residual(k: &impl KernelEvaluator, t: f64, s: f64, r: f64) -> Result<f64> {
    let space = k.space();
    if space.kind() != Curvature::Sphere || space.dim() < 2 {
        return Err(domain("semigroup check needs a sphere of dimension >= 2"));
    }
    if !(t > 0.0) || !(s > 0.0) || !(0.0..=PI).contains(&r) {
        return Err(domain("semigroup check needs t, s > 0 and r in [0, π]"));
    }
    let n = space.dim() as i32;
    let mut failure: Option<Error> = None;
    let mut grab = |v: Result<f64>| match v {
        Ok(x) => x,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let width = s.sqrt();
    let mut outer_breaks = vec![0.0, PI, r];
    for c in [-8.0, -3.0, 3.0, 8.0] {
        outer_breaks.push((r + c * width).clamp(0.0, PI));
    }
    for c in [3.0, 8.0] {
        outer_breaks.push((c * t.sqrt()).min(PI));
    }
    outer_breaks.sort_by(f64::total_cmp);
    outer_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let outer = adaptive(
        |rho: f64| {
            let kt = grab(k.value(t, rho));
            if kt == 0.0 {
                return 0.0;
            }
            // the s-kernel peaks at θ = 0 with angular width ~ √s / √(sin r sin ρ)
            let spread = (r.sin() * rho.sin()).sqrt();
            let mut th_breaks = vec![0.0, PI];
            for c in [3.0, 8.0] {
                let th = c * width / spread.max(1e-300);
                if th < PI {
                    th_breaks.push(th);
                }
            }
            th_breaks.sort_by(f64::total_cmp);
            let mut inner_fail: Option<Error> = None;
            let inner = adaptive(
                |th: f64| {
                    let d = 2.0 * half_chord_sq(r, rho, th).sqrt().asin();
                    match k.value(s, d) {
                        Ok(v) => v * th.sin().powi(n - 2),
                        Err(e) => {
                            inner_fail.get_or_insert(e);
                            0.0
                        }
                    }
                },
                &th_breaks,
                1e-300,
                1e-11,
                4000,
            );
            let inner = match (inner, inner_fail) {
                (_, Some(e)) | (Err(e), None) => {
                    grab(Err(e));
                    0.0
                }
                (Ok(est), None) => est.value,
            };
            kt * rho.sin().powi(n - 1) * inner
        },
        &outer_breaks,
        1e-300,
        1e-10,
        4000,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let conv = sphere_volume_f64(space.dim() - 2) * outer.value;
    let direct = k.value(t + s, r)?;
    Ok((direct - conv).abs() / direct.abs())
}

/// Deliberately broken kernels that a working harness must reject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Control {
    /// The `e^{m²t}` factor of the odd closed forms left out.
    DropExponential,
    /// `1/(2π)` in the recurrence replaced by `(1 + 10⁻²)/(2π)`.
    PerturbPrefactor,
    /// Recurrence applied with the opposite sign.
    FlipSign,
}

impl Control {
    pub const ALL: [Control; 3] = [
        Control::DropExponential,
        Control::PerturbPrefactor,
        Control::FlipSign,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::DropExponential => "drop-exp",
            Self::PerturbPrefactor => "perturb-2pi",
            Self::FlipSign => "flip-sign",
        }
    }
}

/// Relative size of the prefactor perturbation.
pub const CONTROL_PERTURBATION: f64 = 1e-2;

/// A correct evaluator with one of the [`Control`] defects applied.
#[derive(Debug, Clone)]
pub struct Controlled<K> {
    inner: K,
    control: Control,
}

impl<K: KernelEvaluator> Controlled<K> {
    pub fn new(inner: K, control: Control) -> Self {
        Self { inner, control }
    }

    fn factor(&self, t: f64) -> f64 {
        let space = self.inner.space();
        match self.control {
            Control::DropExponential => {
                let m = 0.5 * (space.dim() as f64 - 1.0);
                match space.kind() {
                    Curvature::Sphere => (-m * m * t).exp(),
                    Curvature::Hyperbolic => (m * m * t).exp(),
                    Curvature::Euclidean => 1.0,
                }
            }
            Control::PerturbPrefactor => 1.0 + CONTROL_PERTURBATION,
            Control::FlipSign => -1.0,
        }
    }
}

impl<K: KernelEvaluator> KernelEvaluator for Controlled<K> {
    fn space(&self) -> SpaceForm {
        self.inner.space()
    }

    fn value(&self, t: f64, r: f64) -> Result<f64> {
        Ok(self.factor(t) * self.inner.value(t, r)?)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            radial_jet: self.inner.capabilities().radial_jet,
            time_derivative: false,
        }
    }

    fn radial_jet(&self, t: f64, r0: f64, order: usize) -> Result<Jet> {
        Ok(self.inner.radial_jet(t, r0, order)?.scale(self.factor(t)))
    }

    fn method(&self) -> &'static str {
        "control"
    }
}

/// Named groups of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Suite {
    /// Odd-dimensional closed forms and the Euclidean kernels.
    Closed,
    /// Zonal series, including even dimensions.
    Spectral,
    /// Dimension-lowering integrals.
    Abel,
    /// Exact diagonal and coefficient identities.
    Trace,
    All,
}

impl Suite {
    fn includes(&self, part: Suite) -> bool {
        *self == Suite::All || *self == part
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub name: String,
    pub metric: f64,
    pub threshold: f64,
    pub passed: bool,
    pub report: Option<ResidualReport>,
}

impl CheckResult {
    fn metric(name: &str, metric: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            metric,
            threshold,
            passed: metric <= threshold,
            report: None,
        }
    }

    fn residual(name: &str, report: ResidualReport, threshold: f64) -> Self {
        Self {
            name: name.into(),
            metric: report.max_rel,
            threshold,
            passed: report.max_rel <= threshold,
            report: Some(report),
        }
    }

    fn exact(name: &str, holds: bool) -> Self {
        Self {
            name: name.into(),
            metric: if holds { 0.0 } else { 1.0 },
            threshold: 0.0,
            passed: holds,
            report: None,
        }
    }
}

/// The `S³` kernel every suite run exercises, with the control applied.
fn s3_target(control: Option<Control>) -> Result<Box<dyn KernelEvaluator>> {
    let k = SphereOddKernel::of_dim(3)?;
    Ok(match control {
        Some(c) => Box::new(Controlled::new(k, c)),
        None => Box::new(k),
    })
}

fn grid(times: &[f64], distances: &[f64]) -> Result<SampleGrid> {
    SampleGrid::new(times.to_vec(), distances.to_vec())
}

fn closed_checks(tol: f64, control: Option<Control>, out: &mut Vec<CheckResult>) -> Result<()> {
    let s3 = s3_target(control)?;
    let s3 = &*s3;
    let sp3 = SpaceForm::sphere(3)?;
    let g = grid(&[0.3, 1.0], &[0.3, 1.5, 2.8])?;
    out.push(CheckResult::residual(
        "pde S^3 closed form",
        pde_residual(&s3, &sp3, &g)?,
        tol.max(1e-7),
    ));
    out.push(CheckResult::residual(
        "pde S^3 closed form, sigma stencil",
        pde_residual_with(&s3, &sp3, &g, Stencil::Sigma)?,
        tol.max(1e-6),
    ));
    let h5 = HyperbolicOddKernel::of_dim(5)?;
    out.push(CheckResult::residual(
        "pde H^5 closed form",
        pde_residual(&h5, &SpaceForm::hyperbolic(5)?, &g)?,
        tol.max(1e-7),
    ));
    let e2 = EuclidKernel::new(2)?;
    out.push(CheckResult::residual(
        "pde R^2",
        pde_residual(&e2, &SpaceForm::euclidean(2)?, &g)?,
        tol.max(1e-9),
    ));
    let mass = normalization(&s3, &sp3, 0.5, 1e-10)?;
    out.push(CheckResult::metric(
        "mass S^3 closed form",
        (1.0 - mass).abs(),
        tol.max(1e-9),
    ));
    let h3 = HyperbolicOddKernel::of_dim(3)?;
    let mass = normalization(&h3, &SpaceForm::hyperbolic(3)?, 0.5, 1e-10)?;
    out.push(CheckResult::metric(
        "mass H^3 closed form",
        (1.0 - mass).abs(),
        tol.max(1e-9),
    ));
    let e1 = EuclidKernel::new(1)?;
    let mass = normalization(&e1, &SpaceForm::euclidean(1)?, 0.7, 1e-13)?;
    out.push(CheckResult::metric(
        "mass R^1",
        (1.0 - mass).abs(),
        tol.max(1e-12),
    ));

    let gr = grid(&[0.5, 1.0], &[0.5, 1.0, 2.0])?;
    let circle = CircleKernel::default();
    out.push(CheckResult::residual(
        "recurrence S^1 -> S^3",
        up_recurrence_residual(&circle, &s3, &SpaceForm::sphere(1)?, &gr)?,
        tol.max(1e-10),
    ));
    let h1 = FnKernel::new(SpaceForm::hyperbolic(1)?, "closed_form", |t, r| {
        euclid_kernel(1, t, r)
    });
    out.push(CheckResult::residual(
        "recurrence H^1 -> H^3",
        up_recurrence_residual(&h1, &h3, &SpaceForm::hyperbolic(1)?, &gr)?,
        tol.max(1e-9),
    ));
    let e3 = EuclidKernel::new(3)?;
    out.push(CheckResult::residual(
        "recurrence R^1 -> R^3",
        up_recurrence_residual(&e1, &e3, &SpaceForm::euclidean(1)?, &gr)?,
        tol.max(1e-12),
    ));
    out.push(CheckResult::metric(
        "semigroup S^3",
        semigroup_residual(&s3, 0.5, 0.5, PI / 2.0)?,
        tol.max(1e-6),
    ));
    let errs = delta_convergence(&s3, &sp3, TestFunction::Cosine, &DELTA_TIMES)?;
    out.push(delta_check("delta S^3 cos", &DELTA_TIMES, &errs));
    // cos r is an eigenfunction on S^3 with eigenvalue 3
    let decay = DELTA_TIMES
        .iter()
        .zip(&errs)
        .map(|(&t, &e)| (e - (1.0 - (-3.0 * t).exp())).abs())
        .fold(0.0f64, f64::max);
    out.push(CheckResult::metric(
        "eigenfunction decay S^3 cos",
        decay,
        tol.max(1e-9),
    ));
    Ok(())
}

/// Delta convergence is first order in `t`: errors must fall, and over the
/// last step shrink in proportion to `t` within 25%.
fn delta_check(name: &str, ts: &[f64], errs: &[f64]) -> CheckResult {
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let k = errs.len() - 1;
    let rate = ((errs[k] / errs[k - 1]) / (ts[k] / ts[k - 1]) - 1.0).abs();
    CheckResult {
        name: name.into(),
        metric: rate,
        threshold: DELTA_RATE_TOL,
        passed: decreasing && rate <= DELTA_RATE_TOL,
        report: None,
    }
}

const DELTA_RATE_TOL: f64 = 0.25;
const DELTA_TIMES: [f64; 4] = [0.2, 0.1, 0.05, 0.02];

fn spectral_checks(tol: f64, out: &mut Vec<CheckResult>) -> Result<()> {
    let s2 = SpectralSphereKernel::fast(2)?;
    let sp2 = SpaceForm::sphere(2)?;
    let g = grid(&[0.3, 1.0], &[0.3, 1.5, 2.8])?;
    out.push(CheckResult::residual(
        "pde S^2 spectral",
        pde_residual(&s2, &sp2, &g)?,
        tol.max(1e-7),
    ));
    let mass = normalization(&s2, &sp2, 0.5, 1e-11)?;
    out.push(CheckResult::metric(
        "mass S^2 spectral",
        (1.0 - mass).abs(),
        tol.max(1e-10),
    ));
    let s4 = SpectralSphereKernel::fast(4)?;
    out.push(CheckResult::residual(
        "recurrence S^2 -> S^4 spectral",
        up_recurrence_residual(&s2, &s4, &sp2, &grid(&[0.5], &[1.0])?)?,
        tol.max(1e-7),
    ));
    out.push(CheckResult::metric(
        "semigroup S^2 spectral",
        semigroup_residual(&s2, 0.25, 0.25, 0.0)?,
        tol.max(1e-6),
    ));
    let oracle = SpectralTruncation::oracle();
    let tr = crate::closed_form::ThetaTruncation::default();
    let mut worst = 0.0f64;
    for &t in &[0.1, 0.3, 1.0] {
        for &r in &[0.0, 0.5, PI / 2.0, PI - 0.3, PI] {
            let a = crate::closed_form::sphere_odd_kernel(1, t, r, &tr)?;
            let b = sphere_kernel_spectral(3, t, r, &oracle)?;
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    out.push(CheckResult::metric(
        "S^3 closed form vs zonal series",
        worst,
        tol.max(1e-10),
    ));
    Ok(())
}

fn abel_checks(tol: f64, out: &mut Vec<CheckResult>) -> Result<()> {
    let q = QuadratureSpec::default();
    let h2 = HyperbolicDescent::new(2, HyperbolicOddKernel::of_dim(3)?, q)?;
    let sp = SpaceForm::hyperbolic(2)?;
    let g = grid(&[0.3, 1.0], &[0.3, 0.7, 1.5])?;
    out.push(CheckResult::residual(
        "pde H^2 descended",
        pde_residual(&h2, &sp, &g)?,
        tol.max(1e-6),
    ));
    let mut worst = 0.0f64;
    for &t in &[0.3, 1.0] {
        worst = worst.max((1.0 - normalization(&h2, &sp, t, 1e-9)?).abs());
    }
    out.push(CheckResult::metric(
        "mass H^2 descended",
        worst,
        tol.max(1e-7),
    ));
    let errs = delta_convergence(&h2, &sp, TestFunction::Gaussian, &DELTA_TIMES)?;
    out.push(delta_check(
        "delta H^2 descended gauss",
        &DELTA_TIMES,
        &errs,
    ));
    let dq = QuadratureSpec { tol: 1e-9, ..q };
    let s2 = SphereDescent::new(
        2,
        SphereOddKernel::of_dim(3)?,
        SpectralSphereKernel::fast(2)?,
        dq,
    )?;
    let exact = sphere_kernel_spectral(2, 0.5, PI / 2.0, &SpectralTruncation::oracle())?;
    let got = s2.value(0.5, PI / 2.0)?;
    out.push(CheckResult::metric(
        "S^2 main + correction vs zonal series",
        (got / exact - 1.0).abs(),
        tol.max(1e-5),
    ));
    Ok(())
}

fn brute_c(m: u32, k: u32) -> u128 {
    let squares: Vec<u128> = (1..m as u128).map(|i| i * i).collect();
    (0u32..1 << squares.len())
        .filter(|mask| mask.count_ones() == k)
        .map(|mask| {
            squares
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, s)| *s)
                .product::<u128>()
        })
        .sum()
}

fn trace_checks(out: &mut Vec<CheckResult>) -> Result<()> {
    let mut holds = true;
    for m in 1..=6 {
        holds &= diag_recurrence_identity(m, DiagIdentity::Hyperbolic)?;
        holds &= diag_recurrence_identity(m, DiagIdentity::SphereAtZero)?;
    }
    out.push(CheckResult::exact(
        "diagonal time recurrences, exact, m <= 6",
        holds,
    ));
    let mut holds = true;
    for m in 1..=6 {
        holds &= diag_recurrence_identity(m, DiagIdentity::SphereAtPi)?;
    }
    out.push(CheckResult::exact(
        "antipodal time recurrence, m <= 6",
        holds,
    ));
    let mut holds = true;
    for m in 1..=10 {
        holds &= q_normalized(m, DiagKind::Hyperbolic)? == hyper_diag_poly(m)?;
        holds &= q_normalized(m, DiagKind::Sphere)? == sphere_diag_poly(m)?;
    }
    out.push(CheckResult::exact(
        "Q recurrence vs closed coefficients, m <= 10",
        holds,
    ));
    let mut holds = true;
    for m in 1..=7 {
        for k in 0..m {
            holds &= c_mk(m, k)? == brute_c(m, k).into();
        }
    }
    out.push(CheckResult::exact(
        "c_mk vs subset enumeration, m <= 7",
        holds,
    ));
    Ok(())
}

/// Runs a suite. Closed-form checks of `S³` use the broken kernel when a
/// control is given; every threshold is `max(tol, floor)` with a per-check
/// floor reflecting the method's attainable accuracy.
pub fn run_suite(suite: Suite, tol: f64, control: Option<Control>) -> Result<Vec<CheckResult>> {
    if !(tol > 0.0) {
        return Err(domain("suite tolerance must be positive"));
    }
    let mut out = Vec::new();
    if suite.includes(Suite::Closed) || control.is_some() {
        closed_checks(tol, control, &mut out)?;
    }
    if suite.includes(Suite::Spectral) {
        spectral_checks(tol, &mut out)?;
    }
    if suite.includes(Suite::Abel) {
        abel_checks(tol, &mut out)?;
    }
    if suite.includes(Suite::Trace) {
        trace_checks(&mut out)?;
    }
    Ok(out)
}
