//! Space forms, evaluation points and sphere volumes.

use core::f64::consts::PI;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use crate::error::{domain, Result};
use alloc::format;

/// Sign of the sectional curvature of a space form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Curvature {
    Euclidean,
    Sphere,
    Hyperbolic,
}

/// A complete simply connected space of constant curvature +1, 0 or -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpaceForm {
    kind: Curvature,
    dim: u32,
}

impl SpaceForm {
    pub fn new(kind: Curvature, dim: u32) -> Result<Self> {
        if dim == 0 {
            return Err(domain("space form dimension must be at least 1"));
        }
        Ok(Self { kind, dim })
    }

    pub fn euclidean(dim: u32) -> Result<Self> {
        Self::new(Curvature::Euclidean, dim)
    }

    pub fn sphere(dim: u32) -> Result<Self> {
        Self::new(Curvature::Sphere, dim)
    }

    pub fn hyperbolic(dim: u32) -> Result<Self> {
        Self::new(Curvature::Hyperbolic, dim)
    }

    pub fn kind(&self) -> Curvature {
        self.kind
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Largest admissible geodesic distance.
    pub fn max_distance(&self) -> f64 {
        match self.kind {
            Curvature::Sphere => PI,
            _ => f64::INFINITY,
        }
    }

    pub fn contains_distance(&self, r: f64) -> bool {
        r >= 0.0 && r <= self.max_distance()
    }

    /// `sin r`, `r` or `sinh r`: the radius of the geodesic sphere of radius `r`.
    pub fn warp(&self, r: f64) -> f64 {
        match self.kind {
            Curvature::Sphere => r.sin(),
            Curvature::Euclidean => r,
            Curvature::Hyperbolic => r.sinh(),
        }
    }

    /// Logarithmic derivative of the warp: `cot r`, `1/r` or `coth r`.
    pub fn mean_curvature(&self, r: f64) -> f64 {
        match self.kind {
            Curvature::Sphere => r.cos() / r.sin(),
            Curvature::Euclidean => 1.0 / r,
            Curvature::Hyperbolic => r.cosh() / r.sinh(),
        }
    }

    /// Riemannian volume density of the radial measure, `ω_{n-1} warp(r)^{n-1}`.
    pub fn radial_density(&self, r: f64) -> f64 {
        sphere_volume_f64(self.dim - 1) * self.warp(r).powi(self.dim as i32 - 1)
    }

    /// `σ = cos r` on the sphere, `cosh r` on hyperbolic space, `r` otherwise.
    pub fn sigma(&self, r: f64) -> f64 {
        match self.kind {
            Curvature::Sphere => r.cos(),
            Curvature::Euclidean => r,
            Curvature::Hyperbolic => r.cosh(),
        }
    }
}

/// A time/distance pair at which a radial kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub t: f64,
    pub r: f64,
}

impl EvalPoint {
    pub fn new(space: &SpaceForm, t: f64, r: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!("time must be positive, got {t}")));
        }
        if !space.contains_distance(r) {
            return Err(domain(format!(
                "distance {r} outside the domain of {:?}",
                space.kind()
            )));
        }
        Ok(Self { t, r })
    }
}

/// Volume of the unit sphere `S^d`, i.e. `2 π^{(d+1)/2} / Γ((d+1)/2)`.
pub fn sphere_volume(d: i64) -> Result<f64> {
    if d < 0 {
        return Err(domain(format!("sphere dimension must be >= 0, got {d}")));
    }
    Ok(sphere_volume_f64(d as u32))
}

pub(crate) fn sphere_volume_f64(d: u32) -> f64 {
    // Vol(S^0) = 2, Vol(S^1) = 2π, Vol(S^d) = Vol(S^{d-2}) 2π/(d-1)
    let mut v = if d.is_multiple_of(2) { 2.0 } else { 2.0 * PI };
    let mut k = if d.is_multiple_of(2) { 0 } else { 1 };
    while k < d {
        k += 2;
        v *= 2.0 * PI / (k - 1) as f64;
    }
    v
}
