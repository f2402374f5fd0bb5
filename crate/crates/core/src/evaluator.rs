//! The uniform `(t, r) → value` interface shared by every kernel source.

use crate::error::{Error, Result};
use crate::geometry::SpaceForm;
use crate::jet::Jet;

/// Optional capabilities an evaluator advertises up front.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Capabilities {
    /// `radial_jet` returns exact Taylor coefficients in `r`.
    pub radial_jet: bool,
    /// `time_derivative` is analytic rather than a difference quotient.
    pub time_derivative: bool,
}

/// A radial heat kernel `h(t, r)` on a space form.
pub trait KernelEvaluator: Sync {
    fn space(&self) -> SpaceForm;

    fn value(&self, t: f64, r: f64) -> Result<f64>;

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    /// Taylor jet of `r ↦ h(t, r)` at `r0`; order 0 agrees with `value`.
    fn radial_jet(&self, _t: f64, _r0: f64, _order: usize) -> Result<Jet> {
        Err(Error::Unsupported("radial_jet"))
    }

    fn time_derivative(&self, _t: f64, _r: f64) -> Result<f64> {
        Err(Error::Unsupported("time_derivative"))
    }

    /// Short tag naming the evaluation route, echoed in tables.
    fn method(&self) -> &'static str;
}

impl<K: KernelEvaluator + ?Sized> KernelEvaluator for &K {
    fn space(&self) -> SpaceForm {
        (**self).space()
    }
    fn value(&self, t: f64, r: f64) -> Result<f64> {
        (**self).value(t, r)
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn radial_jet(&self, t: f64, r0: f64, order: usize) -> Result<Jet> {
        (**self).radial_jet(t, r0, order)
    }
    fn time_derivative(&self, t: f64, r: f64) -> Result<f64> {
        (**self).time_derivative(t, r)
    }
    fn method(&self) -> &'static str {
        (**self).method()
    }
}

/// Adapts a closure into an evaluator without optional capabilities.
pub struct FnKernel<F> {
    space: SpaceForm,
    method: &'static str,
    f: F,
}

impl<F> FnKernel<F>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    pub fn new(space: SpaceForm, method: &'static str, f: F) -> Self {
        Self { space, method, f }
    }
}

impl<F> KernelEvaluator for FnKernel<F>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    fn space(&self) -> SpaceForm {
        self.space
    }
    fn value(&self, t: f64, r: f64) -> Result<f64> {
        (self.f)(t, r)
    }
    fn method(&self) -> &'static str {
        self.method
    }
}
