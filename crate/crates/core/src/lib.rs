#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod abel;
pub mod closed_form;
pub mod dd;
pub mod error;
pub mod evaluator;
pub mod exact;
pub mod geometry;
pub mod jet;
pub mod quadrature;
pub mod spectral;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
pub use evaluator::{Capabilities, KernelEvaluator};
pub use exact::{gamma_half, ExactScalar, RationalPoly};
pub use geometry::{sphere_volume, Curvature, EvalPoint, SpaceForm};
pub use jet::Jet;
