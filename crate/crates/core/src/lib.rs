//! Numerical laboratory for the decoherence of spin-j Schrödinger cat states
//! under collective superradiant damping.
//!
//! The crate is organised bottom-up:
//!
//! - [`spin`]: spin-j bookkeeping, coherent and cat states, ladder operators,
//!   rotations.
//! - [`dissipator`]: the superradiance master equation in conserved-k block
//!   form, with an ODE oracle, the exact residue propagator and the
//!   short-time propagator.
//! - [`norms`]: the coherence norms N₁, N₂, initial-rate formulas and rate
//!   fitting.
//! - [`semiclassics`]: the WKB action, the higher-order two-dimensional
//!   Laplace engine and the closed-form decay predictions.
//! - [`preparation`]: the pulse/twist/pulse pipeline that produces
//!   equator-symmetric cats.
//!
//! Time is always the dimensionless τ measured in units of the classical
//! damping time.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dissipator;
pub mod norms;
pub mod preparation;
pub mod semiclassics;
pub mod spin;

pub use num_complex::Complex64;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin: twice_j must be >= 1 (got {0})")]
    InvalidSpin(i64),

    #[error("invalid coherent label: {0}")]
    InvalidLabel(String),

    #[error("degenerate cat: components cancel (2 + 2 Re<g1|g2> = {0:e})")]
    DegenerateCat(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("step size underflow at tau = {tau} (step {step:e})")]
    StepUnderflow { tau: f64, step: f64 },

    #[error("insufficient samples: need {needed} in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the physical domain: {0}")]
    DomainError(String),

    #[error("saddle lies within {distance:e} of the domain boundary")]
    BoundarySaddle { distance: f64 },

    #[error("finite-difference derivative of order ({order_u}, {order_v}) unstable: Richardson gap {gap:e}")]
    DerivativeInstability { order_u: usize, order_v: usize, gap: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("pipeline fidelity too low: {0}")]
    PipelineFidelityLow(f64),

    #[error("half-integer spin not supported here (twice_j = {0})")]
    HalfIntegerSpin(u32),

    #[error("optimizer failed: {0}")]
    Optimizer(String),
}

pub type Result<T> = std::result::Result<T, Error>;
