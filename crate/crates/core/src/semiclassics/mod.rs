//! WKB treatment of the initial cat block ρ_n(k,0) ∝ e^{jS₀(ν,η)} in the
//! reduced coordinates ν = n/j, η = k/j, restricted to real γ₁, γ₂ > 0.
//!
//! The action separates in x = ν+η and y = ν−η:
//! S₀ = ln γ₁γ₂ + F(x) − x ln γ₁ + F(y) − y ln γ₂ with
//! F(x) = −½[(1−x)ln(1−x) + (1+x)ln(1+x)], which gives closed-form
//! derivatives of every order.

pub mod action;
mod laplace;
mod predict;
mod quadrature;
mod taylor;

use nalgebra::Matrix2;

pub use action::{
    action_s0, action_s0_gradient, coeff_expansion, numeric_saddle, s_derivative_coeffs, s_derivative_coeffs_exact,
    saddle_point, w_of, CoeffExpansion,
};
pub use laplace::{
    laplace_expand, laplace_expand_with, n_ratio_semiclassical, ratio_coefficients, Action, CatAction,
    CoefficientField, Constant, LaplaceExpansion, QuadraticAction, RatioCoefficients, ScalarField,
};
pub use predict::{predict_fast, predict_single_coherent, predict_slow_exp, predict_slow_poly, slow_exp_coefficients};
pub use quadrature::{gauss_kronrod, quadrature_oracle, QuadratureResult};
pub use taylor::{fornberg_weights, Taylor2};

/// (ν, η) = (n/j, k/j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPoint {
    pub nu: f64,
    pub eta: f64,
}

impl ReducedPoint {
    pub fn new(nu: f64, eta: f64) -> Self {
        Self { nu, eta }
    }

    /// (x, y) = (ν+η, ν−η).
    pub fn xy(&self) -> (f64, f64) {
        (self.nu + self.eta, self.nu - self.eta)
    }

    pub fn from_xy(x: f64, y: f64) -> Self {
        Self {
            nu: 0.5 * (x + y),
            eta: 0.5 * (x - y),
        }
    }

    /// |ν+η| ≤ 1 and |ν−η| ≤ 1.
    pub fn in_domain(&self) -> bool {
        let (x, y) = self.xy();
        x.abs() <= 1.0 && y.abs() <= 1.0
    }
}

/// Location, Hessian σ (in (ν, η)) and value of the maximum of S₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleData {
    pub point: ReducedPoint,
    pub hessian: Matrix2<f64>,
    pub s0_value: f64,
}

impl SaddleData {
    pub fn det(&self) -> f64 {
        self.hessian.determinant()
    }
}
