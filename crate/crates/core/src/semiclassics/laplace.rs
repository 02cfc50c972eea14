//! Higher-order Laplace expansion of I[f] = ∫∫ f e^{jS₀} dν dη about the
//! maximum of S₀:
//!
//! I[f] = e^{jS₀⁰}(2π/j)|det σ|^{−½} Σ_l (L^l (f e^{jR}))(saddle) / (l!(2j)^l),
//! L = −⟨σ⁻¹∇, ∇⟩, R = S₀ − S₀⁰ − ½⟨σz, z⟩.
//!
//! Writing f e^{jR} = Σ_q j^q f R^q/q!, a term (l, q) contributes at order
//! j^{q−l}; since R starts at cubic order it vanishes unless 2l ≥ 3q, so
//! orders 0..=2 need l ≤ 6 and at most fourth derivatives of f.

use std::f64::consts::PI;

use super::action::{check_gammas, coeff_unchecked, f_deriv, saddle_point};
use super::taylor::{taylor_from_samples, Taylor2};
use super::{ReducedPoint, SaddleData};
use crate::{Error, Result};

/// Highest derivative order of f that orders 0..=2 can see.
const F_ORDER: usize = 4;
const ORDERS: usize = 3;

/// A real function on the (ν, η) plane.
pub trait ScalarField: Sync {
    fn value(&self, p: ReducedPoint) -> f64;

    /// Exact value for constant fields, which skips finite differencing.
    fn constant_value(&self) -> Option<f64> {
        None
    }
}

impl<F> ScalarField for F
where
    F: Fn(ReducedPoint) -> f64 + Sync,
{
    fn value(&self, p: ReducedPoint) -> f64 {
        self(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _p: ReducedPoint) -> f64 {
        self.0
    }

    fn constant_value(&self) -> Option<f64> {
        Some(self.0)
    }
}

/// The large-j coefficients a₀, a₁, b₀, b₁, b₂ as fields. Points with w = 0
/// evaluate to 0; they only occur on the boundary where e^{jS₀} is negligible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientField {
    A0,
    A1,
    B0,
    B1,
    B2 { a2: f64 },
}

impl ScalarField for CoefficientField {
    fn value(&self, p: ReducedPoint) -> f64 {
        if !p.in_domain() || super::w_of(p) == 0.0 {
            return 0.0;
        }
        let c = coeff_unchecked(p);
        match *self {
            Self::A0 => c.a0,
            Self::A1 => c.a1,
            Self::B0 => c.b0,
            Self::B1 => c.b1,
            Self::B2 { a2 } => c.b2(a2),
        }
    }
}

/// The exponent of the integrand: its maximum and the residual R about it.
pub trait Action: Sync {
    fn saddle(&self) -> Result<SaddleData>;

    /// Taylor polynomial of R(ν₀+u, η₀+v) to the given degree.
    fn residual(&self, saddle: &SaddleData, degree: usize) -> Taylor2;
}

/// S₀ of the two-component cat with real γ₁, γ₂ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatAction {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Action for CatAction {
    fn saddle(&self) -> Result<SaddleData> {
        saddle_point(self.gamma1, self.gamma2)
    }

    /// R(u,v) = Σ_{n≥3} [F⁽ⁿ⁾(x₀)(u+v)ⁿ + F⁽ⁿ⁾(y₀)(u−v)ⁿ]/n!.
    fn residual(&self, saddle: &SaddleData, degree: usize) -> Taylor2 {
        let (x0, y0) = saddle.point.xy();
        let plus = Taylor2::linear(degree, 0.0, 1.0, 1.0);
        let minus = Taylor2::linear(degree, 0.0, 1.0, -1.0);
        let mut r = Taylor2::zeros(degree);
        let (mut pp, mut pm) = (plus.powi(2), minus.powi(2));
        let mut fact = 2.0;
        for n in 3..=degree {
            pp = pp.mul(&plus);
            pm = pm.mul(&minus);
            fact *= n as f64;
            r = r
                .add(&pp.scale(f_deriv(n, x0) / fact))
                .add(&pm.scale(f_deriv(n, y0) / fact));
        }
        r
    }
}

/// A pure quadratic exponent (R ≡ 0) with prescribed saddle data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticAction {
    pub saddle: SaddleData,
}

impl Action for QuadraticAction {
    fn saddle(&self) -> Result<SaddleData> {
        Ok(self.saddle)
    }

    fn residual(&self, _saddle: &SaddleData, degree: usize) -> Taylor2 {
        Taylor2::zeros(degree)
    }
}

/// I⁽⁰⁾, I⁽¹⁾, I⁽²⁾ relative to the Gaussian prefactor
/// e^{jS₀⁰}(2π/j)|det σ|^{−½}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceExpansion {
    pub orders: [f64; ORDERS],
    pub terms_used: usize,
    pub saddle: SaddleData,
}

impl LaplaceExpansion {
    /// I⁽⁰⁾ + I⁽¹⁾/j + I⁽²⁾/j².
    pub fn evaluate(&self, j: f64) -> f64 {
        self.orders[0] + self.orders[1] / j + self.orders[2] / (j * j)
    }

    pub fn evaluate_two_term(&self, j: f64) -> f64 {
        self.orders[0] + self.orders[1] / j
    }

    /// ln of e^{jS₀⁰}(2π/j)|det σ|^{−½}.
    pub fn log_prefactor(&self, j: f64) -> f64 {
        j * self.saddle.s0_value + (2.0 * PI / j).ln() - 0.5 * self.saddle.det().abs().ln()
    }

    /// The three-order approximation of I[f] itself.
    pub fn absolute(&self, j: f64) -> f64 {
        self.log_prefactor(j).exp() * self.evaluate(j)
    }
}

/// Expansion of I[f] for the cat action with parameters (γ₁, γ₂).
pub fn laplace_expand(f: &dyn ScalarField, gamma1: f64, gamma2: f64, max_l: usize) -> Result<LaplaceExpansion> {
    check_gammas(gamma1, gamma2)?;
    laplace_expand_with(f, &CatAction { gamma1, gamma2 }, max_l)
}

/// L P = −(s_uu P_uu + 2 s_uv P_uv + s_vv P_vv), s = σ⁻¹.
fn apply_l(p: &Taylor2, s: &[f64; 3]) -> Taylor2 {
    p.derivative(2, 0)
        .scale(-s[0])
        .add(&p.derivative(1, 1).scale(-2.0 * s[1]))
        .add(&p.derivative(0, 2).scale(-s[2]))
}

pub fn laplace_expand_with(f: &dyn ScalarField, action: &dyn Action, max_l: usize) -> Result<LaplaceExpansion> {
    if max_l < 3 {
        return Err(Error::InvalidInput(format!("max_l = {max_l}, at least 3 needed")));
    }
    let saddle = action.saddle()?;
    let inv = saddle
        .hessian
        .try_inverse()
        .ok_or_else(|| Error::DomainError("singular Hessian at the saddle".into()))?;
    let s = [inv[(0, 0)], 0.5 * (inv[(0, 1)] + inv[(1, 0)]), inv[(1, 1)]];
    let degree = 2 * max_l;
    let f_taylor = match f.constant_value() {
        Some(c) => Taylor2::constant(degree, c),
        None => {
            let (x0, y0) = saddle.point.xy();
            let margin = (1.0 - x0.abs()).min(1.0 - y0.abs());
            let h = (margin / 20.0).min(0.02);
            let p0 = saddle.point;
            let g = |u: f64, v: f64| f.value(ReducedPoint::new(p0.nu + u, p0.eta + v));
            taylor_from_samples(&g, h, F_ORDER.min(degree), degree)?
        }
    };
    let r = action.residual(&saddle, degree);
    let mut orders = [0.0; ORDERS];
    // P_q = f R^q / q!
    let mut p_q = f_taylor;
    let mut q = 0usize;
    loop {
        // L^l P_q has a constant term only for 2l ≥ 3q, so the lowest order is
        // ⌈3q/2⌉ − q; stop once it exceeds the last kept order.
        if (3 * q).div_ceil(2) - q >= ORDERS || q > max_l {
            break;
        }
        let mut lp = p_q.clone();
        let mut l_fact_2l = 1.0;
        for l in 0..=max_l {
            if l > 0 {
                lp = apply_l(&lp, &s);
                l_fact_2l *= 2.0 * l as f64;
            }
            if l >= q && l - q < ORDERS {
                orders[l - q] += lp.get(0, 0) / l_fact_2l;
            }
        }
        q += 1;
        p_q = p_q.mul(&r).scale(1.0 / q as f64);
    }
    Ok(LaplaceExpansion {
        orders,
        terms_used: max_l,
        saddle,
    })
}

/// The Laplace orders of I[1], I[a₀], I[a₁], I[b₀], I[b₁], I[b₂] and the
/// bracketed coefficients of n(τ) = 1 + τ̃(lin₀ + lin₁/j) + τ̃²(quad₀ + quad₁/j + quad₂/j²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCoefficients {
    pub one: [f64; ORDERS],
    pub a0: [f64; ORDERS],
    pub a1: [f64; ORDERS],
    pub b0: [f64; ORDERS],
    pub b1: [f64; ORDERS],
    pub b2: [f64; ORDERS],
    pub lin0: f64,
    pub lin1: f64,
    pub quad0: f64,
    pub quad1: f64,
    /// As assembled in the printed ratio, which has no I⁽²⁾[b₀] term.
    pub quad2: f64,
    /// The consistent 1/j² coefficient, including I⁽²⁾[b₀]/I⁽⁰⁾[1].
    pub quad2_full: f64,
}

impl RatioCoefficients {
    /// n(τ) with τ̃ = jτ, using `quad2`.
    pub fn n(&self, j: f64, tau: f64) -> f64 {
        let t = j * tau;
        1.0 + t * (self.lin0 + self.lin1 / j) + t * t * (self.quad0 + self.quad1 / j + self.quad2 / (j * j))
    }

    /// n(τ) using `quad2_full`.
    pub fn n_full(&self, j: f64, tau: f64) -> f64 {
        let t = j * tau;
        1.0 + t * (self.lin0 + self.lin1 / j) + t * t * (self.quad0 + self.quad1 / j + self.quad2_full / (j * j))
    }
}

pub fn ratio_coefficients(gamma1: f64, gamma2: f64, a2: f64) -> Result<RatioCoefficients> {
    check_gammas(gamma1, gamma2)?;
    let action = CatAction { gamma1, gamma2 };
    let expand = |f: &dyn ScalarField| laplace_expand_with(f, &action, 6).map(|e| e.orders);
    let one = expand(&Constant(1.0))?;
    let a0 = expand(&CoefficientField::A0)?;
    let a1 = expand(&CoefficientField::A1)?;
    let b0 = expand(&CoefficientField::B0)?;
    let b1 = expand(&CoefficientField::B1)?;
    let b2 = expand(&CoefficientField::B2 { a2 })?;
    let (i0, i1, i2) = (one[0], one[1], one[2]);
    let lin0 = a0[0] / i0;
    let lin1 = -(a0[0] * i1 - (a1[0] + a0[1]) * i0) / (i0 * i0);
    let quad0 = b0[0] / i0;
    let quad1 = -(b0[0] * i1 - (b1[0] + b0[1]) * i0) / (i0 * i0);
    let quad2 =
        -(-(b2[0] + b1[1]) * i0 * i0 + (b0[0] * i2 + i1 * b1[0] + i1 * b0[1]) * i0 - b0[0] * i1 * i1) / (i0 * i0 * i0);
    Ok(RatioCoefficients {
        one,
        a0,
        a1,
        b0,
        b1,
        b2,
        lin0,
        lin1,
        quad0,
        quad1,
        quad2,
        quad2_full: quad2 + b0[2] / i0,
    })
}

/// n(τ) = N₂(τ)/N₂(0) assembled from the Laplace orders (a₂ = 0).
pub fn n_ratio_semiclassical(gamma1: f64, gamma2: f64, j: f64, tau: f64) -> Result<f64> {
    if !(j > 0.0) || !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("j = {j}, tau = {tau}")));
    }
    if j * tau > 0.3 {
        return Err(Error::WrongRegime(format!(
            "j*tau = {} beyond the short-time expansion",
            j * tau
        )));
    }
    Ok(ratio_coefficients(gamma1, gamma2, 0.0)?.n(j, tau))
}
