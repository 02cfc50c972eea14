use nalgebra::{Matrix2, Vector2};

use super::{ReducedPoint, SaddleData};
use crate::{Error, Result};

/// Saddles closer than this (in w) to the domain boundary are rejected.
const BOUNDARY_W: f64 = 1e-6;

pub(crate) fn check_gammas(gamma1: f64, gamma2: f64) -> Result<()> {
    if !(gamma1 > 0.0 && gamma1.is_finite() && gamma2 > 0.0 && gamma2.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "semiclassics needs finite gamma > 0, got ({gamma1}, {gamma2})"
        )));
    }
    Ok(())
}

fn plogp(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// n-th derivative of F(x) = −½[(1−x)ln(1−x) + (1+x)ln(1+x)].
pub fn f_deriv(n: usize, x: f64) -> f64 {
    match n {
        0 => -0.5 * (plogp(1.0 - x) + plogp(1.0 + x)),
        1 => -x.atanh(),
        _ => {
            let k = (n - 1) as i32;
            let fact: f64 = (1..=(n - 2)).map(|i| i as f64).product();
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            -0.5 * fact * ((1.0 - x).powi(-k) + sign * (1.0 + x).powi(-k))
        }
    }
}

fn domain_check(p: ReducedPoint) -> Result<()> {
    if !p.nu.is_finite() || !p.eta.is_finite() || !p.in_domain() {
        return Err(Error::DomainError(format!("(nu, eta) = ({}, {})", p.nu, p.eta)));
    }
    Ok(())
}

/// S₀(ν,η) = (1−ν)ln(γ₁γ₂) + η ln(γ₂/γ₁)
///           − ½[p(1−ν−η) + p(1+ν+η) + p(1−ν+η) + p(1+ν−η)], p(x) = x ln x.
pub fn action_s0(p: ReducedPoint, gamma1: f64, gamma2: f64) -> Result<f64> {
    check_gammas(gamma1, gamma2)?;
    domain_check(p)?;
    let (nu, eta) = (p.nu, p.eta);
    Ok((1.0 - nu) * (gamma1 * gamma2).ln() + eta * (gamma2 / gamma1).ln()
        - 0.5 * (plogp(1.0 - nu - eta) + plogp(1.0 + nu + eta) + plogp(1.0 - nu + eta) + plogp(1.0 + nu - eta)))
}

/// (∂_ν S₀, ∂_η S₀), analytic.
pub fn action_s0_gradient(p: ReducedPoint, gamma1: f64, gamma2: f64) -> Result<[f64; 2]> {
    check_gammas(gamma1, gamma2)?;
    domain_check(p)?;
    let (x, y) = p.xy();
    let sx = f_deriv(1, x) - gamma1.ln();
    let sy = f_deriv(1, y) - gamma2.ln();
    Ok([sx + sy, sx - sy])
}

/// Hessian of S₀ in (ν, η).
pub(crate) fn action_hessian(p: ReducedPoint) -> Matrix2<f64> {
    let (x, y) = p.xy();
    let (fx, fy) = (f_deriv(2, x), f_deriv(2, y));
    Matrix2::new(fx + fy, fx - fy, fx - fy, fx + fy)
}

/// w = sqrt((1−(ν−η)²)(1−(ν+η)²)), zero outside the domain.
pub fn w_of(p: ReducedPoint) -> f64 {
    let (x, y) = p.xy();
    ((1.0 - x * x) * (1.0 - y * y)).max(0.0).sqrt()
}

/// Maximum of S₀ at
/// ν₀ = (1−γ₁²γ₂²)/((1+γ₁²)(1+γ₂²)), η₀ = (γ₂²−γ₁²)/((1+γ₁²)(1+γ₂²)).
pub fn saddle_point(gamma1: f64, gamma2: f64) -> Result<SaddleData> {
    check_gammas(gamma1, gamma2)?;
    let (g1s, g2s) = (gamma1 * gamma1, gamma2 * gamma2);
    let den = (1.0 + g1s) * (1.0 + g2s);
    let point = ReducedPoint::new((1.0 - g1s * g2s) / den, (g2s - g1s) / den);
    let w = w_of(point);
    if w < BOUNDARY_W {
        return Err(Error::BoundarySaddle { distance: w });
    }
    Ok(SaddleData {
        point,
        hessian: action_hessian(point),
        s0_value: action_s0(point, gamma1, gamma2)?,
    })
}

/// Maximizes S₀ by damped Newton iteration from the domain centre, using
/// only the analytic gradient and Hessian.
pub fn numeric_saddle(gamma1: f64, gamma2: f64) -> Result<ReducedPoint> {
    check_gammas(gamma1, gamma2)?;
    let mut p = ReducedPoint::new(0.0, 0.0);
    for _ in 0..200 {
        let g = action_s0_gradient(p, gamma1, gamma2)?;
        let grad = Vector2::new(g[0], g[1]);
        if grad.norm() < 1e-14 {
            return Ok(p);
        }
        let h = action_hessian(p);
        let step = h
            .lu()
            .solve(&(-grad))
            .ok_or_else(|| Error::DomainError("singular Hessian".into()))?;
        let mut t = 1.0;
        loop {
            let q = ReducedPoint::new(p.nu + t * step[0], p.eta + t * step[1]);
            let (x, y) = q.xy();
            if x.abs() < 1.0 && y.abs() < 1.0 {
                p = q;
                break;
            }
            t *= 0.5;
            if t < 1e-16 {
                return Err(Error::DomainError("Newton step left the domain".into()));
            }
        }
    }
    let g = action_s0_gradient(p, gamma1, gamma2)?;
    if g[0].hypot(g[1]) < 1e-10 {
        Ok(p)
    } else {
        Err(Error::DomainError("saddle search did not converge".into()))
    }
}

/// Large-j coefficients a₀, a₁, b₀, b₁ (and b₂ via [`CoeffExpansion::b2`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffExpansion {
    pub point: ReducedPoint,
    pub w: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
}

impl CoeffExpansion {
    /// b₂ for a given a₂.
    pub fn b2(&self, a2: f64) -> f64 {
        let (nu, eta, w) = (self.point.nu, self.point.eta, self.w);
        let (n2, e2) = (nu * nu, eta * eta);
        let (n4, e4) = (n2 * n2, e2 * e2);
        let (n6, e6) = (n4 * n2, e4 * e2);
        let quad = (e2 - n2).powi(2) - 2.0 * (e2 + n2) + 1.0;
        let poly = -2.0 + 4.0 * n6 - 2.0 * e6 - 10.0 * n4 * e2 + 8.0 * n2 * e4 - 10.0 * n4 - 8.0 * n2 * e2
            + 2.0 * e4
            + 8.0 * n2
            + 2.0 * e2;
        ((2.0 * self.a0 * a2 + self.a1 * self.a1) * quad + poly) / (2.0 * w * w)
            + (3.0 * e4 + 7.0 * n4 - 10.0 * n2 * e2 - 10.0 * n2 - 6.0 * e2 + 3.0) / (4.0 * w)
    }
}

/// a₀ = w + η² − 1 + ν², a₁ = ν(1 − ν² + η² − w)/w, b₀ = a₀²/2,
/// b₁ = a₀a₁ − ν(ν² + w − η² − 1).
pub fn coeff_expansion(p: ReducedPoint) -> Result<CoeffExpansion> {
    domain_check(p)?;
    let w = w_of(p);
    if w <= 1e-8 {
        return Err(Error::DomainError(format!("w = {w:e} too close to the boundary")));
    }
    Ok(coeff_unchecked(p))
}

/// The same coefficients without the boundary guard (w must be > 0).
/// The differences in a₀ and a₁ are rationalized,
/// w − (1 − ν² − η²) = −4ν²η²/(w + 1 − ν² − η²) and
/// (1 − ν² + η²) − w = 4η²/(1 − ν² + η² + w),
/// which keeps full relative precision near the boundary where w → 0.
pub(crate) fn coeff_unchecked(p: ReducedPoint) -> CoeffExpansion {
    let w = w_of(p);
    let (nu, eta) = (p.nu, p.eta);
    let (n2, e2) = (nu * nu, eta * eta);
    // w − (1 − ν² − η²) and (1 − ν² + η²) − w
    let a0 = -4.0 * n2 * e2 / (w + 1.0 - n2 - e2);
    let d = 4.0 * e2 / (1.0 - n2 + e2 + w);
    let a1 = nu * d / w;
    CoeffExpansion {
        point: p,
        w,
        a0,
        a1,
        b0: 0.5 * a0 * a0,
        b1: a0 * a1 + nu * d,
    }
}

/// (a, b) with S(ν,η,τ̃) = 1 + aτ̃ + bτ̃² + O(τ̃³), in the printed form
/// a = w₁ + η² − 1 + (ν − 1/2j)², b = ½[a² + w₁(w₂−w₁) + 2w₁(−ν/j + 3/(4j²))],
/// w₁ = sqrt((1−(ν−η−1/2j)²)(1−(ν+η−1/2j)²)), w₂ likewise with 3/2j.
pub fn s_derivative_coeffs(p: ReducedPoint, j: f64) -> Result<(f64, f64)> {
    if !(j > 0.0) {
        return Err(Error::InvalidInput(format!("j = {j}")));
    }
    let root = |shift: f64| -> Result<f64> {
        let prod = (1.0 - (p.nu - p.eta - shift).powi(2)) * (1.0 - (p.nu + p.eta - shift).powi(2));
        if prod < 0.0 {
            return Err(Error::DomainError(format!(
                "negative radicand {prod:e} at (nu, eta) = ({}, {})",
                p.nu, p.eta
            )));
        }
        Ok(prod.sqrt())
    };
    let w1 = root(0.5 / j)?;
    let w2 = root(1.5 / j)?;
    let a = w1 + p.eta * p.eta - 1.0 + (p.nu - 0.5 / j).powi(2);
    let b = 0.5 * (a * a + w1 * (w2 - w1) + 2.0 * w1 * (-p.nu / j + 0.75 / (j * j)));
    Ok((a, b))
}

/// (a, b) from the cascade itself: with n = νj, k = ηj,
/// ∂S/∂τ̃ = (c_n − r_n)/j², ∂²S/∂τ̃² = [−r_n(c_n − r_n) + c_n(c_{n−1} − r_{n−1})]/j⁴,
/// c_n = sqrt(g_{n+k} g_{n−k}), r_n = g_n − k², g_l = (j+½)² − (l−½)².
pub fn s_derivative_coeffs_exact(p: ReducedPoint, j: f64) -> Result<(f64, f64)> {
    if !(j > 0.0) {
        return Err(Error::InvalidInput(format!("j = {j}")));
    }
    let (n, k) = (p.nu * j, p.eta * j);
    let g = |l: f64| (j + 0.5).powi(2) - (l - 0.5).powi(2);
    let c = |n: f64| (g(n + k) * g(n - k)).max(0.0).sqrt();
    let r = |n: f64| g(n) - k * k;
    let j2 = j * j;
    let a = (c(n) - r(n)) / j2;
    let second = (-r(n) * (c(n) - r(n)) + c(n) * (c(n - 1.0) - r(n - 1.0))) / (j2 * j2);
    Ok((a, 0.5 * second))
}
