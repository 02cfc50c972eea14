//! Closed-form decay laws for the two-component cat (real γ₁, γ₂) and for a
//! single coherent state.

use crate::{Error, Result};

fn check_nonneg(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be finite and >= 0")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("tau = {tau}")));
    }
    Ok(())
}

/// exp(−2j (γ₁−γ₂)²(1−γ₁γ₂)²/((1+γ₁²)(1+γ₂²))² τ): decay at a rate ∝ j.
pub fn predict_fast(gamma1: f64, gamma2: f64, j: f64, tau: f64) -> Result<f64> {
    check_nonneg(gamma1)?;
    check_nonneg(gamma2)?;
    check_tau(tau)?;
    let tol = 1e-12 * (1.0 + gamma1.max(gamma2));
    if (gamma1 - gamma2).abs() <= tol || (gamma1 * gamma2 - 1.0).abs() <= 1e-12 {
        return Err(Error::WrongRegime(format!(
            "({gamma1}, {gamma2}) lies on a slow branch (gamma1 = gamma2 or gamma1*gamma2 = 1)"
        )));
    }
    let den = (1.0 + gamma1 * gamma1) * (1.0 + gamma2 * gamma2);
    let x = (gamma1 - gamma2).powi(2) * (1.0 - gamma1 * gamma2).powi(2) / (den * den);
    Ok((-2.0 * j * x * tau).exp())
}

/// (linear, quadratic) coefficients of the exponent of [`predict_slow_exp`]:
/// ((γ²−1)/(γ²+1))² and (3γ⁸−3γ⁶+4γ⁴−3γ²+3)/(2(γ²+1)⁴).
pub fn slow_exp_coefficients(gamma1: f64) -> (f64, f64) {
    let g2 = gamma1 * gamma1;
    let lin = ((g2 - 1.0) / (g2 + 1.0)).powi(2);
    let g4 = g2 * g2;
    let quad = (3.0 * g4 * g4 - 3.0 * g4 * g2 + 4.0 * g4 - 3.0 * g2 + 3.0) / (2.0 * (g2 + 1.0).powi(4));
    (lin, quad)
}

/// exp(−lin·τ − quad·τ²) for γ₂ = 1/γ₁; independent of j.
pub fn predict_slow_exp(gamma1: f64, tau: f64) -> Result<f64> {
    check_nonneg(gamma1)?;
    check_tau(tau)?;
    let (lin, quad) = slow_exp_coefficients(gamma1);
    Ok((-lin * tau - quad * tau * tau).exp())
}

/// 1 − ((γ₁²−1)/(γ₁²+1))²τ − ¼(7η₀² + 1)τ², η₀ = (γ₂²−γ₁²)/((1+γ₁²)(1+γ₂²)).
pub fn predict_slow_poly(gamma1: f64, gamma2: f64, tau: f64) -> Result<f64> {
    check_nonneg(gamma1)?;
    check_nonneg(gamma2)?;
    check_tau(tau)?;
    if (gamma1 * gamma2 - 1.0).abs() > 1e-10 {
        return Err(Error::WrongRegime(format!("gamma1*gamma2 = {} != 1", gamma1 * gamma2)));
    }
    let (g1s, g2s) = (gamma1 * gamma1, gamma2 * gamma2);
    let lin = ((g1s - 1.0) / (g1s + 1.0)).powi(2);
    let eta0 = (g2s - g1s) / ((1.0 + g1s) * (1.0 + g2s));
    Ok(1.0 - lin * tau - 0.25 * (7.0 * eta0 * eta0 + 1.0) * tau * tau)
}

/// exp(−γ⁴((γ²−1)/(γ²+1))² τ).
pub fn predict_single_coherent(gamma: f64, tau: f64) -> Result<f64> {
    check_nonneg(gamma)?;
    check_tau(tau)?;
    let g2 = gamma * gamma;
    Ok((-g2 * g2 * ((g2 - 1.0) / (g2 + 1.0)).powi(2) * tau).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassics::saddle_point;
    use proptest::prelude::*;

    #[test]
    fn fast_examples() {
        assert!((predict_fast(0.0, 1.0, 10.0, 0.1).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((predict_fast(0.0, 1.0, 10.0, 0.1).unwrap() - 0.606531).abs() < 1e-6);
        assert!(matches!(predict_fast(0.7, 0.7, 10.0, 0.1), Err(Error::WrongRegime(_))));
        assert!(matches!(predict_fast(0.5, 2.0, 10.0, 0.1), Err(Error::WrongRegime(_))));
        let r1 = -predict_fast(0.3, 0.9, 30.0, 1.0).unwrap().ln();
        let r2 = -predict_fast(0.3, 0.9, 60.0, 1.0).unwrap().ln();
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slow_examples() {
        assert!((predict_slow_exp(1.0, 1.0).unwrap() - (-0.125f64).exp()).abs() < 1e-15);
        assert!((predict_slow_exp(1.0, 1.0).unwrap() - 0.882497).abs() < 1e-6);
        assert_eq!(predict_slow_exp(0.5, 0.0).unwrap(), 1.0);
        assert!((slow_exp_coefficients(0.5).0 - 0.36).abs() < 1e-15);
        assert_eq!(predict_slow_poly(1.0, 1.0, 1.0).unwrap(), 0.75);
        assert_eq!(predict_slow_poly(0.5, 2.0, 0.0).unwrap(), 1.0);
        assert!(matches!(predict_slow_poly(0.5, 2.1, 0.1), Err(Error::WrongRegime(_))));
        let eta0 = saddle_point(0.5, 2.0).unwrap().point.eta;
        assert!((slow_exp_coefficients(0.5).0 - eta0 * eta0).abs() < 1e-15);
    }

    #[test]
    fn single_coherent_examples() {
        assert_eq!(predict_single_coherent(1.0, 3.0).unwrap(), 1.0);
        assert!((predict_single_coherent(0.5, 1.0).unwrap() - 0.977751).abs() < 1e-6);
        assert!(predict_single_coherent(-1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn slow_forms_share_the_linear_term(g in 0.05f64..20.0) {
            let h = 1e-7;
            let e = (1.0 - predict_slow_exp(g, h).unwrap()) / h;
            let p = (1.0 - predict_slow_poly(g, 1.0 / g, h).unwrap()) / h;
            prop_assert!((e - p).abs() < 1e-5);
        }
    }
}
