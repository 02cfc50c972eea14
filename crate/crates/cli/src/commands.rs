//! Subcommand bodies. Each returns plain data; serialization lives in
//! [`crate::output`].

use std::f64::consts::PI;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sradcat_core::dissipator::{propagator_table, PropagatorEntry};
use sradcat_core::norms::{
    decoherence_curve, default_fit_window, fit_initial_rate, fit_linear_quadratic, n1_rate_oracle, n1_rate_paper,
    uniform_taus, DecoherenceCurve, Engine,
};
use sradcat_core::preparation::{
    cat_fidelity_phase_optimized, prepare_misrotated_cat_report, prepare_symmetric_cat_report, PreparationReport,
    TwoComponentFit,
};
use sradcat_core::semiclassics::{
    coeff_expansion, predict_fast, predict_slow_exp, predict_slow_poly, ratio_coefficients, saddle_point,
    slow_exp_coefficients, RatioCoefficients,
};
use sradcat_core::spin::{CoherentLabel, SpinQuantum};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Relative gap above which a printed formula and its oracle are reported.
pub const DISCREPANCY_TOLERANCE: f64 = 1e-6;
/// Relative gap above which a fitted rate and a printed prediction are reported.
pub const RATE_TOLERANCE: f64 = 0.10;

pub fn decohere(cfg: &RunConfig) -> Result<DecoherenceCurve> {
    let taus = uniform_taus(cfg.t_max, cfg.samples);
    Ok(decoherence_curve(
        cfg.spin(),
        &cfg.label1.to_label()?,
        &cfg.label2.to_label()?,
        &taus,
        cfg.engine.engine(cfg.tol),
    )?)
}

pub fn propagator(twice_j: u32, tau: f64) -> Result<Vec<PropagatorEntry>> {
    if !(tau >= 0.0 && tau.is_finite()) {
        bail!("tau = {tau} must be finite and >= 0");
    }
    Ok(propagator_table(SpinQuantum::new(twice_j)?, tau)?)
}

/// A scan over j values and real label pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub twice_js: Vec<u32>,
    pub pairs: Vec<[f64; 2]>,
    /// Fit window in τ; when absent it is chosen per point from the initial rate.
    #[serde(default)]
    pub window: Option<f64>,
    /// Fit window in jτ; overrides `window`.
    #[serde(default)]
    pub window_jtau: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    21
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub twice_j: u32,
    pub gamma1: f64,
    pub gamma2: f64,
    pub window: f64,
    /// Decay constant of n(τ) from a least-squares line through the origin.
    pub fitted_rate: f64,
    /// Linear coefficient of a linear-plus-quadratic fit of −ln n(τ).
    pub fitted_linear: f64,
    pub fitted_quadratic: f64,
    /// Exponent coefficient 2j(γ₁−γ₂)²(1−γ₁γ₂)²/((1+γ₁²)(1+γ₂²))², absent on slow branches.
    pub predict_fast: Option<f64>,
    /// ((γ₁²−1)/(γ₁²+1))², present only when γ₁γ₂ = 1.
    pub predict_slow_exp_linear: Option<f64>,
    pub n1_rate_paper: f64,
    pub n1_rate_oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub formula: String,
    pub twice_j: Option<u32>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub printed: f64,
    pub measured: f64,
    pub relative_gap: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatesReport {
    pub schema_version: u32,
    pub config: RatesConfig,
    pub points: Vec<RatePoint>,
    pub discrepancies: Vec<Discrepancy>,
}

fn relative_gap(printed: f64, measured: f64) -> f64 {
    (printed - measured).abs() / measured.abs().max(f64::MIN_POSITIVE)
}

fn on_slow_branch(g1: f64, g2: f64) -> bool {
    (g1 * g2 - 1.0).abs() <= 1e-10
}

/// Fast-branch exponent coefficient (the decay constant of `predict_fast`).
pub fn fast_rate(g1: f64, g2: f64, j: f64) -> Option<f64> {
    predict_fast(g1, g2, j, 1.0).ok().map(|n| -n.ln())
}

/// Fit window for a point: explicit τ or jτ, else min(0.05/rate, 0.1) with
/// half the initial N₁ rate as the guess for the n(τ) rate.
fn point_window(cfg: &RatesConfig, spin: SpinQuantum, l1: &CoherentLabel, l2: &CoherentLabel) -> f64 {
    if let Some(w) = cfg.window_jtau {
        return w / spin.j();
    }
    cfg.window
        .unwrap_or_else(|| default_fit_window(0.5 * n1_rate_oracle(spin, l1, l2).abs()))
}

pub fn rate_point(cfg: &RatesConfig, twice_j: u32, g1: f64, g2: f64) -> Result<RatePoint> {
    let spin = SpinQuantum::new(twice_j)?;
    let (l1, l2) = (CoherentLabel::from_real_gamma(g1)?, CoherentLabel::from_real_gamma(g2)?);
    let window = point_window(cfg, spin, &l1, &l2);
    let curve = decoherence_curve(spin, &l1, &l2, &uniform_taus(window, cfg.samples), Engine::Exact)?;
    let (a, b) = fit_linear_quadratic(&curve, window)?;
    let j = spin.j();
    Ok(RatePoint {
        twice_j,
        gamma1: g1,
        gamma2: g2,
        window,
        fitted_rate: fit_initial_rate(&curve, window)?,
        fitted_linear: a,
        fitted_quadratic: b,
        predict_fast: fast_rate(g1, g2, j),
        predict_slow_exp_linear: on_slow_branch(g1, g2).then(|| slow_exp_coefficients(g1).0),
        n1_rate_paper: n1_rate_paper(l1.theta(), l2.theta(), 0.0, j),
        n1_rate_oracle: n1_rate_oracle(spin, &l1, &l2),
    })
}

/// The printed initial N₁ rate for the polar cat, against the oracle.
pub fn polar_cat_discrepancy(twice_j: u32) -> Result<Discrepancy> {
    let spin = SpinQuantum::new(twice_j)?;
    let printed = n1_rate_paper(0.0, PI, 0.0, spin.j());
    let measured = n1_rate_oracle(spin, &CoherentLabel::north(), &CoherentLabel::south());
    Ok(Discrepancy {
        formula: "initial N1 rate, polar cat".into(),
        twice_j: Some(twice_j),
        gamma1: Some(0.0),
        gamma2: None,
        printed,
        measured,
        relative_gap: relative_gap(printed, measured),
        note: "printed form gives 0; the generator gives -2 for every j".into(),
    })
}

fn point_discrepancies(p: &RatePoint) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    let mut push = |formula: &str, printed: f64, measured: f64, tol: f64, note: &str| {
        let gap = relative_gap(printed, measured);
        if gap > tol {
            out.push(Discrepancy {
                formula: formula.into(),
                twice_j: Some(p.twice_j),
                gamma1: Some(p.gamma1),
                gamma2: Some(p.gamma2),
                printed,
                measured,
                relative_gap: gap,
                note: note.into(),
            });
        }
    };
    push(
        "initial N1 rate",
        p.n1_rate_paper,
        p.n1_rate_oracle,
        DISCREPANCY_TOLERANCE,
        "printed rate vs 2 Re tr(L[rho] rho^dagger)",
    );
    if let Some(f) = p.predict_fast {
        push(
            "fast decay exponent",
            f,
            p.fitted_rate,
            RATE_TOLERANCE,
            "predicted vs fitted rate of n(tau)",
        );
    }
    if let Some(s) = p.predict_slow_exp_linear {
        push(
            "slow decay linear term",
            s,
            p.fitted_linear,
            RATE_TOLERANCE,
            "predicted vs fitted linear coefficient",
        );
    }
    out
}

pub fn rates(cfg: &RatesConfig) -> Result<RatesReport> {
    if cfg.twice_js.is_empty() || cfg.pairs.is_empty() {
        bail!("a rate scan needs at least one j value and one label pair");
    }
    if cfg.samples < 6 {
        bail!("samples = {} too small for a rate fit", cfg.samples);
    }
    let mut keys: Vec<(usize, u32)> = (0..cfg.pairs.len())
        .flat_map(|i| cfg.twice_js.iter().map(move |&tj| (i, tj)))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let points = keys
        .par_iter()
        .map(|&(i, tj)| rate_point(cfg, tj, cfg.pairs[i][0], cfg.pairs[i][1]))
        .collect::<Result<Vec<_>>>()?;
    let mut discrepancies = vec![polar_cat_discrepancy(cfg.twice_js[0])?];
    discrepancies.extend(points.iter().flat_map(point_discrepancies));
    Ok(RatesReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        points,
        discrepancies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicsReport {
    pub schema_version: u32,
    pub gamma1: f64,
    pub gamma2: f64,
    pub nu0: f64,
    pub eta0: f64,
    pub s0: f64,
    pub hessian: [[f64; 2]; 2],
    pub w0: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2_at_a2_zero: f64,
    pub ratio: RatioSummary,
    pub predict_fast_rate_per_j: Option<f64>,
    pub predict_slow_exp: Option<[f64; 2]>,
    pub samples: Vec<SemiclassicalSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub lin0: f64,
    pub lin1: f64,
    pub quad0: f64,
    pub quad1: f64,
    pub quad2: f64,
    pub quad2_full: f64,
}

impl From<&RatioCoefficients> for RatioSummary {
    fn from(c: &RatioCoefficients) -> Self {
        Self {
            lin0: c.lin0,
            lin1: c.lin1,
            quad0: c.quad0,
            quad1: c.quad1,
            quad2: c.quad2,
            quad2_full: c.quad2_full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalSample {
    pub tau: f64,
    pub n_semiclassical: f64,
    pub predict_fast: Option<f64>,
    pub predict_slow_exp: Option<f64>,
    pub predict_slow_poly: Option<f64>,
}

/// Saddle, coefficient values, Laplace ratio coefficients and the closed-form
/// predictions on `taus` at spin j.
pub fn semiclassics(g1: f64, g2: f64, j: f64, taus: &[f64]) -> Result<SemiclassicsReport> {
    let saddle = saddle_point(g1, g2)?;
    let c = coeff_expansion(saddle.point)?;
    let ratio = ratio_coefficients(g1, g2, 0.0)?;
    let slow = on_slow_branch(g1, g2);
    let samples = taus
        .iter()
        .map(|&tau| SemiclassicalSample {
            tau,
            n_semiclassical: ratio.n(j, tau),
            predict_fast: predict_fast(g1, g2, j, tau).ok(),
            predict_slow_exp: slow.then(|| predict_slow_exp(g1, tau).ok()).flatten(),
            predict_slow_poly: slow.then(|| predict_slow_poly(g1, g2, tau).ok()).flatten(),
        })
        .collect();
    let h = saddle.hessian;
    Ok(SemiclassicsReport {
        schema_version: SCHEMA_VERSION,
        gamma1: g1,
        gamma2: g2,
        nu0: saddle.point.nu,
        eta0: saddle.point.eta,
        s0: saddle.s0_value,
        hessian: [[h[(0, 0)], h[(0, 1)]], [h[(1, 0)], h[(1, 1)]]],
        w0: c.w,
        a0: c.a0,
        a1: c.a1,
        b0: c.b0,
        b1: c.b1,
        b2_at_a2_zero: c.b2(0.0),
        ratio: RatioSummary::from(&ratio),
        predict_fast_rate_per_j: fast_rate(g1, g2, 1.0),
        predict_slow_exp: slow.then(|| {
            let (l, q) = slow_exp_coefficients(g1);
            [l, q]
        }),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelOut {
    pub theta: f64,
    pub phi: f64,
    pub gamma_abs: f64,
}

impl From<&CoherentLabel> for LabelOut {
    fn from(l: &CoherentLabel) -> Self {
        Self {
            theta: l.theta(),
            phi: l.phi(),
            gamma_abs: l.gamma_abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOut {
    pub label1: LabelOut,
    pub label2: LabelOut,
    pub fidelity: f64,
    pub gamma1_gamma2_conj: [f64; 2],
}

impl From<&TwoComponentFit> for FitOut {
    fn from(f: &TwoComponentFit) -> Self {
        let p = f.gamma_product();
        Self {
            label1: (&f.label1).into(),
            label2: (&f.label2).into(),
            fidelity: f.fidelity,
            gamma1_gamma2_conj: [p.re, p.im],
        }
    }
}

/// Fitted decay rates of the cat built from the fitted components at j and 2j.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowRateCheck {
    pub twice_j: u32,
    pub rate_j: f64,
    pub rate_2j: f64,
    pub relative_change: f64,
    /// Relative change below 15 %.
    pub j_independent: bool,
}

pub const SLOW_RATE_TOLERANCE: f64 = 0.15;

fn fitted_cat_rate(twice_j: u32, fit: &TwoComponentFit) -> Result<f64> {
    let spin = SpinQuantum::new(twice_j)?;
    let window = default_fit_window(0.5 * n1_rate_oracle(spin, &fit.label1, &fit.label2).abs());
    let curve = decoherence_curve(spin, &fit.label1, &fit.label2, &uniform_taus(window, 21), Engine::Exact)?;
    Ok(fit_initial_rate(&curve, window)?)
}

/// Compares fitted rates of the cats prepared at j and at 2j.
pub fn slow_rate_check(twice_j: u32, small: &TwoComponentFit, large: &TwoComponentFit) -> Result<SlowRateCheck> {
    let rate_j = fitted_cat_rate(twice_j, small)?;
    let rate_2j = fitted_cat_rate(2 * twice_j, large)?;
    let relative_change = (rate_2j - rate_j).abs() / rate_j.abs().max(f64::MIN_POSITIVE);
    Ok(SlowRateCheck {
        twice_j,
        rate_j,
        rate_2j,
        relative_change,
        j_independent: relative_change < SLOW_RATE_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrepareReport {
    pub schema_version: u32,
    pub twice_j: u32,
    pub theta_offset: f64,
    pub wrong_axis: bool,
    pub chi: f64,
    pub initial_pulse: [f64; 2],
    pub final_pulse: [f64; 2],
    pub twisted_fit: FitOut,
    pub final_fit: FitOut,
    /// Fidelity to the ideal cat at (θ_offset, φ) and (π − θ_offset, φ), phase optimised.
    pub ideal_cat_fidelity: f64,
    pub ideal_cat_phase: f64,
    pub slow_rate_check: SlowRateCheck,
}

pub fn run_preparation(twice_j: u32, theta_offset: f64, wrong_axis: bool) -> Result<PreparationReport> {
    let spin = SpinQuantum::new(twice_j)?;
    Ok(if wrong_axis {
        prepare_misrotated_cat_report(spin, theta_offset)?
    } else {
        prepare_symmetric_cat_report(spin, theta_offset)?
    })
}

pub fn prepare(twice_j: u32, theta_offset: f64, wrong_axis: bool) -> Result<PrepareReport> {
    let (r, big) = rayon::join(
        || run_preparation(twice_j, theta_offset, wrong_axis),
        || run_preparation(2 * twice_j, theta_offset, wrong_axis),
    );
    let (r, big) = (r?, big?);
    let phi = r.final_fit.label1.phi();
    let ideal1 = CoherentLabel::from_angles(theta_offset, phi)?;
    let ideal2 = CoherentLabel::from_angles(PI - theta_offset, phi)?;
    let (ideal_cat_fidelity, ideal_cat_phase) = cat_fidelity_phase_optimized(&r.state, &ideal1, &ideal2)?;
    let pulse = r.schedule.pulses[0];
    Ok(PrepareReport {
        schema_version: SCHEMA_VERSION,
        twice_j,
        theta_offset,
        wrong_axis,
        chi: r.schedule.chi,
        initial_pulse: [r.initial_pulse.axis_azimuth, r.initial_pulse.angle],
        final_pulse: [pulse.axis_azimuth, pulse.angle],
        twisted_fit: (&r.twisted_fit).into(),
        final_fit: (&r.final_fit).into(),
        ideal_cat_fidelity,
        ideal_cat_phase,
        slow_rate_check: slow_rate_check(twice_j, &r.final_fit, &big.final_fit)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_discrepancy_is_always_present() {
        let cfg = RatesConfig {
            twice_js: vec![8],
            pairs: vec![[0.5, 2.0]],
            window: Some(0.1),
            window_jtau: None,
            samples: 11,
        };
        let r = rates(&cfg).unwrap();
        let d = &r.discrepancies[0];
        assert!(d.printed.abs() < 1e-12);
        assert!((d.measured + 2.0).abs() < 1e-12);
        assert_eq!(r.points.len(), 1);
        assert!(r.points[0].predict_fast.is_none());
        assert!((r.points[0].predict_slow_exp_linear.unwrap() - 0.36).abs() < 1e-12);
    }

    #[test]
    fn scan_output_is_sorted_by_key() {
        let cfg = RatesConfig {
            twice_js: vec![12, 6],
            pairs: vec![[0.3, 0.9]],
            window: None,
            window_jtau: Some(0.05),
            samples: 11,
        };
        let r = rates(&cfg).unwrap();
        assert_eq!(r.points.iter().map(|p| p.twice_j).collect::<Vec<_>>(), vec![6, 12]);
        assert!((r.points[1].window - 0.05 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn semiclassics_report_for_slow_pair() {
        let r = semiclassics(0.5, 2.0, 30.0, &[0.0, 0.01]).unwrap();
        assert!(r.nu0.abs() < 1e-12 && (r.eta0.abs() - 0.6).abs() < 1e-12);
        assert!(r.a0.abs() < 1e-12);
        assert!(r.predict_fast_rate_per_j.is_none());
        assert_eq!(r.samples[0].n_semiclassical, 1.0);
        assert_eq!(
            r.samples[1].predict_slow_exp,
            Some(predict_slow_exp(0.5, 0.01).unwrap())
        );
    }

    #[test]
    fn rejects_empty_scan() {
        let cfg = RatesConfig {
            twice_js: vec![],
            pairs: vec![[0.5, 2.0]],
            window: None,
            window_jtau: None,
            samples: 21,
        };
        assert!(rates(&cfg).is_err());
    }
}
