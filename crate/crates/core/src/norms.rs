//! Coherence norms of an off-diagonal cat block ρ̃ = |γ₁⟩⟨γ₂|:
//! N₁ = tr ρ̃ρ̃†, N₂ = Σ|ρ̃_{m₁m₂}| and n(τ) = N₂(τ)/N₂(0), with initial-rate
//! formulas and rate fits.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dissipator::{evolve_exact, evolve_oracle, evolve_short_time, liouvillian_apply, BlockDensity};
use crate::spin::{coherent_state, CoherentLabel, DensityMatrix, SpinQuantum};
use crate::{Error, Result};

/// Which evolution engine produced a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    /// Bulirsch–Stoer integration with the given local tolerance.
    Oracle {
        tol: f64,
    },
    Exact,
    ShortTime,
}

impl Engine {
    pub fn tag(&self) -> &'static str {
        match self {
            Engine::Oracle { .. } => "oracle",
            Engine::Exact => "exact",
            Engine::ShortTime => "short_time",
        }
    }

    pub fn evolve(&self, rho0: &BlockDensity, tau: f64) -> Result<BlockDensity> {
        match *self {
            Engine::Oracle { tol } => evolve_oracle(rho0, tau, tol),
            Engine::Exact => evolve_exact(rho0, tau),
            Engine::ShortTime => evolve_short_time(rho0, tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveMeta {
    pub twice_j: u32,
    pub label1: Option<CoherentLabel>,
    pub label2: Option<CoherentLabel>,
    pub engine: Engine,
}

/// Sampled N₁(τ), N₂(τ) and n(τ).
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceCurve {
    pub taus: Vec<f64>,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
    pub n_ratio: Vec<f64>,
    pub meta: CurveMeta,
}

pub fn norm_n1(rho: &BlockDensity) -> f64 {
    rho.blocks().flat_map(|(_, b)| b.iter().map(|z| z.norm_sqr())).sum()
}

pub fn norm_n2(rho: &BlockDensity) -> f64 {
    rho.blocks().flat_map(|(_, b)| b.iter().map(|z| z.norm())).sum()
}

/// The off-diagonal block |γ₁⟩⟨γ₂| in block form.
pub fn cat_block(spin: SpinQuantum, label1: &CoherentLabel, label2: &CoherentLabel) -> BlockDensity {
    let a = coherent_state(spin, label1);
    let b = coherent_state(spin, label2);
    BlockDensity::from_dense(&DensityMatrix::outer(&a, &b).expect("same spin"))
}

/// Evolves `rho0` to each τ independently and records the norms.
pub fn curve_from_block(
    rho0: &BlockDensity,
    taus: &[f64],
    engine: Engine,
    meta: CurveMeta,
) -> Result<DecoherenceCurve> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("empty tau grid".into()));
    }
    if taus.iter().any(|t| !(*t >= 0.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "tau grid must be non-negative and strictly ascending".into(),
        ));
    }
    let n2_0 = norm_n2(rho0);
    if n2_0 == 0.0 {
        return Err(Error::InvalidInput("initial block is zero".into()));
    }
    let norms = taus
        .par_iter()
        .map(|&tau| {
            if tau == 0.0 {
                Ok((norm_n1(rho0), n2_0))
            } else {
                engine.evolve(rho0, tau).map(|r| (norm_n1(&r), norm_n2(&r)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n1 = norms.iter().map(|p| p.0).collect();
    let n2: Vec<f64> = norms.iter().map(|p| p.1).collect();
    let n_ratio = n2.iter().map(|v| v / n2_0).collect();
    Ok(DecoherenceCurve {
        taus: taus.to_vec(),
        n1,
        n2,
        n_ratio,
        meta,
    })
}

/// Decoherence curve of the cat block |γ₁⟩⟨γ₂|.
pub fn decoherence_curve(
    spin: SpinQuantum,
    label1: &CoherentLabel,
    label2: &CoherentLabel,
    taus: &[f64],
    engine: Engine,
) -> Result<DecoherenceCurve> {
    let meta = CurveMeta {
        twice_j: spin.twice_j(),
        label1: Some(*label1),
        label2: Some(*label2),
        engine,
    };
    curve_from_block(&cat_block(spin, label1, label2), taus, engine, meta)
}

/// `samples` equally spaced points on [0, t_max].
pub fn uniform_taus(t_max: f64, samples: usize) -> Vec<f64> {
    if samples < 2 {
        return vec![0.0];
    }
    (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect()
}

/// dN₁/dτ at τ = 0 as printed:
/// −2j(sin²θ₁ + sin²θ₂ − 2cos(φ₂−φ₁) sinθ₁ sinθ₂) − (1+cosθ₁)²(1+cosθ₂)².
pub fn n1_rate_paper(theta1: f64, theta2: f64, dphi: f64, j: f64) -> f64 {
    let (s1, s2) = (theta1.sin(), theta2.sin());
    let (c1, c2) = (theta1.cos(), theta2.cos());
    -2.0 * j * (s1 * s1 + s2 * s2 - 2.0 * dphi.cos() * s1 * s2) - (1.0 + c1).powi(2) * (1.0 + c2).powi(2)
}

/// dN₁/dτ at τ = 0 from the generator itself: 2 Re tr(L[ρ̃] ρ̃†).
pub fn n1_rate_oracle(spin: SpinQuantum, label1: &CoherentLabel, label2: &CoherentLabel) -> f64 {
    n1_rate_of_block(&cat_block(spin, label1, label2))
}

/// 2 Re tr(L[ρ] ρ†) for an arbitrary block density.
pub fn n1_rate_of_block(rho: &BlockDensity) -> f64 {
    let d = liouvillian_apply(rho);
    let s: f64 = rho
        .blocks()
        .zip(d.blocks())
        .flat_map(|((_, a), (_, b))| a.iter().zip(b.iter()).map(|(x, y)| (y * x.conj()).re))
        .sum();
    2.0 * s
}

/// Closed form of [`n1_rate_oracle`] for coherent components, from
/// ⟨J₋⟩ = j sinθ e^{−iφ} and ⟨J₊J₋⟩ = j² sin²θ + (j/2)(1+cosθ)²:
/// −j(sin²θ₁ + sin²θ₂ − 2cos(φ₂−φ₁) sinθ₁ sinθ₂) − ½[(1+cosθ₁)² + (1+cosθ₂)²].
pub fn n1_rate_closed_form(theta1: f64, theta2: f64, dphi: f64, j: f64) -> f64 {
    let (s1, s2) = (theta1.sin(), theta2.sin());
    let (c1, c2) = (theta1.cos(), theta2.cos());
    -j * (s1 * s1 + s2 * s2 - 2.0 * dphi.cos() * s1 * s2) - 0.5 * ((1.0 + c1).powi(2) + (1.0 + c2).powi(2))
}

/// Default fit window min(0.05/rate_guess, 0.1).
pub fn default_fit_window(rate_guess: f64) -> f64 {
    if rate_guess > 0.0 {
        (0.05 / rate_guess).min(0.1)
    } else {
        0.1
    }
}

fn window_samples(curve: &DecoherenceCurve, window_end: f64) -> Result<Vec<(f64, f64)>> {
    let pts: Vec<(f64, f64)> = curve
        .taus
        .iter()
        .zip(&curve.n_ratio)
        .filter(|(t, _)| **t > 0.0 && **t <= window_end * (1.0 + 1e-12))
        .map(|(t, n)| (*t, *n))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            found: pts.len(),
        });
    }
    if pts.iter().any(|(_, n)| !(*n > 0.0)) {
        return Err(Error::InvalidInput("n(tau) must be positive on the fit window".into()));
    }
    Ok(pts)
}

/// Decay rate from the least-squares slope of ln n(τ) on [0, window_end];
/// the fit passes through ln n(0) = 0.
pub fn fit_initial_rate(curve: &DecoherenceCurve, window_end: f64) -> Result<f64> {
    let pts = window_samples(curve, window_end)?;
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(sxy, sxx), (t, n)| (sxy + t * n.ln(), sxx + t * t));
    Ok(-sxy / sxx)
}

/// Least-squares fit ln n(τ) ≈ −a τ − b τ² on [0, window_end]; returns (a, b).
pub fn fit_linear_quadratic(curve: &DecoherenceCurve, window_end: f64) -> Result<(f64, f64)> {
    let pts = window_samples(curve, window_end)?;
    let (mut s2, mut s3, mut s4, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, n) in &pts {
        let y = n.ln();
        s2 += t * t;
        s3 += t * t * t;
        s4 += t * t * t * t;
        y1 += t * y;
        y2 += t * t * y;
    }
    let det = s2 * s4 - s3 * s3;
    if det.abs() < f64::MIN_POSITIVE {
        return Err(Error::InvalidInput("degenerate fit window".into()));
    }
    let a = (y1 * s4 - y2 * s3) / det;
    let b = (s2 * y2 - s3 * y1) / det;
    Ok((-a, -b))
}

/// Σ ρ_m(k) over all blocks (equals N₂ when every entry is real and
/// non-negative).
pub fn entry_sum(rho: &BlockDensity) -> Complex64 {
    rho.blocks().map(|(_, b)| b.sum()).sum()
}
