//! Unitary preparation of an equator-symmetric cat: a resonant pulse from
//! the ground state, one-axis twisting under J₊J₋, and a π/2 pulse that tilts
//! the two split components into mirror positions about the equator.

use std::f64::consts::{FRAC_PI_2, PI};

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;

use crate::spin::{
    coherent_overlap, coherent_state, rotate_about, wrap_angle, CoherentLabel, SpinQuantum, StateVector,
};
use crate::{Error, Result};

/// Fidelity below which the prepared state is not accepted as a two-component cat.
pub const MIN_PIPELINE_FIDELITY: f64 = 0.999;

/// Rotation by `angle` about the equatorial axis at azimuth `axis_azimuth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub axis_azimuth: f64,
    pub angle: f64,
}

impl Pulse {
    pub fn apply(&self, state: &StateVector) -> StateVector {
        rotate_about(state, self.axis_azimuth, self.angle)
    }
}

/// Twisting by χ followed by the listed pulses, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistSchedule {
    pub chi: f64,
    pub pulses: Vec<Pulse>,
}

impl TwistSchedule {
    pub fn new(chi: f64, pulses: Vec<Pulse>) -> Result<Self> {
        if !(chi >= 0.0 && chi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "twisting phase chi = {chi} must be finite and >= 0"
            )));
        }
        Ok(Self { chi, pulses })
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        self.pulses
            .iter()
            .fold(twist_evolve(state, self.chi), |s, p| p.apply(&s))
    }
}

/// exp(−iχ J₊J₋): phase e^{−iχ g_m} on |jm⟩, g_m = j(j+1) − m(m−1).
pub fn twist_evolve(state: &StateVector, chi: f64) -> StateVector {
    let spin = state.spin;
    let amplitudes = state.amplitudes.map_with_location(|i, _, a| {
        let g = spin.ladder_g(spin.twice_m(i));
        // reduce χg mod 2π in integer-friendly form to keep phases exact for large g
        a * Complex64::from_polar(1.0, -(chi * g).rem_euclid(2.0 * PI))
    });
    StateVector { spin, amplitudes }
}

/// |⟨a|b⟩|² for normalized inputs.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Best approximation of a state by c₁|γ₁⟩ + c₂|γ₂⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoComponentFit {
    pub label1: CoherentLabel,
    pub label2: CoherentLabel,
    pub coeff1: Complex64,
    pub coeff2: Complex64,
    /// Squared norm of the projection onto span{|γ₁⟩, |γ₂⟩}.
    pub fidelity: f64,
}

impl TwoComponentFit {
    /// γ₁·conj(γ₂), which equals 1 for mirror-symmetric components.
    pub fn gamma_product(&self) -> Complex64 {
        let g = |l: &CoherentLabel| Complex64::from_polar((l.theta() / 2.0).tan(), l.phi());
        g(&self.label1) * g(&self.label2).conj()
    }
}

/// Projection of ψ onto span{|a⟩, |b⟩}: (fidelity, c_a, c_b).
fn project(spin: SpinQuantum, psi: &StateVector, a: &CoherentLabel, b: &CoherentLabel) -> (f64, Complex64, Complex64) {
    let (sa, sb) = (coherent_state(spin, a), coherent_state(spin, b));
    let va = sa.inner(psi).expect("same spin");
    let vb = sb.inner(psi).expect("same spin");
    let s = coherent_overlap(spin, a, b);
    let det = 1.0 - s.norm_sqr();
    if det < 1e-12 {
        return (va.norm_sqr(), va, Complex64::new(0.0, 0.0));
    }
    let gram = Matrix2::new(Complex64::new(1.0, 0.0), s, s.conj(), Complex64::new(1.0, 0.0));
    let v = Vector2::new(va, vb);
    let c = gram.try_inverse().expect("det checked") * v;
    let f = (v.conjugate().dot(&c)).re / psi.norm_sqr();
    (f, c[0], c[1])
}

fn label(theta: f64, phi: f64) -> CoherentLabel {
    // fold θ into [0, π] by reflecting through the pole
    let t = theta.rem_euclid(2.0 * PI);
    let (t, p) = if t > PI { (2.0 * PI - t, phi + PI) } else { (t, phi) };
    CoherentLabel::from_angles(t, wrap_angle(p)).expect("folded angles are valid")
}

struct FitCost<'a> {
    spin: SpinQuantum,
    psi: &'a StateVector,
}

impl CostFunction for FitCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (f, _, _) = project(self.spin, self.psi, &label(p[0], p[1]), &label(p[2], p[3]));
        Ok(1.0 - f)
    }
}

/// Fits the two-coherent-state ansatz by a Husimi-grid search for the two
/// components followed by Nelder–Mead refinement of (θ₁, φ₁, θ₂, φ₂).
pub fn fit_two_components(psi: &StateVector) -> Result<TwoComponentFit> {
    let spin = psi.spin;
    let psi = psi.normalized();
    let (nt, np) = (48usize, 96usize);
    let mut q = vec![vec![0.0; np]; nt + 1];
    for (it, row) in q.iter_mut().enumerate() {
        let theta = PI * it as f64 / nt as f64;
        for (ip, v) in row.iter_mut().enumerate() {
            let phi = 2.0 * PI * ip as f64 / np as f64;
            *v = coherent_state(spin, &label(theta, phi)).inner(&psi)?.norm_sqr();
        }
    }
    // local maxima of the Husimi function, strongest first
    let mut peaks = Vec::new();
    for it in 0..=nt {
        for ip in 0..np {
            let v = q[it][ip];
            let mut is_max = true;
            for dt in [-1i64, 0, 1] {
                for dp in [-1i64, 0, 1] {
                    let t = it as i64 + dt;
                    if (dt, dp) == (0, 0) || t < 0 || t > nt as i64 {
                        continue;
                    }
                    let p = (ip as i64 + dp).rem_euclid(np as i64) as usize;
                    if q[t as usize][p] > v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                peaks.push((v, PI * it as f64 / nt as f64, 2.0 * PI * ip as f64 / np as f64));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    peaks.truncate(6);
    let mut best: Option<(f64, [f64; 4])> = None;
    for (i, a) in peaks.iter().enumerate() {
        for b in peaks.iter().skip(i + 1) {
            let (f, _, _) = project(spin, &psi, &label(a.1, a.2), &label(b.1, b.2));
            if best.is_none_or(|(bf, _)| f > bf) {
                best = Some((f, [a.1, a.2, b.1, b.2]));
            }
        }
    }
    let start = match best {
        Some((_, p)) => p,
        None => {
            let a = peaks.first().copied().unwrap_or((0.0, 0.0, 0.0));
            [a.1, a.2, a.1 + 0.3, a.2]
        }
    };
    let mut point = start.to_vec();
    // two rounds: the restart re-seeds a simplex that may have collapsed
    for step in [0.05, 0.002] {
        let simplex: Vec<Vec<f64>> = std::iter::once(point.clone())
            .chain((0..4).map(|k| {
                let mut v = point.clone();
                v[k] += step;
                v
            }))
            .collect();
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-16)
            .map_err(|e| Error::Optimizer(e.to_string()))?;
        let res = Executor::new(FitCost { spin, psi: &psi }, solver)
            .configure(|s| s.max_iters(4000))
            .run()
            .map_err(|e| Error::Optimizer(e.to_string()))?;
        point = res
            .state
            .best_param
            .ok_or_else(|| Error::Optimizer("no parameter returned".into()))?;
    }
    let (l1, l2) = (label(point[0], point[1]), label(point[2], point[3]));
    let (f, c1, c2) = project(spin, &psi, &l1, &l2);
    // report the northern component first
    let fit = if l1.theta() <= l2.theta() {
        TwoComponentFit {
            label1: l1,
            label2: l2,
            coeff1: c1,
            coeff2: c2,
            fidelity: f,
        }
    } else {
        TwoComponentFit {
            label1: l2,
            label2: l1,
            coeff1: c2,
            coeff2: c1,
            fidelity: f,
        }
    };
    Ok(fit)
}

fn bloch(l: &CoherentLabel) -> Vector3<f64> {
    let (t, p) = (l.theta(), l.phi());
    Vector3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos())
}

/// Everything the pipeline did and found.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationReport {
    pub state: StateVector,
    pub initial_pulse: Pulse,
    pub schedule: TwistSchedule,
    pub twisted_fit: TwoComponentFit,
    pub final_fit: TwoComponentFit,
}

fn check_inputs(spin: SpinQuantum, theta_offset: f64) -> Result<()> {
    if !spin.is_integer() {
        return Err(Error::HalfIntegerSpin(spin.twice_j()));
    }
    if !(theta_offset > 0.0 && theta_offset < FRAC_PI_2) {
        return Err(Error::InvalidInput(format!(
            "theta_offset = {theta_offset} outside (0, pi/2)"
        )));
    }
    Ok(())
}

/// Ground state |j,−j⟩ → coherent state at θ = π/2 − θ_offset → twist by
/// χ = π/2 (two components at equal θ, opposite azimuths) → π/2 about the
/// normal of the plane holding both components, which leaves them at θ_offset
/// and π − θ_offset with a common azimuth.
pub fn prepare_symmetric_cat_report(spin: SpinQuantum, theta_offset: f64) -> Result<PreparationReport> {
    run_pipeline(spin, theta_offset, false)
}

pub fn prepare_symmetric_cat(spin: SpinQuantum, theta_offset: f64) -> Result<StateVector> {
    Ok(prepare_symmetric_cat_report(spin, theta_offset)?.state)
}

/// Negative control: the last pulse turns about the in-plane axis bisecting
/// the two components instead of the normal, giving an asymmetric cat.
pub fn prepare_misrotated_cat_report(spin: SpinQuantum, theta_offset: f64) -> Result<PreparationReport> {
    run_pipeline(spin, theta_offset, true)
}

fn run_pipeline(spin: SpinQuantum, theta_offset: f64, wrong_axis: bool) -> Result<PreparationReport> {
    check_inputs(spin, theta_offset)?;
    let ground = StateVector::basis(spin, -(spin.twice_j() as i32))?;
    // from θ = π down to θ = π/2 − θ_offset about the y axis
    let initial_pulse = Pulse {
        axis_azimuth: FRAC_PI_2,
        angle: -(FRAC_PI_2 + theta_offset),
    };
    let chi = FRAC_PI_2;
    let twisted = twist_evolve(&initial_pulse.apply(&ground), chi);
    let twisted_fit = fit_two_components(&twisted)?;
    let (v1, v2) = (bloch(&twisted_fit.label1), bloch(&twisted_fit.label2));
    let normal = v1.cross(&v2);
    let axis = if wrong_axis { v1 - v2 } else { normal };
    let pulse = Pulse {
        axis_azimuth: axis.y.atan2(axis.x),
        angle: FRAC_PI_2,
    };
    let schedule = TwistSchedule::new(chi, vec![pulse])?;
    let state = pulse.apply(&twisted);
    let final_fit = fit_two_components(&state)?;
    if final_fit.fidelity < MIN_PIPELINE_FIDELITY {
        return Err(Error::PipelineFidelityLow(final_fit.fidelity));
    }
    Ok(PreparationReport {
        state,
        initial_pulse,
        schedule,
        twisted_fit,
        final_fit,
    })
}

/// max over the relative phase χ of |⟨ψ| 𝒩(|a⟩ + e^{iχ}|b⟩)⟩|²; returns (fidelity, χ).
pub fn cat_fidelity_phase_optimized(psi: &StateVector, a: &CoherentLabel, b: &CoherentLabel) -> Result<(f64, f64)> {
    let spin = psi.spin;
    let psi = psi.normalized();
    let alpha = coherent_state(spin, a).inner(&psi)?;
    let beta = coherent_state(spin, b).inner(&psi)?;
    let s = coherent_overlap(spin, a, b);
    // |⟨cat_χ|ψ⟩|² = |α + e^{−iχ}β|² / (2 + 2 Re(e^{iχ}s))
    let f = |chi: f64| {
        let den = 2.0 + 2.0 * (Complex64::from_polar(1.0, chi) * s).re;
        if den <= 1e-14 {
            0.0
        } else {
            (alpha + Complex64::from_polar(1.0, -chi) * beta).norm_sqr() / den
        }
    };
    let n = 720;
    let (mut best_chi, mut best) = (0.0, f(0.0));
    for k in 1..n {
        let chi = 2.0 * PI * k as f64 / n as f64;
        let v = f(chi);
        if v > best {
            best = v;
            best_chi = chi;
        }
    }
    // golden-section refinement on the bracketing cell
    let h = 2.0 * PI / n as f64;
    let (mut lo, mut hi) = (best_chi - h, best_chi + h);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (m1, m2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let chi = 0.5 * (lo + hi);
    let value = f(chi).max(best);
    Ok((value.min(1.0), wrap_angle(chi)))
}
