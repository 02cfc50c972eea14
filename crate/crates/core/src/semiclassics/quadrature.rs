//! Adaptive Gauss–Kronrod (7/15) quadrature and the nested 2D integral of
//! f·e^{jS₀} used as ground truth for the Laplace expansion.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::Mutex;

use super::action::{check_gammas, f_deriv, saddle_point};
use super::laplace::ScalarField;
use super::ReducedPoint;
use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
/// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7K15 over the consecutive intervals of `breakpoints`
/// (sorted, at least two). Returns (value, error estimate); stops when the
/// error is below max(abs_tol, rel_tol·|value|).
pub fn gauss_kronrod(f: &dyn Fn(f64) -> f64, breakpoints: &[f64], rel_tol: f64, abs_tol: f64) -> Result<(f64, f64)> {
    let (value, error, converged) = adaptive(f, breakpoints, rel_tol, abs_tol)?;
    if !converged {
        return Err(Error::QuadratureFailure(format!(
            "no convergence after {MAX_INTERVALS} intervals: value {value:e}, error {error:e}"
        )));
    }
    Ok((value, error))
}

/// As [`gauss_kronrod`], but an interval budget running out is reported
/// through the flag rather than as an error.
fn adaptive(f: &dyn Fn(f64) -> f64, breakpoints: &[f64], rel_tol: f64, abs_tol: f64) -> Result<(f64, f64, bool)> {
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "breakpoints must be strictly increasing, at least two".into(),
        ));
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in breakpoints.windows(2) {
        let (value, error) = gk15(f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    while err > abs_tol.max(rel_tol * total.abs()) {
        if !total.is_finite() {
            return Err(Error::QuadratureFailure("non-finite integrand".into()));
        }
        if heap.len() >= MAX_INTERVALS {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the accumulated update rounding
    let (total, err) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok((total, err, err <= abs_tol.max(rel_tol * total.abs())))
}

/// I[f] = exp(log_scale)·scaled, with scaled = O(width of the peak).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub scaled: f64,
    pub log_scale: f64,
    pub error: f64,
}

impl QuadratureResult {
    pub fn value(&self) -> f64 {
        self.scaled * self.log_scale.exp()
    }
}

fn peak_breaks(centre: f64, width: f64) -> Vec<f64> {
    let mut pts = vec![0.0, PI];
    for k in [-12.0, -6.0, -3.0, -1.5, 0.0, 1.5, 3.0, 6.0, 12.0] {
        let t = centre + k * width;
        if t > 0.0 && t < PI {
            pts.push(t);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// ∫∫ f e^{jS₀} dν dη over |ν±η| ≤ 1. In x = ν+η = cos θ₁, y = ν−η = cos θ₂
/// the domain is a square, S₀ separates, and the Jacobian ½ sin θ₁ sin θ₂
/// cancels the 1/w edge singularities of the a- and b-coefficients.
/// Relative tolerance 1e−8.
pub fn quadrature_oracle(f: &dyn ScalarField, gamma1: f64, gamma2: f64, j: f64) -> Result<QuadratureResult> {
    check_gammas(gamma1, gamma2)?;
    if !(j >= 4.0) || !j.is_finite() {
        return Err(Error::InvalidInput(format!("quadrature needs j >= 4, got {j}")));
    }
    let saddle = saddle_point(gamma1, gamma2)?;
    let (x0, y0) = saddle.point.xy();
    let (l1, l2) = (gamma1.ln(), gamma2.ln());
    let hx = |x: f64| f_deriv(0, x) - x * l1 - (f_deriv(0, x0) - x0 * l1);
    let hy = |y: f64| f_deriv(0, y) - y * l2 - (f_deriv(0, y0) - y0 * l2);
    // Gaussian widths in x, y and in the angles
    let wx = 1.0 / (j * (-f_deriv(2, x0))).sqrt();
    let wy = 1.0 / (j * (-f_deriv(2, y0))).sqrt();
    let (t1, t2) = (x0.acos(), y0.acos());
    let gauss_scale = PI * wx * wy;
    let abs_tol = 1e-11 * gauss_scale;
    let (b1, b2) = (peak_breaks(t1, wx / t1.sin()), peak_breaks(t2, wy / t2.sin()));
    let inner_failure = Mutex::new(None);
    let outer = |a: f64| -> f64 {
        let (x, sx) = (a.cos(), a.sin());
        let ex = (j * hx(x)).exp() * sx;
        if ex == 0.0 {
            return 0.0;
        }
        let g = |b: f64| {
            let y = b.cos();
            f.value(ReducedPoint::from_xy(x, y)) * (j * hy(y)).exp() * b.sin()
        };
        // Within a distance a of an edge, rounding in f (through 1 − x² and
        // 1 − xy) can stall the inner refinement. That layer has outer measure
        // ~a, so the stall is harmless when err·ex·a is negligible.
        let layer = a.min(PI - a);
        match adaptive(&g, &b2, 1e-10, 1e-2 * abs_tol / ex) {
            Ok((v, err, converged)) if converged || err * ex * layer <= 1e-2 * abs_tol => v * ex,
            Ok((v, err, _)) => {
                *inner_failure.lock().expect("poisoned") = Some(Error::QuadratureFailure(format!(
                    "inner integral at theta1 = {a}: value {v:e}, error {err:e}"
                )));
                f64::NAN
            }
            Err(e) => {
                *inner_failure.lock().expect("poisoned") = Some(e);
                f64::NAN
            }
        }
    };
    let result = gauss_kronrod(&outer, &b1, 1e-8, abs_tol);
    if let Some(e) = inner_failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let (value, error) = result?;
    Ok(QuadratureResult {
        scaled: 0.5 * value,
        log_scale: j * saddle.s0_value,
        error: 0.5 * error,
    })
}
