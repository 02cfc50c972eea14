//! Truncated bivariate Taylor polynomials and finite-difference Taylor
//! coefficients of sampled functions.

use crate::{Error, Result};

/// Σ c_ab u^a v^b over a + b ≤ degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor2 {
    degree: usize,
    coeffs: Vec<f64>,
}

fn idx(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

impl Taylor2 {
    pub fn zeros(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; (degree + 1) * (degree + 2) / 2],
        }
    }

    pub fn constant(degree: usize, c: f64) -> Self {
        let mut t = Self::zeros(degree);
        t.coeffs[0] = c;
        t
    }

    /// c₀ + c_u·u + c_v·v.
    pub fn linear(degree: usize, c0: f64, cu: f64, cv: f64) -> Self {
        let mut t = Self::constant(degree, c0);
        if degree >= 1 {
            t.set(1, 0, cu);
            t.set(0, 1, cv);
        }
        t
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of u^a v^b (zero beyond the truncation degree).
    pub fn get(&self, a: usize, b: usize) -> f64 {
        if a + b > self.degree {
            0.0
        } else {
            self.coeffs[idx(a, b)]
        }
    }

    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        assert!(a + b <= self.degree, "u^{a} v^{b} beyond degree {}", self.degree);
        self.coeffs[idx(a, b)] = value;
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let degree = self.degree.min(other.degree);
        let mut out = Self::zeros(degree);
        for d in 0..=degree {
            for b in 0..=d {
                out.set(d - b, b, self.get(d - b, b) + other.get(d - b, b));
            }
        }
        out
    }

    /// Product truncated at the smaller of the two degrees.
    pub fn mul(&self, other: &Self) -> Self {
        let degree = self.degree.min(other.degree);
        let mut out = Self::zeros(degree);
        for d1 in 0..=degree {
            for b1 in 0..=d1 {
                let c1 = self.get(d1 - b1, b1);
                if c1 == 0.0 {
                    continue;
                }
                for d2 in 0..=(degree - d1) {
                    for b2 in 0..=d2 {
                        let c2 = other.get(d2 - b2, b2);
                        if c2 != 0.0 {
                            out.coeffs[idx(d1 - b1 + d2 - b2, b1 + b2)] += c1 * c2;
                        }
                    }
                }
            }
        }
        out
    }

    /// self^n, truncated.
    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(self.degree, 1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// ∂_u^du ∂_v^dv, lowering the degree accordingly.
    pub fn derivative(&self, du: usize, dv: usize) -> Self {
        let degree = self.degree.saturating_sub(du + dv);
        let mut out = Self::zeros(degree);
        if du + dv > self.degree {
            return out;
        }
        let falling = |n: usize, k: usize| -> f64 { (0..k).map(|i| (n - i) as f64).product() };
        for d in 0..=degree {
            for b in 0..=d {
                let a = d - b;
                out.set(
                    a,
                    b,
                    self.get(a + du, b + dv) * falling(a + du, du) * falling(b + dv, dv),
                );
            }
        }
        out
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let mut acc = 0.0;
        for d in 0..=self.degree {
            for b in 0..=d {
                acc += self.get(d - b, b) * u.powi((d - b) as i32) * v.powi(b as i32);
            }
        }
        acc
    }
}

/// Fornberg's recursion: `w[k][i]` is the weight of `x[i]` in the k-th
/// derivative at `z`, for k = 0..=m.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for jj in 0..i {
            let c3 = x[i] - x[jj];
            c2 *= c3;
            if jj == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][jj] = (c4 * c[k][jj] - k as f64 * c[k - 1][jj]) / c3;
            }
            c[0][jj] = c4 * c[0][jj] / c3;
        }
        c1 = c2;
    }
    c
}

/// Half-width of the central stencil (points −4..4).
const HALF: i32 = 4;
/// Accuracy order of the 9-point central stencil for derivative order 0..=4.
const STENCIL_ORDER: [i32; 5] = [100, 8, 8, 6, 6];

fn stencil_estimate(f: &dyn Fn(f64, f64) -> f64, h: f64, max_order: usize) -> Vec<Vec<f64>> {
    let pts: Vec<f64> = (-HALF..=HALF).map(f64::from).collect();
    let w = fornberg_weights(0.0, &pts, max_order);
    let n = pts.len();
    let mut samples = vec![vec![0.0; n]; n];
    for (iu, &pu) in pts.iter().enumerate() {
        for (iv, &pv) in pts.iter().enumerate() {
            samples[iu][iv] = f(pu * h, pv * h);
        }
    }
    let mut out = vec![vec![0.0; max_order + 1]; max_order + 1];
    for a in 0..=max_order {
        for b in 0..=(max_order - a) {
            let mut acc = 0.0;
            for iu in 0..n {
                if w[a][iu] == 0.0 {
                    continue;
                }
                for iv in 0..n {
                    acc += w[a][iu] * w[b][iv] * samples[iu][iv];
                }
            }
            out[a][b] = acc / h.powi((a + b) as i32);
        }
    }
    out
}

/// Taylor coefficients up to total order `max_order` (≤ 4) of `f(u, v)` at
/// the origin from 9-point tensor stencils with step `h` and `h/2`,
/// Richardson-combined. Returned polynomial has degree `degree` with zero
/// coefficients above `max_order`.
pub(crate) fn taylor_from_samples(
    f: &dyn Fn(f64, f64) -> f64,
    h: f64,
    max_order: usize,
    degree: usize,
) -> Result<Taylor2> {
    assert!(max_order <= 4, "stencil supports derivatives up to order 4");
    let coarse = stencil_estimate(f, h, max_order);
    let fine = stencil_estimate(f, h / 2.0, max_order);
    let mut out = Taylor2::zeros(degree);
    let fact = |n: usize| -> f64 { (1..=n).map(|i| i as f64).product() };
    for a in 0..=max_order {
        for b in 0..=(max_order - a) {
            let p = if a == 0 && b == 0 {
                0
            } else {
                STENCIL_ORDER[a].min(STENCIL_ORDER[b])
            };
            let (dc, df) = (coarse[a][b], fine[a][b]);
            let d = if p == 0 {
                df
            } else {
                (2f64.powi(p) * df - dc) / (2f64.powi(p) - 1.0)
            };
            let gap = (df - dc).abs();
            if !d.is_finite() || gap > 1e-4 * (1.0 + d.abs()) {
                return Err(Error::DerivativeInstability {
                    order_u: a,
                    order_v: b,
                    gap,
                });
            }
            if a + b <= degree {
                out.set(a, b, d / (fact(a) * fact(b)));
            }
        }
    }
    Ok(out)
}
