//! Reference integrator: Bulirsch–Stoer (modified midpoint plus Richardson
//! extrapolation in h²) with step control, applied block by block.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{BlockDensity, BlockGenerator};
use crate::{Error, Result};

const SUBSTEPS: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];
const MIN_STEP_FRACTION: f64 = 1e-14;

fn max_abs(y: &[Complex64]) -> f64 {
    y.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn modified_midpoint(gen: &BlockGenerator, y: &[Complex64], h: f64, n: usize) -> Vec<Complex64> {
    let len = y.len();
    let sub = h / n as f64;
    let mut f = vec![Complex64::new(0.0, 0.0); len];
    gen.apply(y, &mut f);
    let mut prev = y.to_vec();
    let mut cur: Vec<Complex64> = y.iter().zip(&f).map(|(a, d)| a + d * sub).collect();
    for _ in 1..n {
        gen.apply(&cur, &mut f);
        let next: Vec<Complex64> = prev.iter().zip(&f).map(|(a, d)| a + d * (2.0 * sub)).collect();
        prev = std::mem::replace(&mut cur, next);
    }
    gen.apply(&cur, &mut f);
    (0..len).map(|i| 0.5 * (cur[i] + prev[i] + f[i] * sub)).collect()
}

/// Integrates one block from 0 to `tau` with local relative tolerance `tol`.
pub fn integrate_block(gen: &BlockGenerator, y0: &[Complex64], tau: f64, tol: f64) -> Result<Vec<Complex64>> {
    if !(tau >= 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau}, tol = {tol}")));
    }
    let mut y = y0.to_vec();
    if tau == 0.0 || max_abs(&y) == 0.0 {
        return Ok(y);
    }
    let norm = gen.norm_bound();
    let mut step = if norm > 0.0 { (2.0 / norm).min(tau) } else { tau };
    let min_step = tau * MIN_STEP_FRACTION;
    let mut t = 0.0;
    let mut table: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(SUBSTEPS.len());
    while t < tau {
        let h = step.min(tau - t);
        let scale = max_abs(&y).max(f64::MIN_POSITIVE);
        table.clear();
        let mut accepted = None;
        for (k, &n) in SUBSTEPS.iter().enumerate() {
            let mut row = vec![modified_midpoint(gen, &y, h, n)];
            for l in 1..=k {
                let ratio = (n as f64 / SUBSTEPS[k - l] as f64).powi(2);
                let ext: Vec<Complex64> = row[l - 1]
                    .iter()
                    .zip(&table[k - 1][l - 1])
                    .map(|(a, b)| a + (a - b) / (ratio - 1.0))
                    .collect();
                row.push(ext);
            }
            if k >= 2 {
                let err = row[k]
                    .iter()
                    .zip(&row[k - 1])
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                if err <= tol * scale {
                    accepted = Some((row.pop().expect("row has k+1 entries"), k));
                    break;
                }
            }
            table.push(row);
        }
        match accepted {
            Some((next, k)) => {
                y = next;
                t += h;
                if k <= 3 {
                    step = h * 2.0;
                } else if k == SUBSTEPS.len() - 1 {
                    step = h * 0.7;
                } else {
                    step = step.max(h);
                }
            }
            None => {
                step = h / 2.0;
                if step < min_step {
                    return Err(Error::StepUnderflow { tau: t, step });
                }
            }
        }
    }
    Ok(y)
}

/// Evolves every k-block to `tau` by numerical integration; the ground truth
/// against which the closed-form engines are tested.
pub fn evolve_oracle(rho0: &BlockDensity, tau: f64, tol: f64) -> Result<BlockDensity> {
    let spin = rho0.spin;
    let ks: Vec<i32> = rho0.twice_ks().collect();
    let blocks = ks
        .par_iter()
        .map(|&tk| {
            let gen = BlockGenerator::new(spin, tk);
            integrate_block(&gen, rho0.block(tk).as_slice(), tau, tol).map(DVector::from_vec)
        })
        .collect::<Result<Vec<_>>>()?;
    BlockDensity::from_blocks(spin, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipator::liouvillian_apply;
    use crate::spin::{DensityMatrix, SpinQuantum, StateVector};

    fn polar(tj: u32) -> BlockDensity {
        let s = SpinQuantum::new(tj).unwrap();
        let a = StateVector::basis(s, tj as i32).unwrap();
        let b = StateVector::basis(s, -(tj as i32)).unwrap();
        BlockDensity::from_dense(&DensityMatrix::outer(&a, &b).unwrap())
    }

    #[test]
    fn polar_cat_follows_exp_minus_tau() {
        for tj in [2u32, 7, 20, 40] {
            let rho = polar(tj);
            for tau in [0.1f64, 1.0, 3.0] {
                let out = evolve_oracle(&rho, tau, 1e-12).unwrap();
                let v = out.get(0, tj as i32).unwrap();
                assert!((v.re - (-tau).exp()).abs() < 1e-10, "twice_j {tj} tau {tau}: {v}");
            }
        }
    }

    #[test]
    fn trace_preserved_for_hermitian_input() {
        let s = SpinQuantum::new(9).unwrap();
        let rho = BlockDensity::from_dense(&crate::dissipator::tests::random_matrix(s, 3, true));
        let out = evolve_oracle(&rho, 0.8, 1e-12).unwrap();
        assert!((out.trace() - rho.trace()).norm() < 1e-10);
    }

    #[test]
    fn long_times_reach_the_dark_state() {
        let s = SpinQuantum::new(8).unwrap();
        let rho = BlockDensity::from_dense(&crate::dissipator::tests::random_matrix(s, 5, true));
        let out = evolve_oracle(&rho, 50.0, 1e-12).unwrap().to_dense();
        let d = s.dim();
        for a in 0..d {
            for c in 0..d {
                let v = out.entries[(a, c)];
                if a == d - 1 && c == d - 1 {
                    assert!((v.re - 1.0).abs() < 1e-10);
                } else if a == c {
                    assert!(v.norm() < 1e-10, "population ({a},{a}) = {v}");
                } else {
                    assert!(v.norm() < 1e-12, "coherence ({a},{c}) = {v}");
                }
            }
        }
    }

    #[test]
    fn matches_small_step_derivative() {
        let s = SpinQuantum::new(6).unwrap();
        let rho = BlockDensity::from_dense(&crate::dissipator::tests::random_matrix(s, 8, false));
        let h = 1e-4;
        let fwd = evolve_oracle(&rho, h, 1e-13).unwrap();
        let deriv = liouvillian_apply(&rho);
        for ((_, a), ((_, b), (_, d))) in fwd.blocks().zip(rho.blocks().zip(deriv.blocks())) {
            for i in 0..a.len() {
                let fd = (a[i] - b[i]) / h;
                assert!((fd - d[i]).norm() < 1e-2 * (1.0 + d[i].norm()));
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let gen = BlockGenerator::new(SpinQuantum::new(2).unwrap(), 0);
        let y = vec![Complex64::new(1.0, 0.0); 3];
        assert!(integrate_block(&gen, &y, -1.0, 1e-10).is_err());
        assert!(integrate_block(&gen, &y, 1.0, 0.0).is_err());
    }
}
