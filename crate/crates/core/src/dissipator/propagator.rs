//! Closed-form propagators D_mn(k, τ) of the k-block cascade.
//!
//! The exact propagator is the inverse Laplace transform
//!
//! D_mn(k,τ) = sqrt(Q_{m−k,n−k} Q_{m+k,n+k}) · L⁻¹[Π_{l=m}^{n} 1/(s + g_l − k²)](τ/j),
//!
//! evaluated by residues. Because g_l = g_{1−l}, two poles coincide whenever
//! both l and 1−l lie in [m, n]; those contribute (A + Bt)e^{−rt}. Residue
//! sums alternate in sign, so each value carries a rounding estimate and
//! falls back to uniformization of the cascade (a sum of non-negative terms)
//! when the estimate is too large.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{block_len, block_position, BlockDensity, BlockGenerator};
use crate::spin::{ln_factorial, SpinQuantum};
use crate::{Error, Result};

/// Absolute error estimate above which a residue sum is replaced.
const RESIDUE_TOLERANCE: f64 = 1e-13;
/// Largest Λ·Δt per uniformization chunk.
const CHUNK_EXPONENT: f64 = 20.0;
const POISSON_TAIL: f64 = 1e-18;

/// One tabulated propagator value (all indices in twice-units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorEntry {
    pub twice_j: u32,
    pub twice_k: i32,
    pub twice_m: i32,
    pub twice_n: i32,
    pub tau: f64,
    pub value: f64,
}

/// A residue sum together with its rounding estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueValue {
    pub value: f64,
    pub error_estimate: f64,
}

impl ResidueValue {
    fn acceptable(&self) -> bool {
        self.value.is_finite() && self.value >= 0.0 && self.error_estimate <= RESIDUE_TOLERANCE
    }
}

/// Short-time propagator value and whether (|m+n−1|/j)(n−m)τ < 0.1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortTimeValue {
    pub value: f64,
    pub valid: bool,
}

/// ln Q_{ab} = ln[(j+b)!(j−a)!/((j+a)!(j−b)!)], arguments in twice-units.
pub fn ln_q(spin: SpinQuantum, twice_a: i32, twice_b: i32) -> f64 {
    let tj = spin.twice_j() as i32;
    let f = |x: i32| ln_factorial((x / 2) as u32);
    f(tj + twice_b) + f(tj - twice_a) - f(tj + twice_a) - f(tj - twice_b)
}

fn ln_prefactor(spin: SpinQuantum, twice_k: i32, twice_m: i32, twice_n: i32) -> f64 {
    0.5 * (ln_q(spin, twice_m - twice_k, twice_n - twice_k) + ln_q(spin, twice_m + twice_k, twice_n + twice_k))
}

/// Validates indices and returns (position of m, position of n) in the block.
fn positions(spin: SpinQuantum, twice_k: i32, twice_m: i32, twice_n: i32) -> Result<(usize, usize)> {
    let bad = || {
        Error::IndexOutOfRange(format!(
            "(2m, 2n, 2k) = ({twice_m}, {twice_n}, {twice_k}) for 2j = {}",
            spin.twice_j()
        ))
    };
    if twice_k.abs() > spin.twice_j() as i32 {
        return Err(bad());
    }
    let im = block_position(spin, twice_k, twice_m).ok_or_else(bad)?;
    let i_n = block_position(spin, twice_k, twice_n).ok_or_else(bad)?;
    Ok((im, i_n))
}

#[derive(Debug, Clone)]
struct Pole {
    rate: f64,
    double: bool,
    ln_h: f64,
    sign: f64,
    /// Σ_b mult_b / (r_b − r_a) over the other poles.
    inv_sum: f64,
}

/// Partial-fraction data of Π 1/(s + r_l), grown one factor at a time.
#[derive(Debug, Clone, Default)]
struct ResidueSweep {
    poles: Vec<Pole>,
    index: HashMap<i64, usize>,
}

impl ResidueSweep {
    fn push(&mut self, key: i64, rate: f64) {
        if let Some(&a) = self.index.get(&key) {
            debug_assert!(!self.poles[a].double, "at most two poles coincide");
            let ra = self.poles[a].rate;
            self.poles[a].double = true;
            for (b, p) in self.poles.iter_mut().enumerate() {
                if b != a {
                    let d = ra - p.rate;
                    p.ln_h -= d.abs().ln();
                    p.sign *= d.signum();
                    p.inv_sum += 1.0 / d;
                }
            }
            return;
        }
        let mut ln_h = 0.0;
        let mut sign = 1.0;
        let mut inv_sum = 0.0;
        for p in self.poles.iter_mut() {
            let mult = if p.double { 2.0 } else { 1.0 };
            let d = p.rate - rate;
            ln_h -= mult * d.abs().ln();
            if !p.double {
                sign *= d.signum();
            }
            inv_sum += mult / d;
            p.ln_h -= (-d).abs().ln();
            p.sign *= (-d).signum();
            p.inv_sum += -1.0 / d;
        }
        self.index.insert(key, self.poles.len());
        self.poles.push(Pole {
            rate,
            double: false,
            ln_h,
            sign,
            inv_sum,
        });
    }

    /// e^{ln_pref} · Σ residues of e^{st}/Π(s + r_l) at time t.
    fn evaluate(&self, ln_pref: f64, t: f64) -> ResidueValue {
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut max_exp: f64 = 0.0;
        for p in &self.poles {
            let exponent = ln_pref + p.ln_h - p.rate * t;
            max_exp = max_exp.max(exponent.abs());
            let mut term = p.sign * exponent.exp();
            if p.double {
                term *= t - p.inv_sum;
            }
            sum += term;
            abs_sum += term.abs();
        }
        let n = self.poles.len() as f64;
        ResidueValue {
            value: sum,
            error_estimate: abs_sum * f64::EPSILON * (n + max_exp + 1.0),
        }
    }

    #[cfg(test)]
    fn double_count(&self) -> usize {
        self.poles.iter().filter(|p| p.double).count()
    }
}

/// D_mn(k, τ) by residues, with the rounding estimate; never falls back.
pub fn propagator_residue(
    spin: SpinQuantum,
    twice_k: i32,
    twice_m: i32,
    twice_n: i32,
    tau: f64,
) -> Result<ResidueValue> {
    let (im, i_n) = positions(spin, twice_k, twice_m, twice_n)?;
    if im < i_n {
        return Ok(ResidueValue {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    if tau == 0.0 {
        let value = if im == i_n { 1.0 } else { 0.0 };
        return Ok(ResidueValue {
            value,
            error_estimate: 0.0,
        });
    }
    let gen = BlockGenerator::new(spin, twice_k);
    let mut sweep = ResidueSweep::default();
    for i in i_n..=im {
        sweep.push(gen.rate_keys[i], gen.rates[i]);
    }
    Ok(sweep.evaluate(ln_prefactor(spin, twice_k, twice_m, twice_n), tau / spin.j()))
}

/// Full propagator matrix of one block by uniformization:
/// e^{Aτ} = e^{−Λτ} Σ_p (Λτ)^p/p! (1 + A/Λ)^p with 1 + A/Λ entrywise
/// non-negative and of unit 1-norm.
fn uniformized_block(gen: &BlockGenerator, tau: f64) -> DMatrix<f64> {
    let n = gen.len();
    let inv_j = 1.0 / gen.spin.j();
    let lambda = gen.rates.iter().cloned().fold(0.0, f64::max) * inv_j;
    if tau == 0.0 || lambda == 0.0 {
        return DMatrix::identity(n, n);
    }
    let chunks = (lambda * tau / CHUNK_EXPONENT).ceil().max(1.0) as usize;
    let dt = tau / chunks as f64;
    let x = lambda * dt;
    let diag: Vec<f64> = gen.rates.iter().map(|r| 1.0 - r * inv_j / lambda).collect();
    let sub: Vec<f64> = gen.couplings.iter().map(|c| c * inv_j / lambda).collect();

    let mut chunk = DMatrix::<f64>::zeros(n, n);
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut weight = (-x).exp();
    let mut p = 0usize;
    loop {
        chunk += &power * weight;
        p += 1;
        weight *= x / p as f64;
        if p as f64 > 2.0 * x && weight < POISSON_TAIL {
            break;
        }
        // power ← P·power, P lower bidiagonal
        for c in 0..n {
            for r in (c..n).rev() {
                let mut v = diag[r] * power[(r, c)];
                if r > c {
                    v += sub[r] * power[(r - 1, c)];
                }
                power[(r, c)] = v;
            }
        }
    }
    let mut out = chunk.clone();
    for _ in 1..chunks {
        out = &chunk * &out;
    }
    out
}

/// D_mn(k, τ) from uniformization of the cascade; positive and free of
/// cancellation.
pub fn propagator_cascade(spin: SpinQuantum, twice_k: i32, twice_m: i32, twice_n: i32, tau: f64) -> Result<f64> {
    let (im, i_n) = positions(spin, twice_k, twice_m, twice_n)?;
    if im < i_n {
        return Ok(0.0);
    }
    let full = BlockGenerator::new(spin, twice_k);
    let gen = BlockGenerator {
        spin,
        twice_k,
        rates: full.rates[i_n..=im].to_vec(),
        rate_keys: full.rate_keys[i_n..=im].to_vec(),
        couplings: full.couplings[i_n..=im].to_vec(),
    };
    let d = uniformized_block(&gen, tau);
    Ok(d[(im - i_n, 0)])
}

/// D_mn(k, τ): residues where well conditioned, the cascade otherwise.
/// Zero for n < m.
pub fn propagator_exact(spin: SpinQuantum, twice_k: i32, twice_m: i32, twice_n: i32, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau}")));
    }
    let r = propagator_residue(spin, twice_k, twice_m, twice_n, tau)?;
    if r.acceptable() {
        Ok(r.value)
    } else {
        propagator_cascade(spin, twice_k, twice_m, twice_n, tau)
    }
}

/// The full propagator of one k-block at fixed τ.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPropagator {
    pub spin: SpinQuantum,
    pub twice_k: i32,
    pub tau: f64,
    /// `matrix[(i_m, i_n)]` = D_mn, lower triangular.
    pub matrix: DMatrix<f64>,
    pub residue_entries: usize,
    pub cascade_entries: usize,
}

impl BlockPropagator {
    pub fn new(spin: SpinQuantum, twice_k: i32, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidInput(format!("tau = {tau}")));
        }
        if twice_k.abs() > spin.twice_j() as i32 {
            return Err(Error::IndexOutOfRange(format!("twice_k = {twice_k}")));
        }
        let gen = BlockGenerator::new(spin, twice_k);
        let n = gen.len();
        if tau == 0.0 {
            return Ok(Self {
                spin,
                twice_k,
                tau,
                matrix: DMatrix::identity(n, n),
                residue_entries: n * (n + 1) / 2,
                cascade_entries: 0,
            });
        }
        let t = tau / spin.j();
        let ln_c: Vec<f64> = gen
            .couplings
            .iter()
            .map(|c| if *c > 0.0 { c.ln() } else { 0.0 })
            .collect();
        let mut matrix = DMatrix::zeros(n, n);
        let mut pending: Vec<(usize, usize)> = Vec::new();
        for start in 0..n {
            let mut sweep = ResidueSweep::default();
            let mut ln_pref = 0.0;
            for end in start..n {
                if end > start {
                    ln_pref += ln_c[end];
                }
                sweep.push(gen.rate_keys[end], gen.rates[end]);
                let r = sweep.evaluate(ln_pref, t);
                if r.acceptable() {
                    matrix[(end, start)] = r.value;
                } else {
                    // longer chains only cancel harder
                    pending.extend((end..n).map(|e| (e, start)));
                    break;
                }
            }
        }
        let cascade_entries = pending.len();
        if !pending.is_empty() {
            let cascade = uniformized_block(&gen, tau);
            for (r, c) in pending {
                matrix[(r, c)] = cascade[(r, c)];
            }
        }
        Ok(Self {
            spin,
            twice_k,
            tau,
            matrix,
            residue_entries: n * (n + 1) / 2 - cascade_entries,
            cascade_entries,
        })
    }

    /// The same block propagated by uniformization alone.
    pub fn cascade_only(spin: SpinQuantum, twice_k: i32, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidInput(format!("tau = {tau}")));
        }
        let gen = BlockGenerator::new(spin, twice_k);
        let n = gen.len();
        Ok(Self {
            spin,
            twice_k,
            tau,
            matrix: uniformized_block(&gen, tau),
            residue_entries: 0,
            cascade_entries: n * (n + 1) / 2,
        })
    }

    pub fn apply(&self, block: &DVector<Complex64>) -> DVector<Complex64> {
        self.matrix.map(|x| Complex64::new(x, 0.0)) * block
    }
}

/// ρ_m(k,τ) = Σ_{n≥m} D_mn(k,τ) ρ_n(k,0), all blocks in parallel.
pub fn evolve_exact(rho0: &BlockDensity, tau: f64) -> Result<BlockDensity> {
    let spin = rho0.spin;
    let ks: Vec<i32> = rho0.twice_ks().collect();
    let blocks = ks
        .par_iter()
        .map(|&tk| {
            let b = rho0.block(tk);
            if b.iter().all(|z| z.norm() == 0.0) {
                return Ok(b.clone());
            }
            BlockPropagator::new(spin, tk, tau).map(|p| p.apply(b))
        })
        .collect::<Result<Vec<_>>>()?;
    BlockDensity::from_blocks(spin, blocks)
}

/// The short-time propagator
///
/// sqrt(Q_{m−k,n−k}Q_{m+k,n+k})/(n−m)! · (τ/j)^{n−m} · exp(−(τ/j)[j² − ((n+m−1)/2)²]),
///
/// evaluated as written, with the flag for (|m+n−1|/j)(n−m)τ < 0.1.
pub fn propagator_short_time(
    spin: SpinQuantum,
    twice_k: i32,
    twice_m: i32,
    twice_n: i32,
    tau: f64,
) -> Result<ShortTimeValue> {
    let (im, i_n) = positions(spin, twice_k, twice_m, twice_n)?;
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau}")));
    }
    if im < i_n {
        return Ok(ShortTimeValue {
            value: 0.0,
            valid: true,
        });
    }
    let steps = (im - i_n) as u32;
    let j = spin.j();
    let t = tau / j;
    let half_sum = (twice_n + twice_m - 2) as f64 / 4.0;
    let exponent = -t * (j * j - half_sum * half_sum);
    let value = if steps == 0 {
        exponent.exp()
    } else if tau == 0.0 {
        0.0
    } else {
        (ln_prefactor(spin, twice_k, twice_m, twice_n) - ln_factorial(steps) + steps as f64 * t.ln() + exponent).exp()
    };
    let bound = ((twice_m + twice_n - 2).abs() as f64 / 2.0) / j * steps as f64 * tau;
    Ok(ShortTimeValue {
        value,
        valid: bound < 0.1,
    })
}

/// Evolves every block with the short-time propagator.
pub fn evolve_short_time(rho0: &BlockDensity, tau: f64) -> Result<BlockDensity> {
    let spin = rho0.spin;
    let ks: Vec<i32> = rho0.twice_ks().collect();
    let blocks = ks
        .par_iter()
        .map(|&tk| {
            let b = rho0.block(tk);
            let n = b.len();
            let top = spin.twice_j() as i32 - tk.abs();
            let mut out = DVector::zeros(n);
            for im in 0..n {
                for i_n in 0..=im {
                    let d = propagator_short_time(spin, tk, top - 2 * im as i32, top - 2 * i_n as i32, tau)?;
                    out[im] += b[i_n] * d.value;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    BlockDensity::from_blocks(spin, blocks)
}

/// Every D_mn(k, τ) with n ≥ m, ordered by (k, m, n).
pub fn propagator_table(spin: SpinQuantum, tau: f64) -> Result<Vec<PropagatorEntry>> {
    let tj = spin.twice_j() as i32;
    let per_block = (-tj..=tj)
        .into_par_iter()
        .map(|tk| {
            let p = BlockPropagator::new(spin, tk, tau)?;
            let n = block_len(spin, tk);
            let top = tj - tk.abs();
            let mut rows = Vec::with_capacity(n * (n + 1) / 2);
            for im in (0..n).rev() {
                for i_n in (0..=im).rev() {
                    rows.push(PropagatorEntry {
                        twice_j: spin.twice_j(),
                        twice_k: tk,
                        twice_m: top - 2 * im as i32,
                        twice_n: top - 2 * i_n as i32,
                        tau,
                        value: p.matrix[(im, i_n)],
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_block.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipator::evolve_oracle;
    use crate::dissipator::tests::random_matrix;
    use proptest::prelude::*;

    fn spin(tj: u32) -> SpinQuantum {
        SpinQuantum::new(tj).unwrap()
    }

    #[test]
    fn prefactor_equals_product_of_couplings() {
        for tj in [3u32, 8, 13] {
            let s = spin(tj);
            for tk in -(tj as i32)..=(tj as i32) {
                let gen = BlockGenerator::new(s, tk);
                let top = tj as i32 - tk.abs();
                let mut acc = 0.0;
                for i in 1..gen.len() {
                    acc += gen.couplings[i].ln();
                    let q = ln_prefactor(s, tk, top - 2 * i as i32, top);
                    assert!((q - acc).abs() < 1e-12 * (1.0 + acc.abs()));
                }
            }
        }
    }

    #[test]
    fn polar_cat_single_pole() {
        for tj in [1u32, 2, 10, 40, 200] {
            for tau in [0.3, 1.0, 3.0] {
                let v = propagator_exact(spin(tj), tj as i32, 0, 0, tau).unwrap();
                assert!((v - (-tau).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn diagonal_entries_are_single_exponentials() {
        let s = spin(9);
        for tk in -9i32..=9 {
            let top = 9 - tk.abs();
            for i in 0..block_len(s, tk) {
                let tm = top - 2 * i as i32;
                let rate = s.ladder_g(tm) - (tk * tk) as f64 / 4.0;
                let v = propagator_exact(s, tk, tm, tm, 0.7).unwrap();
                assert!((v - (-rate * 0.7 / 4.5).exp()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_level_closed_form() {
        // D_{m,m+1} = c (e^{-r1 t} - e^{-r0 t})/(r0 - r1)
        let s = spin(6);
        let gen = BlockGenerator::new(s, 2);
        let t = 0.4 / 3.0;
        let expect =
            gen.couplings[1] * ((-gen.rates[1] * t).exp() - (-gen.rates[0] * t).exp()) / (gen.rates[0] - gen.rates[1]);
        let v = propagator_exact(s, 2, 2, 4, 0.4).unwrap();
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn confluent_poles_are_detected() {
        // k = 0, m = 0 and 1 - 0 = 1: g_0 = g_1
        let s = spin(6);
        let gen = BlockGenerator::new(s, 0);
        let mut sweep = ResidueSweep::default();
        for i in 0..gen.len() {
            sweep.push(gen.rate_keys[i], gen.rates[i]);
        }
        let doubles = sweep.double_count();
        // pairs (l, 1-l) with l in {1,2,3}: (1,0), (2,-1), (3,-2)
        assert_eq!(doubles, 3);
    }

    #[test]
    fn double_pole_against_limit() {
        // k = 0, chain m = 0 → n = 1: two coinciding poles give c t e^{-r t}
        let s = spin(4);
        let gen = BlockGenerator::new(s, 0);
        let i1 = block_position(s, 0, 2).unwrap();
        let i0 = block_position(s, 0, 0).unwrap();
        assert_eq!(gen.rate_keys[i0], gen.rate_keys[i1]);
        let t = 0.9 / 2.0;
        let expect = gen.couplings[i0] * t * (-gen.rates[i0] * t).exp();
        let v = propagator_exact(s, 0, 0, 2, 0.9).unwrap();
        assert!((v - expect).abs() < 1e-14, "{v} vs {expect}");
    }

    #[test]
    fn residue_and_cascade_agree() {
        for tj in 1..=16u32 {
            let s = spin(tj);
            for tk in -(tj as i32)..=(tj as i32) {
                let top = tj as i32 - tk.abs();
                for tau in [0.05, 0.5, 2.0] {
                    let cascade = BlockPropagator::cascade_only(s, tk, tau).unwrap();
                    let n = block_len(s, tk);
                    for im in 0..n {
                        for i_n in 0..=im {
                            let r = propagator_residue(s, tk, top - 2 * im as i32, top - 2 * i_n as i32, tau).unwrap();
                            if r.acceptable() {
                                let c = cascade.matrix[(im, i_n)];
                                assert!(
                                    (r.value - c).abs() < 1e-10,
                                    "2j={tj} 2k={tk} ({im},{i_n}) tau={tau}: {} vs {c}",
                                    r.value
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_time_and_lower_triangle() {
        let s = spin(7);
        assert_eq!(propagator_exact(s, 1, 2, 2, 0.0).unwrap(), 1.0);
        assert_eq!(propagator_exact(s, 1, 2, 4, 0.0).unwrap(), 0.0);
        assert_eq!(propagator_exact(s, 1, 4, 2, 1.0).unwrap(), 0.0);
        assert!(propagator_exact(s, 1, 3, 3, 1.0).is_err());
        assert!(propagator_exact(s, 9, 0, 0, 1.0).is_err());
    }

    #[test]
    fn exact_matches_oracle() {
        for tj in [5u32, 8, 16] {
            let s = spin(tj);
            let rho = BlockDensity::from_dense(&random_matrix(s, 77 + tj as u64, true));
            let e = evolve_exact(&rho, 0.7).unwrap();
            let o = evolve_oracle(&rho, 0.7, 1e-12).unwrap();
            assert!(e.max_abs_diff(&o) < 1e-8);
        }
    }

    #[test]
    fn large_block_stays_accurate() {
        let s = spin(120);
        for tau in [1e-3, 0.05, 1.0] {
            let p = BlockPropagator::new(s, 0, tau).unwrap();
            let c = BlockPropagator::cascade_only(s, 0, tau).unwrap();
            let diff = (&p.matrix - &c.matrix).abs().max();
            assert!(diff < 1e-10, "tau {tau}: {diff}");
            // k = 0 column sums equal 1 (trace preservation)
            for col in 0..p.matrix.ncols() {
                let sum: f64 = p.matrix.column(col).sum();
                assert!((sum - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn short_time_examples() {
        let s = spin(20);
        let v = propagator_short_time(s, 0, 0, 0, 0.01).unwrap();
        assert!((v.value - (-0.09975f64).exp()).abs() < 1e-15);
        assert!((v.value - 0.905064).abs() < 1e-6);
        assert!(v.valid);
        assert_eq!(propagator_short_time(s, 4, 2, 2, 0.0).unwrap().value, 1.0);
        // j = 10, k = 0, m = 0, n = 2
        let st = propagator_short_time(s, 0, 0, 4, 0.05).unwrap();
        let ex = propagator_exact(s, 0, 0, 4, 0.05).unwrap();
        assert!(st.valid);
        assert!((ex - 0.0859631).abs() < 1e-6, "{ex}");
        assert!((st.value - 0.0901824).abs() < 1e-6, "{}", st.value);
        let rel = (st.value - ex).abs() / ex;
        assert!((rel - 0.0491).abs() < 1e-3, "{rel}");
    }

    #[test]
    fn short_time_validity_flag() {
        let s = spin(20);
        assert!(!propagator_short_time(s, 0, -10, 10, 0.5).unwrap().valid);
        assert!(propagator_short_time(s, 0, 0, 2, 0.01).unwrap().valid);
    }

    #[test]
    fn table_is_complete_and_ordered() {
        let s = spin(3);
        let t = propagator_table(s, 0.2).unwrap();
        let count: usize = (-3..=3).map(|k| block_len(s, k)).map(|n| n * (n + 1) / 2).sum();
        assert_eq!(t.len(), count);
        assert!(t
            .windows(2)
            .all(|w| (w[0].twice_k, w[0].twice_m, w[0].twice_n) < (w[1].twice_k, w[1].twice_m, w[1].twice_n)));
        assert!(t.iter().all(|e| e.value >= 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn propagator_is_nonnegative_and_bounded(tj in 1u32..=30, tk_off in 0u32..61, a in 0usize..31, b in 0usize..31, tau in 0.0f64..4.0) {
            let s = spin(tj);
            let tk = (tk_off % (2 * tj + 1)) as i32 - tj as i32;
            let n = block_len(s, tk);
            let (im, i_n) = (a % n, b % n);
            let top = tj as i32 - tk.abs();
            let v = propagator_exact(s, tk, top - 2 * im as i32, top - 2 * i_n as i32, tau).unwrap();
            if im < i_n {
                prop_assert_eq!(v, 0.0);
            } else {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
