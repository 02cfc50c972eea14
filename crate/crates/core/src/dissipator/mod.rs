//! The superradiance master equation
//!
//! dρ/dτ = (1/2j)(2J₋ρJ₊ − J₊J₋ρ − ρJ₊J₋)
//!
//! in the conserved-k block form. A matrix element ρ_{m₁m₂} is relabelled by
//! the mean m = (m₁+m₂)/2 and relative k = (m₁−m₂)/2 quantum numbers; k is
//! conserved and each block obeys a one-directional cascade
//!
//! dρ_m(k)/dτ = (1/j)[c_{m+1} ρ_{m+1}(k) − r_m ρ_m(k)],
//!
//! with r_m = g_m − k² and c_{m+1} = sqrt(g_{m+k+1} g_{m−k+1}).

mod oracle;
mod propagator;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::spin::{jminus_matrix, DensityMatrix, SpinQuantum};
use crate::{Error, Result};

pub use oracle::{evolve_oracle, integrate_block};
pub use propagator::{
    evolve_exact, evolve_short_time, ln_q, propagator_cascade, propagator_exact, propagator_residue,
    propagator_short_time, propagator_table, BlockPropagator, PropagatorEntry, ResidueValue, ShortTimeValue,
};

/// Density matrix stored as decoupled k-blocks.
///
/// Block `twice_k` holds ρ_m(k) for twice_m = (2j − |2k|), (2j − |2k|) − 2,
/// …, −(2j − |2k|); element `i` carries twice_m = (2j − |2k|) − 2i.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensity {
    pub spin: SpinQuantum,
    blocks: Vec<DVector<Complex64>>,
}

impl BlockDensity {
    pub fn zeros(spin: SpinQuantum) -> Self {
        let tj = spin.twice_j() as i32;
        let blocks = (-tj..=tj).map(|tk| DVector::zeros(block_len(spin, tk))).collect();
        Self { spin, blocks }
    }

    pub fn from_dense(rho: &DensityMatrix) -> Self {
        let mut out = Self::zeros(rho.spin);
        let dim = rho.spin.dim();
        for a in 0..dim {
            for c in 0..dim {
                let tk = c as i32 - a as i32;
                let i = a.min(c);
                out.block_mut(tk)[i] = rho.entries[(a, c)];
            }
        }
        out
    }

    pub fn to_dense(&self) -> DensityMatrix {
        let dim = self.spin.dim();
        let entries = DMatrix::from_fn(dim, dim, |a, c| {
            let tk = c as i32 - a as i32;
            self.block(tk)[a.min(c)]
        });
        DensityMatrix {
            spin: self.spin,
            entries,
        }
    }

    /// Valid twice_k values, ascending.
    pub fn twice_ks(&self) -> impl Iterator<Item = i32> {
        let tj = self.spin.twice_j() as i32;
        -tj..=tj
    }

    pub fn block(&self, twice_k: i32) -> &DVector<Complex64> {
        &self.blocks[self.block_index(twice_k)]
    }

    pub fn block_mut(&mut self, twice_k: i32) -> &mut DVector<Complex64> {
        let b = self.block_index(twice_k);
        &mut self.blocks[b]
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, &DVector<Complex64>)> {
        self.twice_ks().zip(self.blocks.iter())
    }

    /// Rebuilds from per-block vectors listed in ascending twice_k order.
    pub fn from_blocks(spin: SpinQuantum, blocks: Vec<DVector<Complex64>>) -> Result<Self> {
        let tj = spin.twice_j() as i32;
        if blocks.len() != spin.twice_j() as usize * 2 + 1 {
            return Err(Error::DimensionMismatch(blocks.len(), spin.twice_j() as usize * 2 + 1));
        }
        for (tk, b) in (-tj..=tj).zip(blocks.iter()) {
            if b.len() != block_len(spin, tk) {
                return Err(Error::DimensionMismatch(b.len(), block_len(spin, tk)));
            }
        }
        Ok(Self { spin, blocks })
    }

    /// ρ_m(k) by twice-indices.
    pub fn get(&self, twice_m: i32, twice_k: i32) -> Option<Complex64> {
        let i = block_position(self.spin, twice_k, twice_m)?;
        Some(self.block(twice_k)[i])
    }

    /// Σ_m ρ_m(k=0), the trace.
    pub fn trace(&self) -> Complex64 {
        self.block(0).sum()
    }

    pub fn max_abs_diff(&self, other: &BlockDensity) -> f64 {
        self.blocks
            .iter()
            .zip(other.blocks.iter())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    fn block_index(&self, twice_k: i32) -> usize {
        let tj = self.spin.twice_j() as i32;
        assert!(twice_k.abs() <= tj, "twice_k = {twice_k} outside block range");
        (twice_k + tj) as usize
    }
}

/// Number of m values in block k: 2j − |2k| + 1.
pub fn block_len(spin: SpinQuantum, twice_k: i32) -> usize {
    (spin.twice_j() as i32 - twice_k.abs() + 1).max(0) as usize
}

/// Position of twice_m inside block twice_k.
pub fn block_position(spin: SpinQuantum, twice_k: i32, twice_m: i32) -> Option<usize> {
    let top = spin.twice_j() as i32 - twice_k.abs();
    if top < 0 || twice_m.abs() > top || (top - twice_m) % 2 != 0 {
        return None;
    }
    Some(((top - twice_m) / 2) as usize)
}

/// The bidiagonal cascade of one k-block, in the time variable t = τ/j.
///
/// Element i decays at `rates[i]` and is fed from element i−1 with
/// `couplings[i]` (`couplings[0] = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGenerator {
    pub spin: SpinQuantum,
    pub twice_k: i32,
    pub rates: Vec<f64>,
    /// 4·r_i as exact integers; equal keys mark coinciding poles.
    pub rate_keys: Vec<i64>,
    pub couplings: Vec<f64>,
}

impl BlockGenerator {
    pub fn new(spin: SpinQuantum, twice_k: i32) -> Self {
        let len = block_len(spin, twice_k);
        let top = spin.twice_j() as i32 - twice_k.abs();
        let tk2 = (twice_k as i64) * (twice_k as i64);
        let mut rates = Vec::with_capacity(len);
        let mut rate_keys = Vec::with_capacity(len);
        let mut couplings = Vec::with_capacity(len);
        for i in 0..len {
            let tm = top - 2 * i as i32;
            let key = spin.ladder_g_quarters(tm) - tk2;
            rate_keys.push(key);
            rates.push(key as f64 / 4.0);
            couplings.push(if i == 0 {
                0.0
            } else {
                (spin.ladder_g(tm + twice_k + 2) * spin.ladder_g(tm - twice_k + 2)).sqrt()
            });
        }
        Self {
            spin,
            twice_k,
            rates,
            rate_keys,
            couplings,
        }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn twice_m(&self, i: usize) -> i32 {
        self.spin.twice_j() as i32 - self.twice_k.abs() - 2 * i as i32
    }

    /// out = A·y with A the generator in τ units.
    pub fn apply(&self, y: &[Complex64], out: &mut [Complex64]) {
        let inv_j = 1.0 / self.spin.j();
        for i in 0..y.len() {
            let mut v = -self.rates[i] * y[i];
            if i > 0 {
                v += self.couplings[i] * y[i - 1];
            }
            out[i] = v * inv_j;
        }
    }

    /// max_i (r_i + c_{i+1}) / j, the induced 1-norm of the generator.
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| self.rates[i] + if i + 1 < n { self.couplings[i + 1] } else { 0.0 })
            .fold(0.0, f64::max)
            / self.spin.j()
    }
}

/// Applies the generator blockwise.
pub fn liouvillian_apply(rho: &BlockDensity) -> BlockDensity {
    let spin = rho.spin;
    let blocks = rho
        .blocks()
        .map(|(tk, b)| {
            let gen = BlockGenerator::new(spin, tk);
            let mut out = vec![Complex64::new(0.0, 0.0); b.len()];
            gen.apply(b.as_slice(), &mut out);
            DVector::from_vec(out)
        })
        .collect();
    BlockDensity { spin, blocks }
}

/// Dense-matrix evaluation of (1/2j)(2J₋ρJ₊ − J₊J₋ρ − ρJ₊J₋).
pub fn liouvillian_dense(rho: &DensityMatrix) -> DensityMatrix {
    let jm = jminus_matrix(rho.spin);
    let jp = jm.adjoint();
    let jpjm = &jp * &jm;
    let two = Complex64::new(2.0, 0.0);
    let entries = (&jm * &rho.entries * &jp * two - &jpjm * &rho.entries - &rho.entries * &jpjm)
        * Complex64::new(1.0 / rho.spin.twice_j() as f64, 0.0);
    DensityMatrix {
        spin: rho.spin,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{cat_state, coherent_state, CoherentLabel, StateVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spin(tj: u32) -> SpinQuantum {
        SpinQuantum::new(tj).unwrap()
    }

    pub(crate) fn random_matrix(s: SpinQuantum, seed: u64, hermitian: bool) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = s.dim();
        let mut m = DMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        if hermitian {
            m = &m * m.adjoint();
            let tr = m.trace();
            m /= tr;
        }
        DensityMatrix::new(s, m).unwrap()
    }

    #[test]
    fn block_round_trip() {
        for tj in [1u32, 2, 5, 8] {
            let rho = random_matrix(spin(tj), tj as u64, false);
            let blocks = BlockDensity::from_dense(&rho);
            assert_eq!(blocks.to_dense(), rho);
            let total: usize = blocks.blocks().map(|(_, b)| b.len()).sum();
            assert_eq!(total, spin(tj).dim().pow(2));
        }
    }

    #[test]
    fn block_coordinates() {
        let s = spin(4);
        let a = StateVector::basis(s, 4).unwrap();
        let b = StateVector::basis(s, -4).unwrap();
        let rho = BlockDensity::from_dense(&DensityMatrix::outer(&a, &b).unwrap());
        // m1 = 2, m2 = -2: m = 0, k = 2
        assert_eq!(rho.get(0, 4), Some(Complex64::new(1.0, 0.0)));
        assert_eq!(block_len(s, 4), 1);
        assert_eq!(block_position(s, 0, 3), None);
        assert_eq!(block_position(s, 1, 3), Some(0));
    }

    #[test]
    fn ground_state_is_stationary() {
        let s = spin(6);
        let g = StateVector::basis(s, -6).unwrap();
        let rho = BlockDensity::from_dense(&DensityMatrix::pure(&g));
        let d = liouvillian_apply(&rho);
        assert!(d.blocks().all(|(_, b)| b.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn polar_cat_decays_at_unit_rate() {
        for tj in [1u32, 2, 7, 20] {
            let s = spin(tj);
            let a = StateVector::basis(s, tj as i32).unwrap();
            let b = StateVector::basis(s, -(tj as i32)).unwrap();
            let rho = BlockDensity::from_dense(&DensityMatrix::outer(&a, &b).unwrap());
            let d = liouvillian_apply(&rho);
            assert_eq!(d.get(0, tj as i32), Some(Complex64::new(-1.0, 0.0)));
        }
    }

    #[test]
    fn spin_one_top_state() {
        let s = spin(2);
        let top = StateVector::basis(s, 2).unwrap();
        let d = liouvillian_apply(&BlockDensity::from_dense(&DensityMatrix::pure(&top))).to_dense();
        assert_eq!(d.entry(2, 2), Some(Complex64::new(-2.0, 0.0)));
        assert_eq!(d.entry(0, 0), Some(Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn rate_keys_are_exact() {
        let gen = BlockGenerator::new(spin(9), 3);
        for (i, (&r, &key)) in gen.rates.iter().zip(gen.rate_keys.iter()).enumerate() {
            let m = gen.twice_m(i) as f64 / 2.0;
            let k = 1.5;
            let g = |l: f64| 4.5 * 5.5 - l * (l - 1.0);
            assert_eq!(r, (g(m + k) + g(m - k)) / 2.0);
            assert_eq!(key as f64, 4.0 * r);
        }
    }

    #[test]
    fn dense_and_block_forms_agree() {
        for tj in 1..=16u32 {
            let rho = random_matrix(spin(tj), 100 + tj as u64, false);
            let dense = BlockDensity::from_dense(&liouvillian_dense(&rho));
            let block = liouvillian_apply(&BlockDensity::from_dense(&rho));
            let scale = dense
                .blocks()
                .flat_map(|(_, b)| b.iter().map(|z| z.norm()))
                .fold(1.0, f64::max);
            assert!(dense.max_abs_diff(&block) < 1e-12 * scale, "twice_j = {tj}");
        }
    }

    #[test]
    fn trace_of_generator_vanishes() {
        let s = spin(11);
        let psi = cat_state(
            s,
            &CoherentLabel::from_angles(0.4, 0.0).unwrap(),
            &CoherentLabel::from_angles(2.0, 1.0).unwrap(),
        )
        .unwrap();
        let d = liouvillian_apply(&BlockDensity::from_dense(&DensityMatrix::pure(&psi)));
        assert!(d.trace().norm() < 1e-12);
        let c = coherent_state(s, &CoherentLabel::north());
        assert!(
            liouvillian_apply(&BlockDensity::from_dense(&DensityMatrix::pure(&c)))
                .trace()
                .norm()
                < 1e-12
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn generator_never_mixes_blocks(tj in 1u32..=8, tk_off in 0i32..17, seed in 0u64..1000) {
            let s = spin(tj);
            let tk = tk_off % (2 * tj as i32 + 1) - tj as i32;
            let mut rho = BlockDensity::zeros(s);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for z in rho.block_mut(tk).iter_mut() {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let d = liouvillian_apply(&rho);
            for (k, b) in d.blocks() {
                if k != tk {
                    prop_assert!(b.iter().all(|z| z.norm() == 0.0));
                }
            }
            let dense = BlockDensity::from_dense(&liouvillian_dense(&rho.to_dense()));
            prop_assert!(dense.max_abs_diff(&d) < 1e-12 * (1.0 + tj as f64));
        }
    }
}
