//! Spin-j bookkeeping: basis states, coherent and cat states, ladder
//! operators and rotations.
//!
//! Magnetic quantum numbers are carried in twice-units (`twice_m = 2m`) so
//! integer and half-integer spins share exact integer index arithmetic.
//! Vectors are stored top-down: index `i` holds `m = j - i`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// The representation index j, stored as the integer 2j.
///
/// 2j also equals the number N of two-level atoms whose collective Bloch
/// vector forms the spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinQuantum {
    twice_j: u32,
}

impl SpinQuantum {
    pub fn new(twice_j: u32) -> Result<Self> {
        if twice_j == 0 {
            return Err(Error::InvalidSpin(0));
        }
        Ok(Self { twice_j })
    }

    /// Builds a spin from j itself; j must be a positive multiple of 1/2.
    pub fn from_j(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 1.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "j = {j} is not a positive multiple of 1/2"
            )));
        }
        Self::new(twice.round() as u32)
    }

    pub fn twice_j(self) -> u32 {
        self.twice_j
    }

    pub fn j(self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    pub fn atom_count(self) -> u32 {
        self.twice_j
    }

    pub fn is_integer(self) -> bool {
        self.twice_j.is_multiple_of(2)
    }

    /// 2m of the basis state stored at `index`.
    pub fn twice_m(self, index: usize) -> i32 {
        self.twice_j as i32 - 2 * index as i32
    }

    /// Storage index of |j m⟩, or `None` if 2m is not a valid weight.
    pub fn index_of(self, twice_m: i32) -> Option<usize> {
        let tj = self.twice_j as i32;
        if twice_m.abs() > tj || (tj - twice_m) % 2 != 0 {
            return None;
        }
        Some(((tj - twice_m) / 2) as usize)
    }

    /// 4·g_l with g_l = j(j+1) − l(l−1), exact in integers.
    pub fn ladder_g_quarters(self, twice_l: i32) -> i64 {
        let tj = self.twice_j as i64;
        let tl = twice_l as i64;
        tj * (tj + 2) - tl * (tl - 2)
    }

    /// g_l = j(j+1) − l(l−1) = ⟨l|J₊J₋|l⟩.
    pub fn ladder_g(self, twice_l: i32) -> f64 {
        self.ladder_g_quarters(twice_l) as f64 / 4.0
    }
}

/// ln n!
pub fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// ln C(n, k).
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    assert!(k <= n, "ln_binomial: k > n");
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// γ as a point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

/// A point on the Bloch sphere.
///
/// The canonical representation is (θ, φ); γ = tan(θ/2)e^{iφ} is a derived
/// view. At both poles φ carries no information and is stored as 0, which
/// makes the pole states exactly |j, ±j⟩ with unit amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLabel {
    theta: f64,
    phi: f64,
}

impl CoherentLabel {
    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidLabel(format!("theta = {theta}, phi = {phi}")));
        }
        let phi = if theta == 0.0 || theta == PI {
            0.0
        } else {
            wrap_angle(phi)
        };
        Ok(Self { theta, phi })
    }

    pub fn from_gamma(gamma: Complex64) -> Result<Self> {
        if !gamma.re.is_finite() || !gamma.im.is_finite() {
            return Err(Error::InvalidLabel(format!("gamma = {gamma}")));
        }
        Self::from_angles(2.0 * gamma.norm().atan(), gamma.arg())
    }

    /// Label with real, non-negative γ (φ = 0); `f64::INFINITY` selects the
    /// south pole.
    pub fn from_real_gamma(gamma: f64) -> Result<Self> {
        if gamma.is_nan() || gamma < 0.0 {
            return Err(Error::InvalidLabel(format!("gamma = {gamma}")));
        }
        if gamma.is_infinite() {
            return Ok(Self::south());
        }
        Self::from_angles(2.0 * gamma.atan(), 0.0)
    }

    /// θ = 0, the state |j j⟩.
    pub fn north() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    /// θ = π, the state |j −j⟩.
    pub fn south() -> Self {
        Self { theta: PI, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn gamma(&self) -> ExtendedComplex {
        if self.theta == PI {
            ExtendedComplex::Infinity
        } else {
            ExtendedComplex::Finite(Complex64::from_polar((self.theta / 2.0).tan(), self.phi))
        }
    }

    /// |γ| (infinite at the south pole).
    pub fn gamma_abs(&self) -> f64 {
        match self.gamma() {
            ExtendedComplex::Finite(g) => g.norm(),
            ExtendedComplex::Infinity => f64::INFINITY,
        }
    }

    /// Reflection through the equatorial plane: θ → π − θ, same φ.
    pub fn mirrored(&self) -> Self {
        let theta = PI - self.theta;
        Self::from_angles(theta.clamp(0.0, PI), self.phi).expect("mirrored label stays valid")
    }
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Amplitudes of a spin-j state in the |j m⟩ basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub spin: SpinQuantum,
    pub amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(spin: SpinQuantum, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != spin.dim() {
            return Err(Error::DimensionMismatch(amplitudes.len(), spin.dim()));
        }
        Ok(Self { spin, amplitudes })
    }

    /// The basis state |j m⟩.
    pub fn basis(spin: SpinQuantum, twice_m: i32) -> Result<Self> {
        let idx = spin
            .index_of(twice_m)
            .ok_or_else(|| Error::IndexOutOfRange(format!("twice_m = {twice_m} for twice_j = {}", spin.twice_j())))?;
        let mut amplitudes = DVector::zeros(spin.dim());
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { spin, amplitudes })
    }

    pub fn amplitude(&self, twice_m: i32) -> Option<Complex64> {
        self.spin.index_of(twice_m).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.spin != other.spin {
            return Err(Error::DimensionMismatch(self.spin.dim(), other.spin.dim()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self {
            spin: self.spin,
            amplitudes: self.amplitudes.map(|c| c / n),
        }
    }
}

/// A (not necessarily Hermitian) operator on the spin-j space, indexed by
/// (m₁, m₂). Off-diagonal cat blocks |γ₁⟩⟨γ₂| live here too.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub spin: SpinQuantum,
    pub entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(spin: SpinQuantum, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != spin.dim() || entries.ncols() != spin.dim() {
            return Err(Error::DimensionMismatch(entries.nrows(), spin.dim()));
        }
        Ok(Self { spin, entries })
    }

    pub fn zeros(spin: SpinQuantum) -> Self {
        Self {
            spin,
            entries: DMatrix::zeros(spin.dim(), spin.dim()),
        }
    }

    /// |a⟩⟨b|.
    pub fn outer(a: &StateVector, b: &StateVector) -> Result<Self> {
        if a.spin != b.spin {
            return Err(Error::DimensionMismatch(a.spin.dim(), b.spin.dim()));
        }
        let entries = &a.amplitudes * b.amplitudes.adjoint();
        Ok(Self { spin: a.spin, entries })
    }

    pub fn pure(psi: &StateVector) -> Self {
        Self::outer(psi, psi).expect("same spin")
    }

    pub fn entry(&self, twice_m1: i32, twice_m2: i32) -> Option<Complex64> {
        let i = self.spin.index_of(twice_m1)?;
        let k = self.spin.index_of(twice_m2)?;
        Some(self.entries[(i, k)])
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// max |ρ_{ab} − conj(ρ_{ba})|.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.entries - self.entries.adjoint();
        d.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Spin coherent state |γ⟩ = (1+|γ|²)^{−j} Σ_m γ^{j−m} sqrt(C(2j, j−m)) |j m⟩.
///
/// Evaluated as cos(θ/2)^{j+m} sin(θ/2)^{j−m} e^{iφ(j−m)} sqrt(C(2j, j−m))
/// with the binomial in log space.
pub fn coherent_state(spin: SpinQuantum, label: &CoherentLabel) -> StateVector {
    let tj = spin.twice_j();
    if label.theta == 0.0 {
        return StateVector::basis(spin, tj as i32).expect("top state");
    }
    if label.theta == PI {
        return StateVector::basis(spin, -(tj as i32)).expect("bottom state");
    }
    let ln_cos = (label.theta / 2.0).cos().ln();
    let ln_sin = (label.theta / 2.0).sin().ln();
    let amplitudes = DVector::from_fn(spin.dim(), |i, _| {
        // i = j − m, 2j − i = j + m
        let i_u = i as u32;
        let ln_mag = 0.5 * ln_binomial(tj, i_u) + (tj - i_u) as f64 * ln_cos + i_u as f64 * ln_sin;
        Complex64::from_polar(ln_mag.exp(), label.phi * i as f64)
    });
    StateVector { spin, amplitudes }
}

/// ⟨γ₁|γ₂⟩ = (cos½θ₁ cos½θ₂ + sin½θ₁ sin½θ₂ e^{i(φ₂−φ₁)})^{2j}.
///
/// Equivalent to (1 + γ̄₁γ₂)^{2j}/((1+|γ₁|²)(1+|γ₂|²))^j and regular at γ = ∞.
pub fn coherent_overlap(spin: SpinQuantum, label1: &CoherentLabel, label2: &CoherentLabel) -> Complex64 {
    let (c1, s1) = ((label1.theta / 2.0).cos(), (label1.theta / 2.0).sin());
    let (c2, s2) = ((label2.theta / 2.0).cos(), (label2.theta / 2.0).sin());
    let base = Complex64::new(c1 * c2, 0.0) + Complex64::from_polar(s1 * s2, label2.phi - label1.phi);
    base.powi(spin.twice_j() as i32)
}

/// Normalized cat state 𝒩(|γ₁⟩ + |γ₂⟩), 𝒩 = (2 + 2 Re⟨γ₁|γ₂⟩)^{−1/2}.
pub fn cat_state(spin: SpinQuantum, label1: &CoherentLabel, label2: &CoherentLabel) -> Result<StateVector> {
    if label1 == label2 {
        return Ok(coherent_state(spin, label1));
    }
    let norm_sq = 2.0 + 2.0 * coherent_overlap(spin, label1, label2).re;
    if norm_sq < 1e-14 {
        return Err(Error::DegenerateCat(norm_sq));
    }
    let a = coherent_state(spin, label1);
    let b = coherent_state(spin, label2);
    let scale = 1.0 / norm_sq.sqrt();
    Ok(StateVector {
        spin,
        amplitudes: (a.amplitudes + b.amplitudes) * Complex64::new(scale, 0.0),
    })
}

/// J₋ψ, unnormalized: (J₋ψ)_m = sqrt(g_{m+1}) ψ_{m+1}.
pub fn apply_jminus(state: &StateVector) -> StateVector {
    let spin = state.spin;
    let amplitudes = DVector::from_fn(spin.dim(), |i, _| {
        if i == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            let tm = spin.twice_m(i);
            state.amplitudes[i - 1] * spin.ladder_g(tm + 2).sqrt()
        }
    });
    StateVector { spin, amplitudes }
}

/// J₊ψ, unnormalized: (J₊ψ)_m = sqrt(g_m) ψ_{m−1}.
pub fn apply_jplus(state: &StateVector) -> StateVector {
    let spin = state.spin;
    let dim = spin.dim();
    let amplitudes = DVector::from_fn(dim, |i, _| {
        if i + 1 == dim {
            Complex64::new(0.0, 0.0)
        } else {
            let tm = spin.twice_m(i);
            state.amplitudes[i + 1] * spin.ladder_g(tm).sqrt()
        }
    });
    StateVector { spin, amplitudes }
}

/// Dense J₋ matrix.
pub fn jminus_matrix(spin: SpinQuantum) -> DMatrix<Complex64> {
    let dim = spin.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 1..dim {
        let tm = spin.twice_m(i);
        m[(i, i - 1)] = Complex64::new(spin.ladder_g(tm + 2).sqrt(), 0.0);
    }
    m
}

/// Sine of the angle between J₋|γ⟩ and |γ⟩:
/// sqrt(1 − |⟨γ|J₋|γ⟩|²/⟨γ|J₊J₋|γ⟩). Zero for the dark state θ = π.
pub fn pointer_deviation(spin: SpinQuantum, label: &CoherentLabel) -> f64 {
    let psi = coherent_state(spin, label);
    let lowered = apply_jminus(&psi);
    let n2 = lowered.norm_sqr();
    if n2 < 1e-300 {
        return 0.0;
    }
    let proj = psi.inner(&lowered).expect("same spin").norm_sqr();
    (1.0 - proj / n2).max(0.0).sqrt()
}

/// Closed form of [`pointer_deviation`] from ⟨J₋⟩ = j sinθ e^{−iφ} and
/// ⟨J₊J₋⟩ = j² sin²θ + (j/2)(1 + cosθ)².
pub fn pointer_deviation_closed_form(j: f64, theta: f64) -> f64 {
    let s2 = j * j * theta.sin().powi(2);
    let denom = s2 + 0.5 * j * (1.0 + theta.cos()).powi(2);
    if denom <= 0.0 {
        return 0.0;
    }
    (1.0 - s2 / denom).max(0.0).sqrt()
}

/// exp(−iα J_z) as the diagonal of phases.
fn z_phases(spin: SpinQuantum, alpha: f64) -> Vec<Complex64> {
    (0..spin.dim())
        .map(|i| Complex64::from_polar(1.0, -alpha * spin.twice_m(i) as f64 / 2.0))
        .collect()
}

/// exp(−iβ(cos α J_x + sin α J_y)): rotation by β about the equatorial axis
/// at azimuth α.
///
/// Built as e^{−iαJ_z} e^{−iβJ_x} e^{iαJ_z}, with e^{−iβJ_x} from the
/// eigen-decomposition of the real tridiagonal J_x (eigenvalues snapped to
/// the exact weights).
pub fn rotation_matrix(spin: SpinQuantum, axis_azimuth: f64, angle: f64) -> DMatrix<Complex64> {
    let dim = spin.dim();
    let mut jx = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim - 1 {
        // ⟨m|J₊|m−1⟩ = sqrt(g_m)
        let v = 0.5 * spin.ladder_g(spin.twice_m(i)).sqrt();
        jx[(i, i + 1)] = v;
        jx[(i + 1, i)] = v;
    }
    let eig = SymmetricEigen::new(jx);
    let vecs = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DVector::from_iterator(
        dim,
        eig.eigenvalues
            .iter()
            .map(|mu| Complex64::from_polar(1.0, -angle * (2.0 * mu).round() / 2.0)),
    );
    let mut scaled = vecs.clone();
    for (c, p) in scaled.column_iter_mut().zip(phases.iter()) {
        let mut c = c;
        c *= *p;
    }
    let rx = scaled * vecs.transpose();
    let pz = z_phases(spin, axis_azimuth);
    DMatrix::from_fn(dim, dim, |a, b| pz[a] * rx[(a, b)] * pz[b].conj())
}

/// Real Wigner small-d matrix d^j(β) = exp(−iβJ_y), indexed top-down.
pub fn wigner_d(spin: SpinQuantum, beta: f64) -> DMatrix<f64> {
    rotation_matrix(spin, PI / 2.0, beta).map(|c| c.re)
}

/// exp(−i·angle·J_y)ψ. With this sign convention
/// `rotate_y(|j j⟩, π/2)` equals the coherent state at θ = π/2, φ = 0.
pub fn rotate_y(state: &StateVector, angle: f64) -> StateVector {
    let d = wigner_d(state.spin, angle).map(|x| Complex64::new(x, 0.0));
    StateVector {
        spin: state.spin,
        amplitudes: d * &state.amplitudes,
    }
}

/// Rotation by `angle` about the equatorial axis at azimuth `axis_azimuth`.
pub fn rotate_about(state: &StateVector, axis_azimuth: f64, angle: f64) -> StateVector {
    let r = rotation_matrix(state.spin, axis_azimuth, angle);
    StateVector {
        spin: state.spin,
        amplitudes: r * &state.amplitudes,
    }
}

/// exp(−iα J_z)ψ.
pub fn rotate_z(state: &StateVector, alpha: f64) -> StateVector {
    let p = z_phases(state.spin, alpha);
    StateVector {
        spin: state.spin,
        amplitudes: DVector::from_fn(state.spin.dim(), |i, _| p[i] * state.amplitudes[i]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spin(tj: u32) -> SpinQuantum {
        SpinQuantum::new(tj).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn spin_bookkeeping() {
        assert!(SpinQuantum::new(0).is_err());
        let s = spin(3);
        assert_eq!(s.dim(), 4);
        assert_eq!(s.atom_count(), 3);
        assert_eq!(s.twice_m(0), 3);
        assert_eq!(s.twice_m(3), -3);
        assert_eq!(s.index_of(1), Some(1));
        assert_eq!(s.index_of(2), None);
        assert_eq!(s.index_of(5), None);
        assert_eq!(SpinQuantum::from_j(2.5).unwrap().twice_j(), 5);
        assert!(SpinQuantum::from_j(0.3).is_err());
        // g_1 = 2 for j = 1; g_{j+1} = g_{-j} = 0
        assert_eq!(spin(2).ladder_g(2), 2.0);
        assert_eq!(spin(7).ladder_g(9), 0.0);
        assert_eq!(spin(7).ladder_g(-7), 0.0);
    }

    #[test]
    fn label_round_trip_and_poles() {
        let l = CoherentLabel::from_angles(1.1, 4.0).unwrap();
        let g = match l.gamma() {
            ExtendedComplex::Finite(g) => g,
            _ => unreachable!(),
        };
        let back = CoherentLabel::from_gamma(g).unwrap();
        assert_abs_diff_eq!(back.theta(), 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(back.phi(), 4.0, epsilon = 1e-14);
        assert_eq!(
            CoherentLabel::from_angles(0.0, 2.0).unwrap().gamma(),
            ExtendedComplex::Finite(c(0.0))
        );
        assert_eq!(
            CoherentLabel::from_angles(PI, 2.0).unwrap().gamma(),
            ExtendedComplex::Infinity
        );
        assert_eq!(
            CoherentLabel::from_real_gamma(f64::INFINITY).unwrap(),
            CoherentLabel::south()
        );
        assert!(CoherentLabel::from_angles(-0.1, 0.0).is_err());
        assert!(CoherentLabel::from_angles(3.5, 0.0).is_err());
        assert_abs_diff_eq!(
            CoherentLabel::from_angles(1.0, -0.5).unwrap().phi(),
            TWO_PI - 0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn coherent_state_examples() {
        // j = 1/2 at the north pole
        let s = coherent_state(spin(1), &CoherentLabel::north());
        assert_eq!(s.amplitudes[0], c(1.0));
        assert_eq!(s.amplitudes[1], c(0.0));
        // j = 1, gamma = 1: direct binomial sum (1+1)^{-1} (1, sqrt2, 1)
        let s = coherent_state(spin(2), &CoherentLabel::from_real_gamma(1.0).unwrap());
        let oracle = [0.5, 0.5 * 2f64.sqrt(), 0.5];
        for (a, o) in s.amplitudes.iter().zip(oracle) {
            assert_abs_diff_eq!(a.re, o, epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-14);
        }
        let south = coherent_state(spin(4), &CoherentLabel::south());
        assert_eq!(south.amplitudes[4], c(1.0));
    }

    #[test]
    fn coherent_state_matches_gamma_expansion() {
        // (1+|g|^2)^{-j} g^{j-m} sqrt(C(2j, j-m)), evaluated directly
        let s = spin(7);
        let g = Complex64::from_polar(0.8, 0.7);
        let label = CoherentLabel::from_gamma(g).unwrap();
        let psi = coherent_state(s, &label);
        let pref = (1.0 + g.norm_sqr()).powf(-s.j());
        let binom = |n: u64, k: u64| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
        for i in 0..s.dim() {
            let expect = g.powi(i as i32) * pref * binom(7, i as u64).sqrt();
            assert_abs_diff_eq!((psi.amplitudes[i] - expect).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn overlap_examples() {
        let s = spin(1);
        let l0 = CoherentLabel::from_real_gamma(0.0).unwrap();
        let l1 = CoherentLabel::from_real_gamma(1.0).unwrap();
        assert_abs_diff_eq!(coherent_overlap(s, &l0, &l1).re, 0.5f64.sqrt(), epsilon = 1e-15);
        let l = CoherentLabel::from_angles(0.7, 1.3).unwrap();
        assert_abs_diff_eq!(
            (coherent_overlap(spin(9), &l, &l) - c(1.0)).norm(),
            0.0,
            epsilon = 1e-14
        );
        let anti = CoherentLabel::from_angles(PI - 0.7, 1.3 + PI).unwrap();
        assert_abs_diff_eq!(coherent_overlap(spin(9), &l, &anti).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cat_state_examples() {
        let s = spin(2);
        let cat = cat_state(s, &CoherentLabel::north(), &CoherentLabel::south()).unwrap();
        let r = 0.5f64.sqrt();
        assert_abs_diff_eq!(cat.amplitudes[0].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(cat.amplitudes[1].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cat.amplitudes[2].re, r, epsilon = 1e-15);

        let l = CoherentLabel::from_angles(0.4, 0.2).unwrap();
        assert_eq!(cat_state(s, &l, &l).unwrap(), coherent_state(s, &l));

        // orthogonal equatorial components
        let a = CoherentLabel::from_angles(PI / 2.0, 0.0).unwrap();
        let b = CoherentLabel::from_angles(PI / 2.0, PI).unwrap();
        let cat = cat_state(spin(1), &a, &b).unwrap();
        assert_abs_diff_eq!(cat.norm_sqr(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cat.amplitudes[0].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn off_diagonal_block_n2_is_not_one() {
        let s = spin(10);
        let a = coherent_state(s, &CoherentLabel::from_real_gamma(0.5).unwrap());
        let b = coherent_state(s, &CoherentLabel::from_real_gamma(2.0).unwrap());
        let rho = DensityMatrix::outer(&a, &b).unwrap();
        let n2: f64 = rho.entries.iter().map(|z| z.norm()).sum();
        assert!((n2 - 1.0).abs() > 0.1, "N2(0) = {n2}");
    }

    #[test]
    fn ladder_examples() {
        let down = apply_jminus(&StateVector::basis(spin(1), -1).unwrap());
        assert_eq!(down.norm_sqr(), 0.0);
        let lowered = apply_jminus(&StateVector::basis(spin(2), 2).unwrap());
        assert_abs_diff_eq!(lowered.amplitudes[1].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(lowered.norm_sqr(), 2.0, epsilon = 1e-14);
        // J+J- |jm> = g_m |jm>
        let s = spin(9);
        for i in 0..s.dim() {
            let tm = s.twice_m(i);
            let b = StateVector::basis(s, tm).unwrap();
            let v = apply_jplus(&apply_jminus(&b));
            assert_abs_diff_eq!(v.amplitudes[i].re, s.ladder_g(tm), epsilon = 1e-12);
            assert_abs_diff_eq!(v.norm_sqr().sqrt(), s.ladder_g(tm), epsilon = 1e-12);
        }
    }

    #[test]
    fn pointer_deviation_examples() {
        assert_eq!(pointer_deviation(spin(20), &CoherentLabel::south()), 0.0);
        let eq = CoherentLabel::from_angles(PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(pointer_deviation(spin(20), &eq), 1.0 / 21f64.sqrt(), epsilon = 1e-12);
        for tj in [20u32, 40, 80] {
            let r = pointer_deviation(spin(2 * tj), &eq) / pointer_deviation(spin(tj), &eq);
            assert!((r / 0.5f64.sqrt() - 1.0).abs() < 0.05, "ratio {r}");
        }
    }

    #[test]
    fn pointer_deviation_closed_form_agrees() {
        for tj in [2u32, 7, 20, 51, 200] {
            for k in 0..=20 {
                let theta = PI * k as f64 / 20.0;
                let label = CoherentLabel::from_angles(theta, 0.3).unwrap();
                let v = pointer_deviation(spin(tj), &label);
                let cf = pointer_deviation_closed_form(tj as f64 / 2.0, theta);
                assert_abs_diff_eq!(v, cf, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rotation_examples() {
        let s = spin(12);
        let top = StateVector::basis(s, 12).unwrap();
        let same = rotate_y(&top, 0.0);
        assert_abs_diff_eq!((same.amplitudes - &top.amplitudes).norm(), 0.0, epsilon = 1e-13);
        let flipped = rotate_y(&top, PI);
        assert_abs_diff_eq!(flipped.amplitudes[12].norm(), 1.0, epsilon = 1e-12);
        let eq = rotate_y(&top, PI / 2.0);
        let expect = coherent_state(s, &CoherentLabel::from_angles(PI / 2.0, 0.0).unwrap());
        for (a, b) in eq.amplitudes.iter().zip(expect.amplitudes.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
        // general beta maps |jj> to theta = beta, phi = 0
        let g = rotate_y(&top, 1.1);
        let e = coherent_state(s, &CoherentLabel::from_angles(1.1, 0.0).unwrap());
        assert_abs_diff_eq!((g.amplitudes - e.amplitudes).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_about_axis_moves_coherent_states() {
        // rotation about the x axis (azimuth 0) by beta takes |jj> to theta=beta, phi=-pi/2
        let s = spin(9);
        let top = StateVector::basis(s, 9).unwrap();
        let v = rotate_about(&top, 0.0, 0.8);
        let e = coherent_state(s, &CoherentLabel::from_angles(0.8, -PI / 2.0).unwrap());
        let f = v.inner(&e).unwrap().norm_sqr();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotations_are_unitary() {
        for tj in 1..=40u32 {
            let r = rotation_matrix(spin(tj), 0.37, 1.3);
            let defect = (r.adjoint() * &r - DMatrix::<Complex64>::identity(r.nrows(), r.ncols()))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(defect < 1e-12, "twice_j = {tj}: {defect:e}");
            let d = wigner_d(spin(tj), 0.9);
            let im = rotation_matrix(spin(tj), PI / 2.0, 0.9)
                .iter()
                .map(|z| z.im.abs())
                .fold(0.0, f64::max);
            assert!(im < 1e-12);
            assert_eq!(d.nrows(), tj as usize + 1);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn factories_emit_unit_vectors(tj in 1u32..60, theta in 0.0..PI, phi in 0.0..TWO_PI, theta2 in 0.0..PI) {
            let s = spin(tj);
            let l1 = CoherentLabel::from_angles(theta, phi).unwrap();
            let l2 = CoherentLabel::from_angles(theta2, 0.0).unwrap();
            prop_assert!((coherent_state(s, &l1).norm_sqr() - 1.0).abs() < 1e-12);
            if let Ok(cat) = cat_state(s, &l1, &l2) {
                prop_assert!((cat.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn overlap_equals_amplitude_inner_product(
            tj in 1u32..=40, t1 in 0.0..PI, p1 in 0.0..TWO_PI, t2 in 0.0..PI, p2 in 0.0..TWO_PI
        ) {
            let s = spin(tj);
            let l1 = CoherentLabel::from_angles(t1, p1).unwrap();
            let l2 = CoherentLabel::from_angles(t2, p2).unwrap();
            let brute = coherent_state(s, &l1).inner(&coherent_state(s, &l2)).unwrap();
            prop_assert!((brute - coherent_overlap(s, &l1, &l2)).norm() < 1e-12);
        }

        #[test]
        fn real_gamma_gives_positive_amplitudes(tj in 1u32..80, theta in 0.01..(PI - 0.01)) {
            let psi = coherent_state(spin(tj), &CoherentLabel::from_angles(theta, 0.0).unwrap());
            prop_assert!(psi.amplitudes.iter().all(|a| a.im == 0.0 && a.re >= 0.0));
        }

        #[test]
        fn pointer_deviation_matches_closed_form(tj in 1u32..=200, theta in 0.0..PI) {
            let j = tj as f64 / 2.0;
            let v = pointer_deviation(spin(tj), &CoherentLabel::from_angles(theta, 0.0).unwrap());
            prop_assert!((v - pointer_deviation_closed_form(j, theta)).abs() < 1e-8);
        }
    }
}
