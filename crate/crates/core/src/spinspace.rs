//! Spin Hilbert spaces, singlet/triplet projectors and density matrices.
//!
//! Projectors are diagonal 0/1 matrices in the singlet/triplet basis, so
//! projections are applied as index masks and the projector algebra is exact.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Hilbert-space descriptor: dimension plus the basis indices spanning the
/// singlet subspace. The complement spans the triplet subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinSpace {
    dim: usize,
    singlet_indices: Vec<usize>,
    is_singlet: Vec<bool>,
}

impl SpinSpace {
    pub fn new(dim: usize, singlet_indices: &[usize]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        let mut is_singlet = vec![false; dim];
        for &i in singlet_indices {
            if i >= dim {
                return Err(Error::InvalidSpace(format!(
                    "singlet index {i} out of range for dimension {dim}"
                )));
            }
            if is_singlet[i] {
                return Err(Error::InvalidSpace(format!("duplicate singlet index {i}")));
            }
            is_singlet[i] = true;
        }
        if singlet_indices.is_empty() {
            return Err(Error::InvalidSpace("empty singlet subspace".into()));
        }
        if singlet_indices.len() == dim {
            return Err(Error::InvalidSpace("no triplet subspace".into()));
        }
        let mut sorted = singlet_indices.to_vec();
        sorted.sort_unstable();
        Ok(SpinSpace {
            dim,
            singlet_indices: sorted,
            is_singlet,
        })
    }

    /// The minimal `{|S>, |T>}` space.
    pub fn two_level() -> Self {
        Self::new(2, &[0]).expect("valid built-in space")
    }

    /// Electron-pair space `{S, T+, T0, T-}`.
    pub fn electron_pair() -> Self {
        Self::new(4, &[0]).expect("valid built-in space")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singlet_indices(&self) -> &[usize] {
        &self.singlet_indices
    }

    pub fn triplet_indices(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| !self.is_singlet[i]).collect()
    }

    pub fn is_singlet(&self, index: usize) -> bool {
        self.is_singlet[index]
    }

    pub fn q_singlet(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j && self.is_singlet[i] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn q_triplet(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j && !self.is_singlet[i] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `Q_T m Q_T`.
    pub fn sandwich_triplet(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| {
            if self.is_singlet[i] || self.is_singlet[j] {
                Complex64::new(0.0, 0.0)
            } else {
                m[(i, j)]
            }
        })
    }

    /// `Q_S m`.
    pub fn left_singlet(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| {
            if self.is_singlet[i] {
                m[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `Tr(Q_S m)`, real part.
    pub fn singlet_trace(&self, m: &CMatrix) -> f64 {
        self.singlet_indices.iter().map(|&i| m[(i, i)].re).sum()
    }

    /// `Tr(Q_T m) = Tr(Q_T m Q_T)`, real part.
    pub fn triplet_trace(&self, m: &CMatrix) -> f64 {
        (0..self.dim)
            .filter(|&i| !self.is_singlet[i])
            .map(|i| m[(i, i)].re)
            .sum()
    }

    fn check_dim(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: if m.nrows() != self.dim { m.nrows() } else { m.ncols() },
            });
        }
        Ok(())
    }
}

/// Tolerances shared by validation and the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm_warn: f64,
    pub herm_fail: f64,
    pub psd_warn: f64,
    pub psd_fail: f64,
    pub trace: f64,
    pub trace_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm_warn: 1e-9,
            herm_fail: 1e-6,
            psd_warn: 1e-9,
            psd_fail: 1e-6,
            trace: 1e-9,
            trace_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub verdict: Verdict,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// A density matrix tied to its spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: Arc<SpinSpace>,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix without checking physical validity; see [`DensityMatrix::validate`].
    pub fn from_matrix(space: Arc<SpinSpace>, entries: CMatrix) -> Result<Self> {
        space.check_dim(&entries)?;
        Ok(DensityMatrix { space, entries })
    }

    pub fn from_real(space: Arc<SpinSpace>, rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter {
                name: "rows",
                reason: "matrix must be square".into(),
            });
        }
        let m = CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0));
        Self::from_matrix(space, m)
    }

    pub fn diagonal(space: Arc<SpinSpace>, diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let m = CMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { diag[i] } else { 0.0 }, 0.0));
        Self::from_matrix(space, m)
    }

    /// `|i><i|` for basis state `index`.
    pub fn basis_state(space: Arc<SpinSpace>, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(Error::InvalidParameter {
                name: "index",
                reason: format!("{index} out of range for dimension {dim}"),
            });
        }
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self::diagonal(space, &diag)
    }

    pub fn space(&self) -> &Arc<SpinSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub(crate) fn with_matrix(&self, entries: CMatrix) -> Self {
        debug_assert_eq!(entries.nrows(), self.dim());
        DensityMatrix {
            space: Arc::clone(&self.space),
            entries,
        }
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `rho / Tr(rho)` with the default trace floor.
    pub fn normalize(&self) -> Result<Self> {
        self.normalize_with_floor(Tolerances::default().trace_floor)
    }

    pub fn normalize_with_floor(&self, trace_floor: f64) -> Result<Self> {
        let trace = self.trace();
        if !(trace > trace_floor) {
            return Err(Error::NormalizationSingular { trace });
        }
        Ok(self.with_matrix(self.entries.unscale(trace)))
    }

    pub fn singlet_probability(&self) -> f64 {
        self.space.singlet_trace(&self.entries)
    }

    pub fn triplet_probability(&self) -> f64 {
        self.space.triplet_trace(&self.entries)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.entries)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }

    pub fn validate(&self, tol: &Tolerances) -> Validation {
        let herm = self.hermiticity_deviation();
        let min_eig = self.min_eigenvalue();
        let trace = self.trace();
        let verdict = if herm > tol.herm_fail || min_eig < -tol.psd_fail || !(trace > 0.0) || trace > 1.0 + tol.trace {
            Verdict::Fail
        } else if herm > tol.herm_warn || min_eig < -tol.psd_warn {
            Verdict::Warn
        } else {
            Verdict::Pass
        };
        Validation {
            hermiticity_deviation: herm,
            min_eigenvalue: min_eig,
            trace,
            verdict,
        }
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(frobenius_distance(&self.entries, &other.entries))
    }
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()).scale(0.5);
    herm.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `(m + m^dagger) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Seeded full-rank state `G G^dagger / Tr(G G^dagger)` with standard complex
/// normal entries in `G`.
pub fn random_density_matrix(space: Arc<SpinSpace>, seed: u64) -> DensityMatrix {
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let gg = symmetrize(&(&g * g.adjoint()));
    let trace = gg.trace().re;
    DensityMatrix {
        space,
        entries: gg.unscale(trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two() -> Arc<SpinSpace> {
        Arc::new(SpinSpace::two_level())
    }

    fn diag_of(m: &CMatrix) -> Vec<f64> {
        (0..m.nrows()).map(|i| m[(i, i)].re).collect()
    }

    #[test]
    fn make_space_projectors() {
        let s = SpinSpace::new(2, &[0]).unwrap();
        assert_eq!(diag_of(&s.q_singlet()), vec![1.0, 0.0]);
        assert_eq!(diag_of(&s.q_triplet()), vec![0.0, 1.0]);
        let s4 = SpinSpace::new(4, &[0]).unwrap();
        assert_eq!(diag_of(&s4.q_triplet()), vec![0.0, 1.0, 1.0, 1.0]);
        assert_eq!(s4, SpinSpace::electron_pair());
    }

    #[test]
    fn make_space_rejects_bad_index_sets() {
        assert!(matches!(SpinSpace::new(2, &[0, 1]), Err(Error::InvalidSpace(_))));
        assert!(matches!(SpinSpace::new(2, &[]), Err(Error::InvalidSpace(_))));
        assert!(matches!(SpinSpace::new(2, &[2]), Err(Error::InvalidSpace(_))));
        assert!(matches!(SpinSpace::new(3, &[1, 1]), Err(Error::InvalidSpace(_))));
        assert!(matches!(SpinSpace::new(0, &[0]), Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn projector_algebra_is_exact() {
        for space in [
            SpinSpace::two_level(),
            SpinSpace::electron_pair(),
            SpinSpace::new(5, &[1, 3]).unwrap(),
        ] {
            let qs = space.q_singlet();
            let qt = space.q_triplet();
            let id = CMatrix::identity(space.dim(), space.dim());
            assert_eq!(&qs + &qt, id);
            assert_eq!(&qs * &qt, CMatrix::zeros(space.dim(), space.dim()));
            assert_eq!(&qs * &qs, qs);
            assert_eq!(&qt * &qt, qt);
        }
    }

    #[test]
    fn mask_projections_match_matrix_products() {
        let space = Arc::new(SpinSpace::new(4, &[0, 2]).unwrap());
        let rho = random_density_matrix(space.clone(), 3);
        let m = rho.matrix();
        let qt = space.q_triplet();
        let qs = space.q_singlet();
        assert!(frobenius_distance(&space.sandwich_triplet(m), &(&qt * m * &qt)) < 1e-15);
        assert!(frobenius_distance(&space.left_singlet(m), &(&qs * m)) < 1e-15);
    }

    #[test]
    fn normalize_examples() {
        let s = two();
        let n = DensityMatrix::diagonal(s.clone(), &[0.25, 0.25])
            .unwrap()
            .normalize()
            .unwrap();
        assert_eq!(diag_of(n.matrix()), vec![0.5, 0.5]);
        let n = DensityMatrix::diagonal(s.clone(), &[1.0, 0.0])
            .unwrap()
            .normalize()
            .unwrap();
        assert_eq!(diag_of(n.matrix()), vec![1.0, 0.0]);
        let err = DensityMatrix::diagonal(s, &[0.0, 0.0]).unwrap().normalize();
        assert!(matches!(err, Err(Error::NormalizationSingular { .. })));
    }

    #[test]
    fn normalize_is_idempotent() {
        let rho = random_density_matrix(Arc::new(SpinSpace::electron_pair()), 11);
        let scaled = rho.with_matrix(rho.matrix().scale(0.3));
        let once = scaled.normalize().unwrap();
        let twice = once.normalize().unwrap();
        assert!(once.frobenius_distance(&twice).unwrap() < 1e-15);
    }

    #[test]
    fn singlet_probability_examples() {
        let s = two();
        let rho = DensityMatrix::diagonal(s.clone(), &[0.5, 0.5]).unwrap();
        assert_eq!(rho.singlet_probability(), 0.5);
        let t = DensityMatrix::basis_state(s, 1).unwrap();
        assert_eq!(t.singlet_probability(), 0.0);
    }

    #[test]
    fn singlet_probability_matches_elementwise_sum() {
        let space = Arc::new(SpinSpace::electron_pair());
        let rho = random_density_matrix(space.clone(), 42);
        // Independent route: Tr(Q_S rho) via explicit matrix product.
        let product = (space.q_singlet() * rho.matrix()).trace().re;
        let elementwise = rho.matrix()[(0, 0)].re;
        assert_abs_diff_eq!(rho.singlet_probability(), elementwise, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.singlet_probability(), product, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rho.singlet_probability() + rho.triplet_probability(),
            rho.trace(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn validate_examples() {
        let s = two();
        let tol = Tolerances::default();
        let half = DensityMatrix::diagonal(s.clone(), &[0.5, 0.5]).unwrap();
        let v = half.validate(&tol);
        assert_eq!(v.verdict, Verdict::Pass);
        assert_abs_diff_eq!(v.min_eigenvalue, 0.5, epsilon = 1e-15);

        let bad = DensityMatrix::from_real(s.clone(), &[&[0.5, 0.6], &[0.6, 0.5]]).unwrap();
        let v = bad.validate(&tol);
        assert_eq!(v.verdict, Verdict::Fail);
        // eigenvalues of [[a, b], [b, a]] are a +- b
        assert_abs_diff_eq!(v.min_eigenvalue, -0.1, epsilon = 1e-14);

        let mut m = half.matrix().clone();
        m[(0, 1)] += Complex64::new(1e-6, 0.0);
        let skewed = DensityMatrix::from_matrix(s, m).unwrap();
        let v = skewed.validate(&tol);
        assert_eq!(v.verdict, Verdict::Warn);
        assert_abs_diff_eq!(v.hermiticity_deviation, 1e-6, epsilon = 1e-18);
    }

    #[test]
    fn validate_fails_on_bad_trace() {
        let s = two();
        let tol = Tolerances::default();
        let zero = DensityMatrix::diagonal(s.clone(), &[0.0, 0.0]).unwrap();
        assert_eq!(zero.validate(&tol).verdict, Verdict::Fail);
        let big = DensityMatrix::diagonal(s, &[0.7, 0.7]).unwrap();
        assert_eq!(big.validate(&tol).verdict, Verdict::Fail);
    }

    #[test]
    fn random_states_are_valid_and_deterministic() {
        let tight = Tolerances {
            herm_warn: 1e-12,
            psd_warn: 1e-12,
            ..Tolerances::default()
        };
        for dim in [2, 4] {
            let space = Arc::new(SpinSpace::new(dim, &[0]).unwrap());
            let mut trace_sum = 0.0;
            for seed in 0..1000 {
                let rho = random_density_matrix(space.clone(), seed);
                assert!(rho.validate(&tight).passed(), "seed {seed}");
                trace_sum += rho.trace();
            }
            assert_abs_diff_eq!(trace_sum / 1000.0, 1.0, epsilon = 1e-14);
        }
        let space = Arc::new(SpinSpace::electron_pair());
        assert_eq!(
            random_density_matrix(space.clone(), 7),
            random_density_matrix(space.clone(), 7)
        );
        assert_ne!(random_density_matrix(space.clone(), 7), random_density_matrix(space, 8));
    }

    #[test]
    fn frobenius_examples() {
        let s = two();
        let a = DensityMatrix::diagonal(s.clone(), &[1.0, 0.0]).unwrap();
        let b = DensityMatrix::diagonal(s.clone(), &[0.0, 1.0]).unwrap();
        assert_eq!(a.frobenius_distance(&a).unwrap(), 0.0);
        assert_abs_diff_eq!(a.frobenius_distance(&b).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let c = DensityMatrix::diagonal(s.clone(), &[0.5, 0.5]).unwrap();
        let d = DensityMatrix::diagonal(s.clone(), &[0.6, 0.4]).unwrap();
        assert_abs_diff_eq!(c.frobenius_distance(&d).unwrap(), 0.02f64.sqrt(), epsilon = 1e-15);
        let e = random_density_matrix(Arc::new(SpinSpace::electron_pair()), 1);
        assert!(matches!(a.frobenius_distance(&e), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn from_matrix_rejects_wrong_dimension() {
        let m = CMatrix::zeros(3, 3);
        assert!(matches!(
            DensityMatrix::from_matrix(two(), m),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }
}
