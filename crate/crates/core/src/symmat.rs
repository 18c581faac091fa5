//! Symmetric and positive semi-definite matrix types with tolerance-aware
//! invariants, plus the elementary-symmetric-polynomial operations the rest of
//! the crate is built on.
//!
//! e_n values are computed from the eigenvalues (stable for PSD input, where
//! no cancellation occurs); `esp_via_principal_minors` gives an independent
//! determinant-based route used as a cross-check at small p.

use serde::{Deserialize, Serialize};

use crate::dense::{symmetric_eigen, Eigen, SquareMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerances for the tolerance-aware invariants. Values are quoted in f64
/// and converted to the working scalar, with a floor of a few machine
/// epsilons so the f32 instantiation stays usable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// Symmetry deviation, relative to max |entry|.
    pub sym_tol: f64,
    /// PSD slack, relative to the spectral norm.
    pub psd_rel: f64,
    /// Absolute PSD fallback for near-zero matrices.
    pub psd_abs: f64,
    /// Residual bound for the PSD square root, relative to the input norm.
    pub sqrt_tol: f64,
    /// Multiplicative eigenvalue threshold for numerical rank.
    pub rank_tol: f64,
    /// Minimal eigenvalue of I + Sigma*u for the Laplace domain.
    pub dom_tol: f64,
    /// Absolute tolerance for integrality tests on shape parameters.
    pub int_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym_tol: 1e-10,
            psd_rel: 1e-10,
            psd_abs: 1e-12,
            sqrt_tol: 1e-8,
            rank_tol: 1e-8,
            dom_tol: 1e-9,
            int_tol: 1e-12,
        }
    }
}

impl Tolerances {
    fn floor<T: Real>(v: f64) -> T {
        let eps = T::epsilon() * T::from_f64_c(16.0);
        T::from_f64_c(v).max(eps)
    }

    pub fn sym<T: Real>(&self) -> T {
        Self::floor(self.sym_tol)
    }

    pub fn psd<T: Real>(&self, spectral_norm: T) -> T {
        let rel = Self::floor::<T>(self.psd_rel) * spectral_norm;
        rel.max(Self::floor(self.psd_abs))
    }
}

/// Dense symmetric matrix. Construction symmetrizes the stored entries after
/// validating the deviation against `sym_tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T> {
    inner: SquareMatrix<T>,
}

impl<T: Real> SymmetricMatrix<T> {
    pub fn new(p: usize, data: Vec<T>, tols: &Tolerances) -> Result<Self> {
        let m = SquareMatrix::from_rows(p, data)?;
        Self::from_square(&m, tols)
    }

    pub fn from_square(m: &SquareMatrix<T>, tols: &Tolerances) -> Result<Self> {
        let p = m.p();
        let scale = m.max_abs().max(T::one());
        let tol = tols.sym::<T>() * scale;
        for i in 0..p {
            for j in i + 1..p {
                let dev = (m.at(i, j) - m.at(j, i)).abs();
                if dev > tol {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        dev: dev.to_f64().unwrap_or(f64::NAN),
                        tol: tol.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(Self { inner: m.symmetrize() })
    }

    /// For matrices that are symmetric by construction (outer products,
    /// spectral reassembly); skips the deviation check.
    pub(crate) fn trusted(m: SquareMatrix<T>) -> Self {
        Self { inner: m.symmetrize() }
    }

    pub fn zeros(p: usize) -> Self {
        Self { inner: SquareMatrix::zeros(p) }
    }

    pub fn identity(p: usize) -> Self {
        Self { inner: SquareMatrix::identity(p) }
    }

    pub fn from_diag(diag: &[T]) -> Self {
        Self { inner: SquareMatrix::from_diag(diag) }
    }

    pub fn scaled_identity(p: usize, s: T) -> Self {
        Self { inner: SquareMatrix::identity(p).scale(s) }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.inner.p()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.inner.at(i, j)
    }

    pub fn as_square(&self) -> &SquareMatrix<T> {
        &self.inner
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { inner: self.inner.add(&other.inner) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { inner: self.inner.sub(&other.inner) }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { inner: self.inner.scale(s) }
    }

    pub fn trace(&self) -> T {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> T {
        self.inner.frobenius_norm()
    }

    pub fn eigen(&self) -> Eigen<T> {
        symmetric_eigen(&self.inner)
    }

    /// Congruence q * X * q^T.
    pub fn congruence(&self, q: &SquareMatrix<T>) -> Self {
        Self::trusted(q.mul(&self.inner).mul_transposed(q))
    }

    /// tr(self * other).
    pub fn dot_trace(&self, other: &Self) -> T {
        let p = self.p();
        let mut s = T::zero();
        for i in 0..p {
            for j in 0..p {
                s = s + self.at(i, j) * other.at(j, i);
            }
        }
        s
    }

    /// Flattened upper triangle (row-major), the on-disk sample layout.
    pub fn upper_triangle(&self) -> Vec<T> {
        let p = self.p();
        let mut out = Vec::with_capacity(p * (p + 1) / 2);
        for i in 0..p {
            for j in i..p {
                out.push(self.at(i, j));
            }
        }
        out
    }
}

/// Positive semi-definite matrix; `eigen_floor` is the smallest eigenvalue
/// observed when the invariant was established.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix<T> {
    base: SymmetricMatrix<T>,
    eigen_floor: T,
}

impl<T: Real> PsdMatrix<T> {
    pub fn new(base: SymmetricMatrix<T>, tols: &Tolerances) -> Result<Self> {
        let eig = base.eigen();
        let tol = tols.psd::<T>(eig.spectral_norm());
        let min = eig.min();
        if min < -tol {
            return Err(Error::NotPsd {
                min_eig: min.to_f64().unwrap_or(f64::NAN),
                tol: tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { base, eigen_floor: min })
    }

    /// For matrices PSD by construction (Gram sums, clipped spectra).
    pub(crate) fn assume_psd(base: SymmetricMatrix<T>, eigen_floor: T) -> Self {
        Self { base, eigen_floor }
    }

    pub fn zeros(p: usize) -> Self {
        Self { base: SymmetricMatrix::zeros(p), eigen_floor: T::zero() }
    }

    pub fn identity(p: usize) -> Self {
        Self { base: SymmetricMatrix::identity(p), eigen_floor: T::one() }
    }

    pub fn scaled_identity(p: usize, s: T) -> Result<Self> {
        if s < T::zero() {
            return Err(Error::NotPsd { min_eig: s.to_f64().unwrap_or(f64::NAN), tol: 0.0 });
        }
        Ok(Self { base: SymmetricMatrix::scaled_identity(p, s), eigen_floor: s })
    }

    pub fn from_diag(diag: &[T]) -> Result<Self> {
        let min = diag.iter().fold(T::infinity(), |m, d| m.min(*d));
        if min < T::zero() {
            return Err(Error::NotPsd { min_eig: min.to_f64().unwrap_or(f64::NAN), tol: 0.0 });
        }
        Ok(Self { base: SymmetricMatrix::from_diag(diag), eigen_floor: min })
    }

    /// Sum of outer products v v^T; PSD by construction.
    pub fn from_outer_products(p: usize, vectors: &[Vec<T>]) -> Self {
        let mut m = SquareMatrix::zeros(p);
        for v in vectors {
            debug_assert_eq!(v.len(), p);
            for i in 0..p {
                for j in 0..p {
                    let cur = m.at(i, j);
                    m.set(i, j, cur + v[i] * v[j]);
                }
            }
        }
        Self::assume_psd(SymmetricMatrix::trusted(m), T::zero())
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.base.p()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.base.at(i, j)
    }

    pub fn base(&self) -> &SymmetricMatrix<T> {
        &self.base
    }

    pub fn eigen_floor(&self) -> T {
        self.eigen_floor
    }

    pub fn eigen(&self) -> Eigen<T> {
        self.base.eigen()
    }

    pub fn trace(&self) -> T {
        self.base.trace()
    }

    pub fn is_zero(&self) -> bool {
        self.base.as_square().max_abs() == T::zero()
    }

    /// Smallest eigenvalue is strictly positive (beyond the PSD slack).
    pub fn is_positive_definite(&self, tols: &Tolerances) -> bool {
        let eig = self.eigen();
        eig.min() > tols.psd::<T>(eig.spectral_norm())
    }
}

/// Vector (e_1, ..., e_p) of elementary symmetric polynomial values; e_0 = 1
/// is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct EsPolyVector<T> {
    values: Vec<T>,
}

impl<T: Real> EsPolyVector<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// e_n with the e_0 = 1 convention; n > p yields 0.
    pub fn e(&self, n: usize) -> T {
        if n == 0 {
            T::one()
        } else if n <= self.values.len() {
            self.values[n - 1]
        } else {
            T::zero()
        }
    }
}

/// Elementary symmetric polynomials of the eigenvalues, i.e. the signed
/// characteristic-polynomial coefficients; e_p = det.
pub fn elementary_symmetric<T: Real>(x: &SymmetricMatrix<T>) -> EsPolyVector<T> {
    let eig = x.eigen();
    EsPolyVector { values: esp_of_values(&eig.values, x.p()) }
}

/// e_1..e_n of an explicit list of values.
pub fn esp_of_values<T: Real>(values: &[T], n: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n + 1];
    e[0] = T::one();
    for &lam in values {
        for k in (1..=n).rev() {
            let prev = e[k - 1];
            e[k] = e[k] + lam * prev;
        }
    }
    e.remove(0);
    e
}

/// Incomplete elementary symmetric polynomial: order `n` in the eigenvalues
/// whose (0-based) indices are not excluded. Conventions: order 0 is 1,
/// order -1 is 0.
pub fn incomplete_esp<T: Real>(eigs: &[T], excluded: &[usize], n: isize) -> Result<T> {
    if excluded.len() > 2 {
        return Err(Error::OutOfRange("at most two indices can be excluded".into()));
    }
    for (k, &i) in excluded.iter().enumerate() {
        if i >= eigs.len() {
            return Err(Error::OutOfRange(format!("excluded index {i} out of range")));
        }
        if excluded[..k].contains(&i) {
            return Err(Error::OutOfRange(format!("excluded index {i} repeated")));
        }
    }
    let remaining = eigs.len() - excluded.len();
    if n == -1 {
        return Ok(T::zero());
    }
    if n < -1 || n as usize > remaining {
        return Err(Error::OutOfRange(format!(
            "order {n} outside 0..={remaining} for {} values",
            eigs.len()
        )));
    }
    let kept: Vec<T> = eigs
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(_, v)| *v)
        .collect();
    let n = n as usize;
    if n == 0 {
        return Ok(T::one());
    }
    Ok(esp_of_values(&kept, n)[n - 1])
}

/// Count of eigenvalues above tol * max(1, largest eigenvalue).
pub fn numerical_rank<T: Real>(x: &PsdMatrix<T>, tol: T) -> usize {
    let eig = x.eigen();
    let cut = tol * T::one().max(eig.max());
    eig.values.iter().filter(|l| **l > cut).count()
}

/// Unique PSD square root. Eigenvalues inside the PSD slack are clipped to
/// zero before rooting; a genuinely negative spectrum is an error.
pub fn psd_sqrt<T: Real>(x: &PsdMatrix<T>, tols: &Tolerances) -> Result<PsdMatrix<T>> {
    let eig = x.eigen();
    let tol = tols.psd::<T>(eig.spectral_norm());
    if eig.min() < -tol {
        return Err(Error::NotPsd {
            min_eig: eig.min().to_f64().unwrap_or(f64::NAN),
            tol: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    let root = eig.reassemble(|l| l.max(T::zero()).sqrt());
    Ok(PsdMatrix::assume_psd(SymmetricMatrix::trusted(root), T::zero()))
}

/// Result of projecting a symmetric matrix onto the PSD cone.
#[derive(Debug, Clone)]
pub struct Projection<T> {
    pub matrix: PsdMatrix<T>,
    /// Total |negative eigenvalue| mass removed.
    pub clipped_mass: T,
}

/// Nearest PSD matrix in Frobenius norm: eigenvalues clipped at zero,
/// eigenvectors kept.
pub fn psd_project<T: Real>(x: &SymmetricMatrix<T>) -> Projection<T> {
    let eig = x.eigen();
    let clipped_mass = eig
        .values
        .iter()
        .filter(|l| **l < T::zero())
        .fold(T::zero(), |acc, l| acc + l.abs());
    if clipped_mass == T::zero() {
        return Projection {
            matrix: PsdMatrix::assume_psd(x.clone(), eig.min()),
            clipped_mass,
        };
    }
    let m = eig.reassemble(|l| l.max(T::zero()));
    Projection {
        matrix: PsdMatrix::assume_psd(SymmetricMatrix::trusted(m), T::zero()),
        clipped_mass,
    }
}

/// Independent ESP route: e_n as the sum of n x n principal minors, each
/// evaluated by LU determinant. Exponential in p; intended for p <= 4 checks.
pub fn esp_via_principal_minors<T: Real>(x: &SymmetricMatrix<T>) -> Vec<T> {
    let p = x.p();
    let mut out = vec![T::zero(); p];
    for subset in 1u32..(1 << p) {
        let idx: Vec<usize> = (0..p).filter(|i| subset & (1 << i) != 0).collect();
        let n = idx.len();
        let sub = SquareMatrix::from_fn(n, |i, j| x.at(idx[i], idx[j]));
        out[n - 1] = out[n - 1] + sub.det();
    }
    out
}

/// Spectral factorization into `n` vectors m_i with sum m_i m_i^T = x:
/// sqrt(eigenvalue)-scaled eigenvectors for the significant spectrum,
/// zero-padded to length n.
pub fn rank_factors<T: Real>(x: &PsdMatrix<T>, n: usize, tols: &Tolerances) -> Result<Vec<Vec<T>>> {
    let p = x.p();
    let rank = numerical_rank(x, T::from_f64_c(tols.rank_tol));
    if rank > n {
        return Err(Error::RankTooHigh { rank, n });
    }
    let eig = x.eigen();
    let mut out = Vec::with_capacity(n);
    // eigenvalues ascending: take the top `rank`
    for k in (p - rank..p).rev() {
        let s = eig.values[k].max(T::zero()).sqrt();
        out.push((0..p).map(|i| eig.vectors.at(i, k) * s).collect());
    }
    while out.len() < n {
        out.push(vec![T::zero(); p]);
    }
    Ok(out)
}

/// On-disk matrix layout: `{"p": <int>, "data": [<p*p row-major floats>]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub p: usize,
    pub data: Vec<f64>,
}

pub fn symmetric_from_json<T: Real>(json: &str, tols: &Tolerances) -> Result<SymmetricMatrix<T>> {
    let raw: MatrixJson = serde_json::from_str(json)?;
    let data: Vec<T> = raw.data.iter().map(|v| T::from_f64_c(*v)).collect();
    SymmetricMatrix::new(raw.p, data, tols)
}

pub fn symmetric_to_json<T: Real>(m: &SymmetricMatrix<T>) -> String {
    let raw = MatrixJson {
        p: m.p(),
        data: m.as_square().data().iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
    };
    serde_json::to_string(&raw).expect("matrix serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = SymmetricMatrix<f64>;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn esp_identity_zero_diag() {
        let e = elementary_symmetric(&M::identity(3));
        assert_eq!(e.values(), &[3.0, 3.0, 1.0]);

        let e = elementary_symmetric(&M::zeros(3));
        assert_eq!(e.values(), &[0.0, 0.0, 0.0]);

        let e = elementary_symmetric(&M::from_diag(&[1.0, 2.0, 3.0]));
        let exp = [6.0, 11.0, 6.0];
        for (a, b) in e.values().iter().zip(exp) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn esp_convention_accessor() {
        let e = elementary_symmetric(&M::identity(2));
        assert_eq!(e.e(0), 1.0);
        assert_eq!(e.e(1), 2.0);
        assert_eq!(e.e(2), 1.0);
        assert_eq!(e.e(5), 0.0);
    }

    #[test]
    fn incomplete_esp_cases() {
        let eigs = [1.0, 2.0, 3.0];
        // excluding the value 1.0 (index 0): e_1 of {2,3} = 5
        assert_eq!(incomplete_esp(&eigs, &[0], 1).unwrap(), 5.0);
        // excluding {1,2} (indices 0,1): e_0 = 1 by convention
        assert_eq!(incomplete_esp(&eigs, &[0, 1], 0).unwrap(), 1.0);
        // excluding 3.0 (index 2): e_2 of {1,2} = 2
        assert_eq!(incomplete_esp(&eigs, &[2], 2).unwrap(), 2.0);
        // e_{-1} convention
        assert_eq!(incomplete_esp(&eigs, &[0, 1], -1).unwrap(), 0.0);
        assert!(incomplete_esp(&eigs, &[0], 3).is_err());
        assert!(incomplete_esp(&eigs, &[7], 1).is_err());
        assert!(incomplete_esp(&eigs, &[0], -2).is_err());
    }

    #[test]
    fn rank_thresholding() {
        let t = tols();
        let x = PsdMatrix::new(M::identity(3), &t).unwrap();
        assert_eq!(numerical_rank(&x, 1e-8), 3);
        assert_eq!(numerical_rank(&PsdMatrix::zeros(3), 1e-8), 0);
        let x = PsdMatrix::from_diag(&[1.0, 1e-14, 0.0]).unwrap();
        assert_eq!(numerical_rank(&x, 1e-8), 1);
    }

    #[test]
    fn sqrt_diag_and_roundtrip() {
        let t = tols();
        let x = PsdMatrix::from_diag(&[4.0, 9.0]).unwrap();
        let s = psd_sqrt(&x, &t).unwrap();
        assert!((s.at(0, 0) - 2.0).abs() < 1e-12);
        assert!((s.at(1, 1) - 3.0).abs() < 1e-12);
        assert!(s.at(0, 1).abs() < 1e-12);

        let i3 = PsdMatrix::identity(3);
        let s = psd_sqrt(&i3, &t).unwrap();
        assert!((s.at(0, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let base = M::from_diag(&[1.0, -0.5]);
        let x = PsdMatrix::assume_psd(base, -0.5);
        assert!(psd_sqrt(&x, &tols()).is_err());
    }

    #[test]
    fn projection_clips() {
        let pr = psd_project(&M::from_diag(&[1.0, -0.3]));
        assert!((pr.matrix.at(0, 0) - 1.0).abs() < 1e-12);
        assert!(pr.matrix.at(1, 1).abs() < 1e-12);
        assert!((pr.clipped_mass - 0.3).abs() < 1e-12);

        let pr = psd_project(&M::identity(2));
        assert_eq!(pr.clipped_mass, 0.0);
        assert!((pr.matrix.at(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let r = M::new(2, vec![1.0, 0.5, 0.1, 1.0], &tols());
        assert!(matches!(r, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(M::new(0, vec![], &tols()).is_err());
    }

    #[test]
    fn minor_route_matches_eigen_route() {
        let t = tols();
        let x = M::new(3, vec![2.0, 1.0, 0.3, 1.0, 3.0, 0.5, 0.3, 0.5, 1.5], &t).unwrap();
        let a = elementary_symmetric(&x);
        let b = esp_via_principal_minors(&x);
        for (u, v) in a.values().iter().zip(&b) {
            assert!((u - v).abs() <= 1e-9 * (1.0 + v.abs()), "{u} vs {v}");
        }
    }

    #[test]
    fn rank_factors_reconstruct() {
        let t = tols();
        let v = vec![1.0, -2.0, 0.5];
        let x = PsdMatrix::from_outer_products(3, &[v.clone()]);
        let f = rank_factors(&x, 1, &t).unwrap();
        assert_eq!(f.len(), 1);
        let back = PsdMatrix::from_outer_products(3, &f);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.at(i, j) - x.at(i, j)).abs() < 1e-12);
            }
        }
        // zero matrix, padded
        let f = rank_factors(&PsdMatrix::zeros(2), 2, &t).unwrap();
        assert_eq!(f, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        // rank too high
        assert!(rank_factors(&PsdMatrix::identity(3), 2, &t).is_err());
    }

    #[test]
    fn json_roundtrip_enforces_symmetry() {
        let t = tols();
        let m: SymmetricMatrix<f64> =
            symmetric_from_json(r#"{"p":2,"data":[1.0,0.5,0.5,2.0]}"#, &t).unwrap();
        assert_eq!(m.at(0, 1), 0.5);
        let s = symmetric_to_json(&m);
        let back: SymmetricMatrix<f64> = symmetric_from_json(&s, &t).unwrap();
        assert_eq!(back, m);

        let bad = symmetric_from_json::<f64>(r#"{"p":2,"data":[1.0,0.5,0.1,2.0]}"#, &t);
        assert!(bad.is_err());
    }
}
