//! Dense square-matrix kernel: arithmetic, LU factorization, Cholesky, and a
//! cyclic Jacobi eigensolver for symmetric input. Everything here is sized for
//! small p (the rest of the crate runs it inside Monte Carlo loops, so the
//! routines avoid allocation where it is cheap to do so).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense p x p matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    p: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(p: usize) -> Self {
        Self { p, data: vec![T::zero(); p * p] }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = Self::zeros(p);
        for i in 0..p {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(p: usize, data: Vec<T>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Dimension("dimension must be at least 1".into()));
        }
        if data.len() != p * p {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {p}x{p} matrix, got {}",
                p * p,
                data.len()
            )));
        }
        Ok(Self { p, data })
    }

    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(p);
        for i in 0..p {
            for j in 0..p {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.p + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.p + j] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.p, |i, j| self.at(j, i))
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect();
        Self { p: self.p, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        Self { p: self.p, data }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { p: self.p, data: self.data.iter().map(|a| *a * s).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        let p = self.p;
        let mut out = Self::zeros(p);
        for i in 0..p {
            for k in 0..p {
                let a = self.at(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..p {
                    out.data[i * p + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    /// a * b^T without forming the transpose.
    pub fn mul_transposed(&self, other: &Self) -> Self {
        let p = self.p;
        Self::from_fn(p, |i, j| {
            let mut s = T::zero();
            for k in 0..p {
                s = s + self.at(i, k) * other.at(j, k);
            }
            s
        })
    }

    pub fn trace(&self) -> T {
        (0..self.p).map(|i| self.at(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|a| *a * *a).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Symmetric part (a + a^T)/2.
    pub fn symmetrize(&self) -> Self {
        let half = T::from_f64_c(0.5);
        Self::from_fn(self.p, |i, j| (self.at(i, j) + self.at(j, i)) * half)
    }

    /// LU factorization with partial pivoting; None if numerically singular.
    fn lu(&self) -> Option<Lu<T>> {
        let p = self.p;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut sign = T::one();
        for col in 0..p {
            let mut pivot = col;
            let mut best = a[col * p + col].abs();
            for row in col + 1..p {
                let v = a[row * p + col].abs();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return None;
            }
            if pivot != col {
                for j in 0..p {
                    a.swap(col * p + j, pivot * p + j);
                }
                perm.swap(col, pivot);
                sign = -sign;
            }
            let d = a[col * p + col];
            for row in col + 1..p {
                let f = a[row * p + col] / d;
                a[row * p + col] = f;
                for j in col + 1..p {
                    let upper = a[col * p + j];
                    a[row * p + j] = a[row * p + j] - f * upper;
                }
            }
        }
        Some(Lu { p, a, perm, sign })
    }

    pub fn det(&self) -> T {
        match self.lu() {
            Some(lu) => lu.det(),
            None => T::zero(),
        }
    }

    /// Solve a X = b for square right-hand side b.
    pub fn solve(&self, b: &Self) -> Result<Self> {
        let lu = self.lu().ok_or(Error::SingularTransform)?;
        Ok(lu.solve(b))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.p))
    }

    /// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Self> {
        let p = self.p;
        let mut l = Self::zeros(p);
        for i in 0..p {
            for j in 0..=i {
                let mut s = self.at(i, j);
                for k in 0..j {
                    s = s - l.at(i, k) * l.at(j, k);
                }
                if i == j {
                    if s <= T::zero() {
                        return Err(Error::NotPd(format!(
                            "Cholesky pivot {} at index {i} is non-positive",
                            s.to_f64().unwrap_or(f64::NAN)
                        )));
                    }
                    l.set(i, j, s.sqrt());
                } else {
                    l.set(i, j, s / l.at(j, j));
                }
            }
        }
        Ok(l)
    }
}

struct Lu<T> {
    p: usize,
    a: Vec<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Real> Lu<T> {
    fn det(&self) -> T {
        let mut d = self.sign;
        for i in 0..self.p {
            d = d * self.a[i * self.p + i];
        }
        d
    }

    fn solve(&self, b: &SquareMatrix<T>) -> SquareMatrix<T> {
        let p = self.p;
        let mut x = SquareMatrix::zeros(p);
        for col in 0..p {
            // forward substitution on the permuted rhs
            let mut y = vec![T::zero(); p];
            for i in 0..p {
                let mut s = b.at(self.perm[i], col);
                for k in 0..i {
                    s = s - self.a[i * p + k] * y[k];
                }
                y[i] = s;
            }
            // back substitution
            for i in (0..p).rev() {
                let mut s = y[i];
                for k in i + 1..p {
                    s = s - self.a[i * p + k] * x.at(k, col);
                }
                x.set(i, col, s / self.a[i * p + i]);
            }
        }
        x
    }
}

/// Eigendecomposition of a symmetric matrix: `values` ascending, `vectors`
/// orthogonal with eigenvectors in columns, so A = V diag(values) V^T.
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: SquareMatrix<T>,
}

impl<T: Real> Eigen<T> {
    /// V diag(f(values)) V^T.
    pub fn reassemble(&self, f: impl Fn(T) -> T) -> SquareMatrix<T> {
        let p = self.vectors.p();
        let mapped: Vec<T> = self.values.iter().map(|l| f(*l)).collect();
        SquareMatrix::from_fn(p, |i, j| {
            let mut s = T::zero();
            for k in 0..p {
                s = s + self.vectors.at(i, k) * mapped[k] * self.vectors.at(j, k);
            }
            s
        })
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// max |eigenvalue| (spectral norm for symmetric input).
    pub fn spectral_norm(&self) -> T {
        self.min().abs().max(self.max().abs())
    }
}

const MAX_JACOBI_SWEEPS: usize = 64;

/// Cyclic Jacobi eigensolver. The input is read as symmetric (only the values
/// actually stored are used after an initial symmetrization).
pub fn symmetric_eigen<T: Real>(m: &SquareMatrix<T>) -> Eigen<T> {
    let p = m.p();
    let mut a = m.symmetrize();
    let mut v = SquareMatrix::identity(p);

    if p == 1 {
        return Eigen { values: vec![a.at(0, 0)], vectors: v };
    }

    let scale = a.max_abs().max(T::one());
    let stop = T::epsilon() * scale * T::from_f64_c(p as f64);

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = T::zero();
        for i in 0..p {
            for j in i + 1..p {
                off = off.max(a.at(i, j).abs());
            }
        }
        if off <= stop {
            break;
        }
        for i in 0..p {
            for j in i + 1..p {
                let aij = a.at(i, j);
                if aij.abs() <= T::epsilon() * stop {
                    continue;
                }
                let tau = (a.at(j, j) - a.at(i, i)) / (aij + aij);
                let t = if tau.is_finite() {
                    let s = if tau >= T::zero() { T::one() } else { -T::one() };
                    s / (tau.abs() + (T::one() + tau * tau).sqrt())
                } else {
                    T::zero()
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                let aii = a.at(i, i);
                let ajj = a.at(j, j);
                a.set(i, i, aii - t * aij);
                a.set(j, j, ajj + t * aij);
                a.set(i, j, T::zero());
                a.set(j, i, T::zero());
                for k in 0..p {
                    if k == i || k == j {
                        continue;
                    }
                    let aki = a.at(k, i);
                    let akj = a.at(k, j);
                    a.set(k, i, c * aki - s * akj);
                    a.set(i, k, c * aki - s * akj);
                    a.set(k, j, s * aki + c * akj);
                    a.set(j, k, s * aki + c * akj);
                }
                for k in 0..p {
                    let vki = v.at(k, i);
                    let vkj = v.at(k, j);
                    v.set(k, i, c * vki - s * vkj);
                    v.set(k, j, s * vki + c * vkj);
                }
            }
        }
    }

    // sort ascending, permuting eigenvector columns alongside
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a.at(x, x).partial_cmp(&a.at(y, y)).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&k| a.at(k, k)).collect();
    let vectors = SquareMatrix::from_fn(p, |i, j| v.at(i, order[j]));
    Eigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn lu_det_and_solve() {
        let m = SquareMatrix::from_rows(3, vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        // det = 2*(6-1) - 1*(2-0) = 8
        assert_close(m.det(), 8.0, 1e-12);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                assert_close(prod.at(i, j), if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = SquareMatrix::from_rows(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(m.inverse().is_err());
        assert_eq!(m.det(), 0.0);
    }

    #[test]
    fn cholesky_roundtrip() {
        let m = SquareMatrix::from_rows(2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let l = m.cholesky().unwrap();
        let back = l.mul_transposed(&l);
        for i in 0..2 {
            for j in 0..2 {
                assert_close(back.at(i, j), m.at(i, j), 1e-12);
            }
        }
        let bad = SquareMatrix::from_rows(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(bad.cholesky().is_err());
    }

    #[test]
    fn jacobi_diagonalizes() {
        let m = SquareMatrix::from_rows(
            3,
            vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0],
        )
        .unwrap();
        let eig = symmetric_eigen(&m);
        // eigenvalues of the 1D Laplacian: 2 - sqrt(2), 2, 2 + sqrt(2)
        assert_close(eig.values[0], 2.0 - 2.0_f64.sqrt(), 1e-12);
        assert_close(eig.values[1], 2.0, 1e-12);
        assert_close(eig.values[2], 2.0 + 2.0_f64.sqrt(), 1e-12);
        let back = eig.reassemble(|l| l);
        for i in 0..3 {
            for j in 0..3 {
                assert_close(back.at(i, j), m.at(i, j), 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_f32() {
        let m = SquareMatrix::<f32>::from_rows(2, vec![4.0, 1.0, 1.0, 4.0]).unwrap();
        let eig = symmetric_eigen(&m);
        assert!((eig.values[0] - 3.0).abs() < 1e-5);
        assert!((eig.values[1] - 5.0).abs() < 1e-5);
    }
}
