//! Small dense linear algebra: row-major matrices, LU solves (real and
//! complex), a Cholesky-based positive-semidefiniteness probe, and a Jacobi
//! eigensolver for symmetric matrices.
//!
//! Everything here targets the matrix sizes this crate actually produces
//! (Gram matrices up to a few hundred rows, irrep blocks up to 4x4), so the
//! implementations favor clarity and numerical robustness over asymptotics.

use num_complex::Complex;

use crate::{Error, Result, Scalar};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Mat { rows: n_rows, cols: n_cols, data: rows.concat() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Replaces the matrix with its symmetric part (A + A^T)/2.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let half = T::c(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn max_abs_asymmetry(&self) -> T {
        assert!(self.is_square());
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        dev
    }

    /// Extracts the square submatrix with the given row/column indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Mat::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `a x = b` by LU decomposition with partial pivoting.
///
/// Fails with [`Error::IllConditioned`] when a pivot underflows to the point
/// of being unusable.
pub fn solve<T: Scalar>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    let n = a.rows;
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = lu.data.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * T::epsilon() + T::min_positive_value();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tiny {
            return Err(Error::IllConditioned { pivot: best.as_f64() });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            x.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= factor * v;
            }
            x[i] = x[i] - factor * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= lu[(i, j)] * x[j];
        }
        x[i] = acc / lu[(i, i)];
    }
    Ok(x)
}

/// Returns true when `a + shift I` admits a Cholesky factorization, i.e.
/// when the minimum eigenvalue of `a` exceeds `-shift` (up to roundoff).
pub fn is_positive_semidefinite<T: Scalar>(a: &Mat<T>, shift: T) -> bool {
    assert!(a.is_square());
    let n = a.rows;
    let mut l = Mat::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            if i == j {
                s += shift;
            }
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= T::zero() {
                    return false;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    true
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &Mat<T>) -> Vec<T> {
    assert!(a.is_square());
    let n = a.rows;
    let mut m = a.clone();
    m.symmetrize();
    let tol = {
        let scale = m.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        scale * T::epsilon() * T::c(n as f64)
    };
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * T::c(1e-3) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::c(2.0) * apq);
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    eigs
}

/// Numerical rank: count of eigenvalues above `rel_tol * max |eigenvalue|`.
pub fn numerical_rank<T: Scalar>(a: &Mat<T>, rel_tol: T) -> usize {
    let eigs = symmetric_eigenvalues(a);
    let max = eigs.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if max == T::zero() {
        return 0;
    }
    eigs.iter().filter(|v| v.abs() > rel_tol * max).count()
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn mul(&self, other: &CMat<T>) -> CMat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat<T> {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    /// Kronecker product.
    pub fn kron(&self, other: &CMat<T>) -> CMat<T> {
        let (r1, c1, r2, c2) = (self.rows, self.cols, other.rows, other.cols);
        CMat::from_fn(r1 * r2, c1 * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn one_norm(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMat<T>> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in (k + 1)..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return Err(Error::Underdetermined);
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                    let tmp = inv[(k, j)];
                    inv[(k, j)] = inv[(p, j)];
                    inv[(p, j)] = tmp;
                }
            }
            let pivot = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= pivot;
                inv[(k, j)] /= pivot;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let factor = a[(i, k)];
                if factor.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let akj = a[(k, j)];
                    let ikj = inv[(k, j)];
                    a[(i, j)] -= factor * akj;
                    inv[(i, j)] -= factor * ikj;
                }
            }
        }
        Ok(inv)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Solves `a x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
        }
        let mut a = self.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in (k + 1)..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return Err(Error::Underdetermined);
            }
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                x.swap(k, p);
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let factor = a[(i, k)] / pivot;
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= factor * v;
                }
                let xk = x[k];
                x[i] -= factor * xk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= a[(i, j)] * x[j];
            }
            x[i] = acc / a[(i, i)];
        }
        Ok(x)
    }

    /// Reciprocal condition number estimate in the 1-norm.
    pub fn rcond(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => {
                let denom = (self.one_norm() * inv.one_norm()).as_f64();
                if denom == 0.0 {
                    0.0
                } else {
                    1.0 / denom
                }
            }
            Err(_) => 0.0,
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let a = Mat::from_rows(&[vec![4.0f64, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let x_true = [1.0f64, -2.0, 3.0];
        let b = a.matvec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (got, want) in x.iter().zip(x_true) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn psd_probe_distinguishes_signs() {
        let pd = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!(is_positive_semidefinite(&pd, 0.0));
        let indef = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(!is_positive_semidefinite(&indef, 1e-12));
        assert!(is_positive_semidefinite(&indef, 1.5));
    }

    #[test]
    fn jacobi_eigenvalues_match_hand_computation() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = Mat::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]);
        let eigs = symmetric_eigenvalues(&a);
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complex_inverse_round_trip() {
        let a = CMat::from_fn(3, 3, |i, j| {
            Complex::new((i * 3 + j) as f64 + if i == j { 5.0 } else { 0.0 }, (i as f64) - (j as f64))
        });
        let inv = a.inverse().unwrap();
        let prod = a.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)].re - want).abs() < 1e-12);
                assert!(prod[(i, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn complex_solve_matches_inverse() {
        let a = CMat::from_fn(4, 4, |i, j| {
            Complex::new(1.0 / (1.0 + (i + 2 * j) as f64), if i == j { 2.0 } else { 0.1 })
        });
        let b: Vec<Complex<f64>> = (0..4).map(|i| Complex::new(i as f64, 1.0 - i as f64)).collect();
        let x = a.solve(&b).unwrap();
        let inv = a.inverse().unwrap();
        for i in 0..4 {
            let via_inv: Complex<f64> = (0..4).map(|j| inv[(i, j)] * b[j]).sum();
            assert!((via_inv - x[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_counts_significant_eigenvalues() {
        // Rank-1 matrix vv^T with v = (1,1,1).
        let a = Mat::from_fn(3, 3, |_, _| 1.0);
        assert_eq!(numerical_rank(&a, 1e-10), 1);
        assert_eq!(numerical_rank(&Mat::<f64>::identity(5), 1e-10), 5);
    }
}
