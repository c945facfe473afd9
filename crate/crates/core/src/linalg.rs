//! Fixed-size 3-vector and 3×3 matrix algebra.
//!
//! Everything here is small and dense. The singular value decomposition
//! (one-sided Jacobi on columns) and the symmetric eigensolver (cyclic
//! Jacobi rotations) are deliberately separate algorithms so that results
//! obtained through one can be checked against the other.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Column 3-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vec3<T>(pub [T; 3]);

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }

    pub fn zeros() -> Self {
        Self([T::zero(); 3])
    }

    /// Unit vector along coordinate axis `k`.
    pub fn unit(k: usize) -> Self {
        let mut v = Self::zeros();
        v.0[k] = T::one();
        v
    }

    pub fn x(&self) -> T {
        self.0[0]
    }

    pub fn y(&self) -> T {
        self.0[1]
    }

    pub fn z(&self) -> T {
        self.0[2]
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Self) -> Self {
        let [a0, a1, a2] = self.0;
        let [b0, b1, b2] = other.0;
        Self([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }

    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|v| v * s))
    }

    pub fn sum(&self) -> T {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn cast<U: Real>(&self) -> Vec3<U> {
        Vec3(self.0.map(|v| U::lit(v.as_f64())))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|v| -v))
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from(v: [T; 3]) -> Self {
        Self(v)
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3<T> {
    pub rows: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn from_rows(rows: [[T; 3]; 3]) -> Self {
        Self { rows }
    }

    pub fn from_row_vectors(rows: [Vec3<T>; 3]) -> Self {
        Self { rows: rows.map(|r| r.0) }
    }

    pub fn zeros() -> Self {
        Self { rows: [[T::zero(); 3]; 3] }
    }

    pub fn identity() -> Self {
        Self::from_diagonal([T::one(); 3])
    }

    pub fn from_diagonal(d: [T; 3]) -> Self {
        let mut m = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            m.rows[i][i] = v;
        }
        m
    }

    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3(self.rows[i])
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        Vec3([self.rows[0][j], self.rows[1][j], self.rows[2][j]])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                t.rows[j][i] = self.rows[i][j];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        Vec3([self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v)])
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.rows[i][j] = (0..3).map(|k| self.rows[i][k] * other.rows[k][j]).sum();
            }
        }
        m
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows.map(|r| r.map(|v| v * s)) }
    }

    /// Determinant by cofactor expansion along the first row.
    pub fn det(&self) -> T {
        let m = &self.rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Solves `self · X = rhs` by Gaussian elimination with partial pivoting.
    ///
    /// Returns `None` when a pivot is exactly zero or the result is not finite.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let mut a = self.rows;
        let mut b = rhs.rows;
        for col in 0..3 {
            let pivot = (col..3)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
            if a[pivot][col] == T::zero() {
                return None;
            }
            a.swap(col, pivot);
            b.swap(col, pivot);
            for r in col + 1..3 {
                let f = a[r][col] / a[col][col];
                for k in col..3 {
                    a[r][k] = a[r][k] - f * a[col][k];
                }
                for k in 0..3 {
                    b[r][k] = b[r][k] - f * b[col][k];
                }
            }
        }
        let mut x = [[T::zero(); 3]; 3];
        for r in (0..3).rev() {
            for k in 0..3 {
                let mut acc = b[r][k];
                for c in r + 1..3 {
                    acc = acc - a[r][c] * x[c][k];
                }
                x[r][k] = acc / a[r][r];
            }
        }
        let x = Self { rows: x };
        x.is_finite().then_some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        self.solve(&Self::identity())
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.rows[i][j] - other.rows[i][j]).abs());
            }
        }
        m
    }

    pub fn cast<U: Real>(&self) -> Mat3<U> {
        Mat3 { rows: self.rows.map(|r| r.map(|v| U::lit(v.as_f64()))) }
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.mul_mat(&rhs)
    }
}

impl<T: Real> Mul<Vec3<T>> for Mat3<T> {
    type Output = Vec3<T>;
    fn mul(self, rhs: Vec3<T>) -> Vec3<T> {
        self.mul_vec(&rhs)
    }
}

/// Singular value decomposition `M = U · diag(σ) · Vᵀ`, σ descending.
#[derive(Clone, Copy, Debug)]
pub struct Svd<T> {
    pub u: Mat3<T>,
    pub sigma: [T; 3],
    pub v: Mat3<T>,
}

const MAX_SWEEPS: usize = 64;

/// One-sided Jacobi SVD.
///
/// Orthogonalizes the columns of `m` by plane rotations accumulated in `V`;
/// the final column norms are the singular values.
pub fn svd<T: Real>(m: &Mat3<T>) -> Svd<T> {
    let mut w = *m;
    let mut v = Mat3::identity();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
            for i in 0..3 {
                alpha = alpha + w.rows[i][p] * w.rows[i][p];
                beta = beta + w.rows[i][q] * w.rows[i][q];
                gamma = gamma + w.rows[i][p] * w.rows[i][q];
            }
            if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (gamma + gamma);
            let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
            let c = T::one() / (T::one() + t * t).sqrt();
            let s = c * t;
            for mat in [&mut w, &mut v] {
                for i in 0..3 {
                    let xp = mat.rows[i][p];
                    let xq = mat.rows[i][q];
                    mat.rows[i][p] = c * xp - s * xq;
                    mat.rows[i][q] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms = [0, 1, 2].map(|j| w.column(j).norm());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = Mat3::zeros();
    let mut v_sorted = Mat3::zeros();
    let mut sigma = [T::zero(); 3];
    for (k, &j) in order.iter().enumerate() {
        sigma[k] = norms[j];
        for i in 0..3 {
            v_sorted.rows[i][k] = v.rows[i][j];
            if norms[j] > T::zero() {
                u.rows[i][k] = w.rows[i][j] / norms[j];
            }
        }
    }
    Svd { u, sigma, v: v_sorted }
}

/// Eigen-decomposition of a symmetric matrix: `values[k]` pairs with
/// column `k` of `vectors`. Values are sorted descending.
#[derive(Clone, Copy, Debug)]
pub struct SymmetricEigen<T> {
    pub values: [T; 3],
    pub vectors: Mat3<T>,
}

/// Cyclic Jacobi eigensolver for symmetric 3×3 matrices.
///
/// Only the upper triangle of `m` is trusted; the lower one is mirrored.
pub fn symmetric_eigen<T: Real>(m: &Mat3<T>) -> SymmetricEigen<T> {
    let mut a = *m;
    for i in 0..3 {
        for j in 0..i {
            a.rows[i][j] = a.rows[j][i];
        }
    }
    let mut q = Mat3::identity();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let off = a.rows[0][1].abs() + a.rows[0][2].abs() + a.rows[1][2].abs();
        let diag = a.rows[0][0].abs() + a.rows[1][1].abs() + a.rows[2][2].abs();
        if off == T::zero() || off <= eps * eps * diag {
            break;
        }
        for (p, r) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a.rows[p][r];
            if apq == T::zero() {
                continue;
            }
            let theta = (a.rows[r][r] - a.rows[p][p]) / (apq + apq);
            let t = if theta.is_infinite() {
                T::zero()
            } else {
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                sign / (theta.abs() + (theta * theta + T::one()).sqrt())
            };
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            // A ← Gᵀ A G with G the rotation in the (p, r) plane.
            for k in 0..3 {
                let akp = a.rows[k][p];
                let akr = a.rows[k][r];
                a.rows[k][p] = c * akp - s * akr;
                a.rows[k][r] = s * akp + c * akr;
            }
            for k in 0..3 {
                let apk = a.rows[p][k];
                let ark = a.rows[r][k];
                a.rows[p][k] = c * apk - s * ark;
                a.rows[r][k] = s * apk + c * ark;
            }
            for k in 0..3 {
                let qkp = q.rows[k][p];
                let qkr = q.rows[k][r];
                q.rows[k][p] = c * qkp - s * qkr;
                q.rows[k][r] = s * qkp + c * qkr;
            }
        }
    }

    let diag = [a.rows[0][0], a.rows[1][1], a.rows[2][2]];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| diag[y].partial_cmp(&diag[x]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vectors = Mat3::zeros();
    let mut values = [T::zero(); 3];
    for (k, &j) in order.iter().enumerate() {
        values[k] = diag[j];
        for i in 0..3 {
            vectors.rows[i][k] = q.rows[i][j];
        }
    }
    SymmetricEigen { values, vectors }
}
