//! Tiny dense linear algebra for hull checks: a row-major matrix, one-sided
//! Jacobi SVD, minimum-norm least squares and Lawson–Hanson NNLS.
//!
//! Problem sizes here are a handful of anchors by a handful of outcomes, so
//! everything is O(n³) and allocation-happy.

use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, sqrt};

/// Singular values below this fraction of the largest are treated as zero.
const RANK_RTOL: f64 = 1e-12;
const JACOBI_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix whose columns are the given vectors (all the same length).
    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Sub-matrix made of the listed columns, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for (k, &j) in cols.iter().enumerate() {
            for i in 0..self.rows {
                m[(i, k)] = self[(i, j)];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    /// `Aᵀ y`.
    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)] * y[i]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(fabs(*v)))
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD `A = U Σ Vᵀ`, with `U` stored unnormalized as `U Σ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Columns are `σ_j u_j`.
    us: Matrix,
    v: Matrix,
    sigma: Vec<f64>,
}

impl Svd {
    /// One-sided (Hestenes) Jacobi. Accurate for the small, possibly
    /// rank-deficient matrices this crate feeds it.
    pub fn new(a: &Matrix) -> Self {
        let (m, n) = (a.rows, a.cols);
        let mut us = a.clone();
        let mut v = Matrix::zeros(n, n);
        for j in 0..n {
            v[(j, j)] = 1.0;
        }
        for _ in 0..JACOBI_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                    for i in 0..m {
                        let (x, y) = (us[(i, p)], us[(i, q)]);
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    if gamma == 0.0 || fabs(gamma) <= f64::EPSILON * sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (fabs(zeta) + sqrt(1.0 + zeta * zeta));
                    let c = 1.0 / sqrt(1.0 + t * t);
                    let s = c * t;
                    for i in 0..m {
                        let (x, y) = (us[(i, p)], us[(i, q)]);
                        us[(i, p)] = c * x - s * y;
                        us[(i, q)] = s * x + c * y;
                    }
                    for i in 0..n {
                        let (x, y) = (v[(i, p)], v[(i, q)]);
                        v[(i, p)] = c * x - s * y;
                        v[(i, q)] = s * x + c * y;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma = (0..n)
            .map(|j| sqrt((0..m).map(|i| us[(i, j)] * us[(i, j)]).sum()))
            .collect();
        Self { us, v, sigma }
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    fn cutoff(&self) -> f64 {
        let max = self.sigma.iter().fold(0.0f64, |m, s| m.max(*s));
        max * RANK_RTOL
    }

    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.sigma.iter().filter(|s| **s > cut && **s > 0.0).count()
    }

    /// Minimum-norm least-squares solution `x = A⁺ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.v.rows;
        let cut = self.cutoff();
        let mut x = vec![0.0; n];
        for (j, &s) in self.sigma.iter().enumerate() {
            if s <= cut || s == 0.0 {
                continue;
            }
            let coef = (0..self.us.rows).map(|i| self.us[(i, j)] * b[i]).sum::<f64>() / (s * s);
            for (k, xk) in x.iter_mut().enumerate() {
                *xk += coef * self.v[(k, j)];
            }
        }
        x
    }

    /// Orthonormal basis of the null space of `A`, as columns.
    pub fn null_space(&self) -> Vec<Vec<f64>> {
        let cut = self.cutoff();
        (0..self.sigma.len())
            .filter(|&j| self.sigma[j] <= cut || self.sigma[j] == 0.0)
            .map(|j| self.v.column(j))
            .collect()
    }
}

/// `argmin ‖Ax − b‖` with minimum `‖x‖` among minimizers.
pub fn lstsq_min_norm(a: &Matrix, b: &[f64]) -> Vec<f64> {
    Svd::new(a).solve(b)
}

/// Lawson–Hanson nonnegative least squares: `argmin ‖Ax − b‖` over `x ≥ 0`.
pub fn nnls(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.cols;
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let tol = 10.0 * f64::EPSILON * a.max_abs().max(1.0) * (a.rows.max(n) as f64) * (1.0 + max_abs(b));
    let max_outer = 3 * n + 10;

    let gradient = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        a.tmul_vec(&r)
    };

    for _ in 0..max_outer {
        let w = gradient(&x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        for _ in 0..max_outer {
            let cols: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let z_p = lstsq_min_norm(&a.select_columns(&cols), b);
            let mut z = vec![0.0; n];
            for (&k, &v) in cols.iter().zip(&z_p) {
                z[k] = v;
            }
            if cols.iter().all(|&k| z[k] > 0.0) {
                x = z;
                break;
            }
            // step back toward x until the first passive variable hits zero
            let step = cols
                .iter()
                .filter(|&&k| z[k] <= 0.0)
                .map(|&k| x[k] / (x[k] - z[k]))
                .fold(1.0f64, f64::min);
            for k in 0..n {
                x[k] += step * (z[k] - x[k]);
            }
            for &k in &cols {
                if x[k] <= tol {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
            if !passive.iter().any(|p| *p) {
                break;
            }
        }
    }
    x
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(fabs(*x)))
}

/// Cholesky factor of a symmetric matrix, `None` if not positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d.is_nan() || d <= 0.0 {
            return None;
        }
        let djj = sqrt(d);
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn svd_reconstructs_and_finds_rank() {
        let a = Matrix::from_rows(3, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let svd = Svd::new(&a);
        assert_eq!(svd.rank(), 2);
        let mut sv = svd.singular_values().to_vec();
        sv.sort_by(|a, b| b.total_cmp(a));
        // reference values from numpy.linalg.svd
        assert!((sv[0] - 16.84810335261421).abs() < 1e-12);
        assert!((sv[1] - 1.0683695145547099).abs() < 1e-12);
        assert_eq!(svd.null_space().len(), 1);
        let ns = &svd.null_space()[0];
        assert!(max_abs(&a.mul_vec(ns)) < 1e-12);
    }

    #[test]
    fn min_norm_splits_duplicate_columns() {
        let a = Matrix::from_columns(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        let x = lstsq_min_norm(&a, &[0.5, 0.5]);
        assert!(close(&x, &[0.5, 0.25, 0.25], 1e-14), "{x:?}");
    }

    #[test]
    fn lstsq_on_wide_and_tall_systems() {
        let tall = Matrix::from_rows(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        // normal equations: [[2,1],[1,2]] x = [1+3, 2+3]
        let x = lstsq_min_norm(&tall, &[1.0, 2.0, 3.0]);
        assert!(close(&x, &[1.0, 2.0], 1e-13), "{x:?}");
        let wide = Matrix::from_rows(1, 2, vec![1.0, 1.0]);
        assert!(close(&lstsq_min_norm(&wide, &[2.0]), &[1.0, 1.0], 1e-14));
    }

    #[test]
    fn nnls_clamps_negative_unconstrained_solution() {
        // unconstrained solution is (2, -1); constrained optimum drops x2
        let a = Matrix::from_rows(2, 2, vec![1.0, 1.0, 0.0, 1.0]);
        let x = nnls(&a, &[1.0, -1.0]);
        assert!(close(&x, &[1.0, 0.0], 1e-12), "{x:?}");
    }

    #[test]
    fn nnls_exact_for_cone_members() {
        let a = Matrix::from_columns(&[&[0.7, 0.2, 0.1], &[0.1, 0.8, 0.1], &[0.2, 0.2, 0.6], &[0.7, 0.2, 0.1]]);
        let w = [0.3, 0.2, 0.5, 0.0];
        let b = a.mul_vec(&w);
        let x = nnls(&a, &b);
        assert!(x.iter().all(|v| *v >= 0.0));
        assert!(max_abs(&a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>()) < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let pd = Matrix::from_rows(2, 2, vec![6.0, 3.0, 3.0, 6.0]);
        assert!(cholesky(&pd).is_some());
        let indef = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky(&indef).is_none());
    }
}
