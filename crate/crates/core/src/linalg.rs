//! Dense small-scale linear algebra.

use crate::error::{check_finite, Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite("matrix", &data)?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::input("ragged matrix rows"));
        }
        Matrix::from_row_major(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Exact symmetry, no tolerance.
    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm_p(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return norm_inf(x);
    }
    let m = norm_inf(x);
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// A vector with its descending and absolute descending rearrangements.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedProfile {
    pub source: Vec<f64>,
    pub descending: Vec<f64>,
    pub abs_descending: Vec<f64>,
    /// `descending[k] == source[permutation[k]]`.
    pub permutation: Vec<usize>,
    /// `abs_descending[k] == source[abs_permutation[k]].abs()`.
    pub abs_permutation: Vec<usize>,
}

impl SortedProfile {
    /// Scatter values given in descending order back to source positions.
    pub fn unsort(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; sorted.len()];
        for (k, &i) in self.permutation.iter().enumerate() {
            out[i] = sorted[k];
        }
        out
    }
}

pub fn sorted_profile(x: &[f64]) -> Result<SortedProfile> {
    if x.is_empty() {
        return Err(Error::input("empty vector"));
    }
    check_finite("x", x)?;
    let permutation = descending_order(x);
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let abs_permutation = descending_order(&abs);
    Ok(SortedProfile {
        descending: permutation.iter().map(|&i| x[i]).collect(),
        abs_descending: abs_permutation.iter().map(|&i| abs[i]).collect(),
        source: x.to_vec(),
        permutation,
        abs_permutation,
    })
}

/// Indices that sort `x` descending; ties keep index order.
pub fn descending_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    idx
}

pub fn sort_descending(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix,
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    if !a.is_symmetric() {
        return Err(Error::input("matrix is not symmetric"));
    }
    check_finite("matrix", a.as_slice())?;
    Ok(jacobi(a.as_slice(), a.rows(), true))
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_symmetric() {
        return Err(Error::input("matrix is not symmetric"));
    }
    check_finite("matrix", a.as_slice())?;
    Ok(jacobi(a.as_slice(), a.rows(), false).values)
}

pub(crate) fn jacobi(a_in: &[f64], n: usize, want_vectors: bool) -> SymEigen {
    let mut a = a_in.to_vec();
    let mut v = if want_vectors { Matrix::identity(n).data } else { Vec::new() };
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOL * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= target || total == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if want_vectors {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let order = descending_order(&diag);
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(if want_vectors { n } else { 0 }, if want_vectors { n } else { 0 });
    if want_vectors {
        for (col, &src) in order.iter().enumerate() {
            for r in 0..n {
                vectors[(r, col)] = v[r * n + src];
            }
        }
    }
    SymEigen { values, vectors }
}

/// Reassemble `Q diag(values) Qᵀ`.
pub fn reconstruct(e: &SymEigen) -> Matrix {
    let n = e.values.len();
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let lam = e.values[k];
        for i in 0..n {
            let qi = e.vectors[(i, k)] * lam;
            for j in 0..n {
                out[(i, j)] += qi * e.vectors[(j, k)];
            }
        }
    }
    out
}

/// Singular values, descending, via the smaller Gram matrix.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    check_finite("matrix", m.as_slice())?;
    let gram = if m.rows() >= m.cols() {
        m.transpose().matmul(m)
    } else {
        m.matmul(&m.transpose())
    };
    let gram = symmetrize(&gram);
    let ev = jacobi(gram.as_slice(), gram.rows(), false).values;
    Ok(ev.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// Average with the transpose so the result is exactly symmetric.
pub fn symmetrize(m: &Matrix) -> Matrix {
    let n = m.rows();
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// In-place dense Cholesky factor (lower). Fails when a pivot is not positive.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                s -= a[ri + k] * a[rj + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        let ri = i * n;
        for k in 0..i {
            s -= l[ri + k] * b[k];
        }
        b[i] = s / l[ri + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_of_mixed_signs() {
        let p = sorted_profile(&[1.0, -3.0, 2.0]).unwrap();
        assert_eq!(p.descending, vec![2.0, 1.0, -3.0]);
        assert_eq!(p.abs_descending, vec![3.0, 2.0, 1.0]);
        assert_eq!(p.unsort(&p.descending), p.source);
    }

    #[test]
    fn ties_keep_index_order() {
        let p = sorted_profile(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(p.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_nan() {
        assert!(sorted_profile(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn eigen_of_swap() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = sym_eigen(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_of_diagonal() {
        let e = sym_eigen(&Matrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors, Matrix::identity(2));
    }

    #[test]
    fn asymmetric_rejected() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(sym_eigen(&a).is_err());
    }

    #[test]
    fn singular_values_of_diagonal() {
        let s = singular_values(&Matrix::from_diag(&[2.0, -3.0])).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 2.0).abs() < 1e-14);
        assert_eq!(singular_values(&Matrix::zeros(3, 2)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn cholesky_round_trip() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        assert!(cholesky_in_place(&mut a, 2));
        let mut b = vec![2.0, 1.0];
        cholesky_solve(&a, 2, &mut b);
        assert!((4.0 * b[0] + 2.0 * b[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * b[0] + 3.0 * b[1] - 1.0).abs() < 1e-14);
    }
}
