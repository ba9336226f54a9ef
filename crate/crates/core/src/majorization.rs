//! Majorization predicates, transport matrices and Birkhoff decomposition.

use crate::error::{check_finite, Error, Result};
use crate::linalg::{sort_descending, Matrix};
use crate::model::{Cmp, ConicModel, LinExpr, Sense};
use crate::solvers::{solve_lp, Status};
use serde::{Deserialize, Serialize};

const MAJ_TOL: f64 = 1e-10;
const DS_TOL: f64 = 1e-12;
const SUPPORT_TOL: f64 = 1e-13;

fn check_pair(u: &[f64], x: &[f64]) -> Result<()> {
    if u.len() != x.len() {
        return Err(Error::input(format!("length mismatch: {} vs {}", u.len(), x.len())));
    }
    check_finite("u", u)?;
    check_finite("x", x)
}

/// Differences of descending partial sums, `Σ_{i≤j} u_[i] − Σ_{i≤j} x_[i]`, plus a scale.
fn prefix_gaps(u: &[f64], x: &[f64]) -> (Vec<f64>, f64) {
    let (us, xs) = (sort_descending(u), sort_descending(x));
    let (mut su, mut sx, mut scale) = (0.0, 0.0, 1.0f64);
    let gaps = us
        .iter()
        .zip(&xs)
        .map(|(a, b)| {
            su += a;
            sx += b;
            scale = scale.max(su.abs()).max(sx.abs());
            su - sx
        })
        .collect();
    (gaps, scale)
}

/// `u ≥_m x`.
pub fn majorizes(u: &[f64], x: &[f64]) -> Result<bool> {
    check_pair(u, x)?;
    let (gaps, scale) = prefix_gaps(u, x);
    let tol = MAJ_TOL * scale;
    let n = gaps.len();
    Ok(gaps[..n - 1].iter().all(|&g| g >= -tol) && gaps[n - 1].abs() <= tol)
}

/// `u ≥_wm x`: every descending partial sum of `u` dominates that of `x`.
pub fn weakly_majorizes(u: &[f64], x: &[f64]) -> Result<bool> {
    check_pair(u, x)?;
    let (gaps, scale) = prefix_gaps(u, x);
    Ok(gaps.iter().all(|&g| g >= -MAJ_TOL * scale))
}

/// `x` lies in the convex hull of the permutations of `u`.
pub fn in_permutahedron(x: &[f64], u: &[f64]) -> Result<bool> {
    majorizes(u, x)
}

/// Nonnegative square matrix whose rows and columns sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DoublyStochastic(Matrix);

impl DoublyStochastic {
    pub fn new(m: Matrix) -> Result<Self> {
        DoublyStochastic::with_tol(m, DS_TOL)
    }

    pub fn with_tol(m: Matrix, tol: f64) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::input("doubly stochastic matrix must be square and nonempty"));
        }
        let n = m.rows();
        for i in 0..n {
            let rs: f64 = m.row(i).iter().sum();
            let cs: f64 = (0..n).map(|k| m[(k, i)]).sum();
            if (rs - 1.0).abs() > tol || (cs - 1.0).abs() > tol {
                return Err(Error::input(format!("row or column {i} does not sum to one")));
            }
            if m.row(i).iter().any(|&v| v < 0.0) {
                return Err(Error::input(format!("row {i} has a negative entry")));
            }
        }
        Ok(DoublyStochastic(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DoublyStochastic {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        DoublyStochastic::new(Matrix::from_rows(&rows)?)
    }
}

impl From<DoublyStochastic> for Vec<Vec<f64>> {
    fn from(d: DoublyStochastic) -> Self {
        d.0.to_rows()
    }
}

/// A doubly stochastic `S` with `x = S·u`, found by LP feasibility.
pub fn transport_matrix(u: &[f64], x: &[f64]) -> Result<DoublyStochastic> {
    check_pair(u, x)?;
    if !majorizes(u, x)? {
        return Err(Error::Precondition("u does not majorize x".into()));
    }
    let n = u.len();
    let mut model = ConicModel::new("transport");
    let s: Vec<Vec<_>> = (0..n)
        .map(|i| (0..n).map(|j| model.nonneg_var(format!("S{}_{}", i + 1, j + 1))).collect())
        .collect();
    for i in 0..n {
        model.add_row(format!("row{}", i + 1), LinExpr::sum(s[i].iter().copied()), Cmp::Eq, 1.0);
        model.add_row(format!("col{}", i + 1), LinExpr::sum((0..n).map(|k| s[k][i])), Cmp::Eq, 1.0);
        let mut e = LinExpr::zero();
        for j in 0..n {
            e.add_term(s[i][j], u[j]);
        }
        model.add_row(format!("map{}", i + 1), e, Cmp::Eq, x[i]);
    }
    model.set_objective(Sense::Minimize, LinExpr::zero());
    let sol = solve_lp(&model.seal()?)?;
    match sol.report.status {
        Status::Optimal => {}
        Status::Infeasible => return Err(Error::Precondition("u does not majorize x".into())),
        other => return Err(Error::Solver(format!("transport LP ended with status {other}"))),
    }
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = sol.x[s[i][j].0].max(0.0);
        }
    }
    DoublyStochastic::new(m).map_err(|e| Error::Solver(format!("transport LP solution drifted: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffDecomposition {
    pub weights: Vec<f64>,
    /// `permutations[k][i] = j` means entry `(i, j)` of the k-th permutation matrix is one.
    pub permutations: Vec<Vec<usize>>,
}

impl BirkhoffDecomposition {
    pub fn reconstruct(&self, n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for (w, p) in self.weights.iter().zip(&self.permutations) {
            for (i, &j) in p.iter().enumerate() {
                m[(i, j)] += w;
            }
        }
        m
    }

    /// `Σ w_k P_k v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (w, p) in self.weights.iter().zip(&self.permutations) {
            for (i, &j) in p.iter().enumerate() {
                out[i] += w * v[j];
            }
        }
        out
    }
}

/// Perfect matching on `support` by augmenting paths; `match_col[j]` is the row matched to column `j`.
fn perfect_matching(support: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = support.len();
    let mut match_col: Vec<Option<usize>> = vec![None; n];

    fn augment(i: usize, support: &[Vec<bool>], seen: &mut [bool], match_col: &mut [Option<usize>]) -> bool {
        for j in 0..support.len() {
            if support[i][j] && !seen[j] {
                seen[j] = true;
                if match_col[j].is_none_or(|k| augment(k, support, seen, match_col)) {
                    match_col[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }

    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, support, &mut seen, &mut match_col) {
            return None;
        }
    }
    let mut row_to_col = vec![0; n];
    for (j, i) in match_col.iter().enumerate() {
        row_to_col[i.expect("matching is perfect")] = j;
    }
    Some(row_to_col)
}

pub fn birkhoff(s: &DoublyStochastic) -> Result<BirkhoffDecomposition> {
    let n = s.n();
    let mut r = s.matrix().clone();
    let mut weights = Vec::new();
    let mut permutations = Vec::new();
    loop {
        let mut any = false;
        for i in 0..n {
            for j in 0..n {
                if r[(i, j)] <= SUPPORT_TOL {
                    r[(i, j)] = 0.0;
                } else {
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
        if permutations.len() >= n * n {
            return Err(Error::Degenerate("Birkhoff decomposition exceeded n² terms".into()));
        }
        let support: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| r[(i, j)] > 0.0).collect()).collect();
        let perm = perfect_matching(&support)
            .ok_or_else(|| Error::Degenerate("no perfect matching on the residual support".into()))?;
        let w = perm.iter().enumerate().map(|(i, &j)| r[(i, j)]).fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            r[(i, j)] -= w;
        }
        weights.push(w);
        permutations.push(perm);
    }
    Ok(BirkhoffDecomposition { weights, permutations })
}
