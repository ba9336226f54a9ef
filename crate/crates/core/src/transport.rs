//! The capacitated transportation LP `h(W)`, its dual and closed-form certificates.

use crate::error::{check_finite, Error, Result};
use crate::linalg::{sort_descending, Matrix};
use crate::model::{Cmp, ConicModel, LinExpr, Sense};
use crate::solvers::{solve_lp, Status};
use serde::Serialize;

fn check_params(n: usize, p: usize, q: usize, r: usize) -> Result<()> {
    if n == 0 || !(1..=n).contains(&p) || !(1..=n).contains(&q) {
        return Err(Error::input(format!("need 1 ≤ p, q ≤ n = {n}, got p={p}, q={q}")));
    }
    if r < 1 || r > (p * n).min(q * n) {
        return Err(Error::input(format!("r must be in 1..={}, got {r}", (p * n).min(q * n))));
    }
    Ok(())
}

fn check_weights(w: &Matrix) -> Result<usize> {
    if !w.is_square() {
        return Err(Error::input("weight matrix must be square"));
    }
    check_finite("W", w.as_slice())?;
    Ok(w.rows())
}

fn lp_value(model: ConicModel) -> Result<f64> {
    let sol = solve_lp(&model.seal()?)?;
    match sol.report.status {
        Status::Optimal => Ok(sol.report.objective),
        s => Err(Error::Solver(format!("transportation LP ended with status {s}"))),
    }
}

/// `max Σ W_ij t_ij` over row sums ≤ q, column sums ≤ p, total ≤ r, `0 ≤ t ≤ 1`.
pub fn h_primal(w: &Matrix, p: usize, q: usize, r: usize) -> Result<f64> {
    let n = check_weights(w)?;
    check_params(n, p, q, r)?;
    let mut m = ConicModel::new("transport_primal");
    let t: Vec<Vec<_>> = (0..n)
        .map(|i| (0..n).map(|j| m.add_var(format!("t{}_{}", i + 1, j + 1), 0.0, 1.0)).collect())
        .collect();
    for i in 0..n {
        m.add_row(format!("row{}", i + 1), LinExpr::sum(t[i].iter().copied()), Cmp::Le, q as f64);
        m.add_row(format!("col{}", i + 1), LinExpr::sum((0..n).map(|k| t[k][i])), Cmp::Le, p as f64);
    }
    m.add_row("total", LinExpr::sum(t.iter().flatten().copied()), Cmp::Le, r as f64);
    let mut obj = LinExpr::zero();
    for i in 0..n {
        for j in 0..n {
            obj.add_term(t[i][j], w[(i, j)]);
        }
    }
    m.set_objective(Sense::Maximize, obj);
    lp_value(m)
}

/// The dual LP, minimized directly over `(α, β, γ, δ) ≥ 0`.
pub fn h_dual(w: &Matrix, p: usize, q: usize, r: usize) -> Result<f64> {
    let n = check_weights(w)?;
    check_params(n, p, q, r)?;
    let mut m = ConicModel::new("transport_dual");
    let alpha: Vec<_> = (0..n).map(|i| m.nonneg_var(format!("alpha{}", i + 1))).collect();
    let beta: Vec<_> = (0..n).map(|j| m.nonneg_var(format!("beta{}", j + 1))).collect();
    let gamma = m.nonneg_var("gamma");
    let mut obj = LinExpr::term(gamma, r as f64);
    for i in 0..n {
        obj.add_term(alpha[i], q as f64).add_term(beta[i], p as f64);
    }
    for i in 0..n {
        for j in 0..n {
            let d = m.nonneg_var(format!("delta{}_{}", i + 1, j + 1));
            obj.add_term(d, 1.0);
            let e = LinExpr::sum([alpha[i], beta[j], gamma, d]);
            m.add_row(format!("cover{}_{}", i + 1, j + 1), e, Cmp::Ge, w[(i, j)]);
        }
    }
    m.set_objective(Sense::Minimize, obj);
    lp_value(m)
}

fn check_vector(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::input("weight vector is empty"));
    }
    check_finite("w", w)?;
    if w.iter().any(|&v| v < 0.0) {
        return Err(Error::input("weights must be nonnegative"));
    }
    Ok(())
}

/// `h(wwᵀ)` for `p = q = 1`: the `r` largest squared weights.
pub fn h_closed_diag(w: &[f64], r: usize) -> Result<f64> {
    check_vector(w)?;
    if r < 1 || r > w.len() {
        return Err(Error::input(format!("r must be in 1..={}, got {r}", w.len())));
    }
    Ok(sort_descending(w)[..r].iter().map(|v| v * v).sum())
}

/// `h(wwᵀ)` for `r = pq`.
pub fn h_closed_block(w: &[f64], p: usize, q: usize) -> Result<f64> {
    check_vector(w)?;
    check_params(w.len(), p, q, p * q)?;
    let s = sort_descending(w);
    Ok(s[..p].iter().sum::<f64>() * s[..q].iter().sum::<f64>())
}

/// A feasible point `(α, β, γ, δ)` of the dual LP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub delta: Matrix,
}

impl DualCertificate {
    pub fn objective(&self, p: usize, q: usize, r: usize) -> f64 {
        q as f64 * self.alpha.iter().sum::<f64>()
            + p as f64 * self.beta.iter().sum::<f64>()
            + r as f64 * self.gamma
            + self.delta.as_slice().iter().sum::<f64>()
    }

    /// Largest violation of `α_i + β_j + γ + δ_ij ≥ W_ij` or of nonnegativity.
    pub fn max_violation(&self, w: &Matrix) -> f64 {
        let n = self.alpha.len();
        let mut worst = (-self.gamma).max(0.0);
        for v in self.alpha.iter().chain(&self.beta).chain(self.delta.as_slice()) {
            worst = worst.max(-v);
        }
        for i in 0..n {
            for j in 0..n {
                let cover = self.alpha[i] + self.beta[j] + self.gamma + self.delta[(i, j)];
                worst = worst.max(w[(i, j)] - cover);
            }
        }
        worst
    }
}

fn check_sorted(w: &[f64]) -> Result<()> {
    check_vector(w)?;
    if w.windows(2).any(|p| p[0] < p[1]) {
        return Err(Error::input("weights must be sorted in descending order"));
    }
    Ok(())
}

/// Dual point attaining `h_closed_block` for descending `w ≥ 0`.
pub fn dual_certificate_block(w: &[f64], p: usize, q: usize) -> Result<DualCertificate> {
    check_sorted(w)?;
    let n = w.len();
    check_params(n, p, q, p * q)?;
    let (wp, wq) = (w[p - 1], w[q - 1]);
    let alpha = w.iter().map(|&wi| ((wi - wp) * wq).max(0.0)).collect();
    let beta = w.iter().map(|&wj| (wp * (wj - wq)).max(0.0)).collect();
    let mut delta = Matrix::zeros(n, n);
    for i in 0..p {
        for j in 0..q {
            delta[(i, j)] = (w[i] - wp) * (w[j] - wq);
        }
    }
    Ok(DualCertificate { alpha, beta, gamma: wp * wq, delta })
}

/// Dual point attaining `h_closed_diag` for descending `w ≥ 0`.
pub fn dual_certificate_diag(w: &[f64], r: usize) -> Result<DualCertificate> {
    check_sorted(w)?;
    let n = w.len();
    check_params(n, 1, 1, r)?;
    let wr2 = w[r - 1] * w[r - 1];
    let half: Vec<f64> = w.iter().map(|&wi| ((wi * wi - wr2) / 2.0).max(0.0)).collect();
    Ok(DualCertificate { alpha: half.clone(), beta: half, gamma: wr2, delta: Matrix::zeros(n, n) })
}

/// `wwᵀ`.
pub fn outer(w: &[f64]) -> Matrix {
    let n = w.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = w[i] * w[j];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        let w = [3.0, 2.0, 1.0];
        let ww = outer(&w);
        assert!((h_primal(&ww, 1, 1, 2).unwrap() - 13.0).abs() < 1e-9);
        assert!((h_primal(&ww, 2, 1, 2).unwrap() - 15.0).abs() < 1e-9);
        assert!((h_dual(&ww, 2, 1, 2).unwrap() - 15.0).abs() < 1e-9);
        assert_eq!(h_closed_diag(&w, 2).unwrap(), 13.0);
        assert_eq!(h_closed_block(&w, 2, 1).unwrap(), 15.0);
        assert_eq!(h_closed_block(&w, 3, 3).unwrap(), 36.0);
    }

    #[test]
    fn block_certificate_pattern() {
        let c = dual_certificate_block(&[3.0, 2.0, 1.0], 2, 1).unwrap();
        assert_eq!(c.gamma, 6.0);
        assert_eq!(c.alpha, vec![3.0, 0.0, 0.0]);
        assert_eq!(c.beta, vec![0.0, 0.0, 0.0]);
        assert_eq!(c.objective(2, 1, 2), 15.0);
        assert!(c.max_violation(&outer(&[3.0, 2.0, 1.0])) <= 0.0);
        let flat = dual_certificate_block(&[2.0; 4], 2, 3).unwrap();
        assert!(flat.delta.as_slice().iter().all(|&d| d == 0.0));
        assert!(dual_certificate_block(&[1.0, 2.0], 1, 1).is_err());
    }
}
