//! Membership in matrix hulls described through singular values or eigenvalues.

use crate::error::{Error, Result};
use crate::ksupport::Membership;
use crate::linalg::{singular_values, sym_eigenvalues, Matrix};

/// Applies a sign- and permutation-invariant vector oracle to `σ(M)`.
pub fn sv_hull_membership<F>(m: &Matrix, oracle: F) -> Result<Membership>
where
    F: Fn(&[f64]) -> Result<Membership>,
{
    oracle(&singular_values(m)?)
}

/// Nuclear norm at most `rK` and spectral norm at most `r`.
pub fn hiriart_membership(m: &Matrix, k: usize, r: f64) -> Result<bool> {
    let sv = singular_values(m)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::input("radius must be positive"));
    }
    if k < 1 || k > sv.len() {
        return Err(Error::input(format!("K must be in 1..={}, got {k}", sv.len())));
    }
    let tol = 1e-9 * r;
    let nuclear: f64 = sv.iter().sum();
    Ok(nuclear <= r * k as f64 + tol && sv[0] <= r + tol)
}

/// Applies a permutation-invariant vector oracle to `λ(M)`, descending.
pub fn eig_hull_membership<F>(m: &Matrix, oracle: F) -> Result<Membership>
where
    F: Fn(&[f64]) -> Result<Membership>,
{
    if !m.is_symmetric() {
        return Err(Error::input("matrix must be symmetric"));
    }
    oracle(&sym_eigenvalues(m)?)
}
