//! Norms whose unit ball is the hull of K-sparse vectors in a symmetric-norm ball.

use crate::error::{check_finite, Error, Result};
use crate::linalg::{norm1, norm2, norm_inf, norm_p, sorted_profile};
use serde::Serialize;
use std::str::FromStr;

/// The base norm applied to K-sparse vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BaseNorm {
    L2,
    Linf,
    Lp(f64),
}

impl BaseNorm {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match *self {
            BaseNorm::L2 => norm2(v),
            BaseNorm::Linf => norm_inf(v),
            BaseNorm::Lp(p) => norm_p(v, p),
        }
    }

    pub fn dual_eval(&self, v: &[f64]) -> f64 {
        match *self {
            BaseNorm::L2 => norm2(v),
            BaseNorm::Linf => norm1(v),
            BaseNorm::Lp(p) => norm_p(v, p / (p - 1.0)),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BaseNorm::Lp(p) if !(p > 1.0 && p.is_finite()) => {
                Err(Error::input(format!("lp exponent must be in (1, ∞), got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// A maximizer of `βᵀu` over the dual unit ball, for descending `u ≥ 0`.
    fn dual_maximizer(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        match *self {
            BaseNorm::L2 => {
                let s = norm2(u);
                u.iter().map(|v| v / s).collect()
            }
            BaseNorm::Lp(p) => {
                let s = norm_p(u, p);
                u.iter().map(|v| (v / s).powf(p - 1.0)).collect()
            }
            BaseNorm::Linf => {
                let top = u[0];
                let ties = u.iter().take_while(|&&v| v >= top * (1.0 - 1e-12)).count();
                (0..n).map(|i| if i < ties { 1.0 / ties as f64 } else { 0.0 }).collect()
            }
        }
    }
}

impl FromStr for BaseNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = match s {
            "l2" => BaseNorm::L2,
            "linf" => BaseNorm::Linf,
            _ => {
                let p = s
                    .strip_prefix("lp:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::input(format!("unknown norm '{s}' (use l2, linf or lp:P)")))?;
                BaseNorm::Lp(p)
            }
        };
        norm.validate()?;
        Ok(norm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityCertificate {
    pub k: usize,
    /// `s_i = Σ_{j≥i} |x|_[j] / (K−i+1)` for `i = 1..K`.
    pub s: Vec<f64>,
    /// 1-based smallest minimizer of `s`.
    pub i_x: usize,
    pub delta: f64,
    pub u_x: Vec<f64>,
    pub beta_hat: Vec<f64>,
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
    pub c_norm: f64,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if !(1 < k && k < n) {
        return Err(Error::input(format!("K must satisfy 1 < K < n, got K={k}, n={n}")));
    }
    Ok(())
}

/// `s(x)` from the absolute descending rearrangement.
fn tail_averages(abs_desc: &[f64], k: usize) -> Vec<f64> {
    let n = abs_desc.len();
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + abs_desc[i];
    }
    (0..k).map(|i| tail[i] / (k - i) as f64).collect()
}

pub fn sparsity_certificate(x: &[f64], k: usize, norm: BaseNorm) -> Result<SparsityCertificate> {
    check_finite("x", x)?;
    norm.validate()?;
    let n = x.len();
    check_k(n, k)?;
    let a = sorted_profile(x)?.abs_descending;
    let s = tail_averages(&a, k);
    let mut ix = 0;
    for i in 1..k {
        if s[i] < s[ix] {
            ix = i;
        }
    }
    let delta = s[ix];
    let mut u_x = vec![0.0; n];
    u_x[..ix].copy_from_slice(&a[..ix]);
    u_x[ix..k].iter_mut().for_each(|v| *v = delta);

    let c_norm = norm.eval(&u_x);
    let beta_hat = if c_norm > 0.0 { norm.dual_maximizer(&u_x) } else { vec![0.0; n] };
    let avg = beta_hat[ix..k].iter().sum::<f64>() / (k - ix) as f64;
    let theta: Vec<f64> = (0..n)
        .map(|i| if i < ix { beta_hat[i] } else if i < k { avg } else { 0.0 })
        .collect();
    let chi: Vec<f64> = (0..n).map(|i| if i < ix { beta_hat[i] } else { avg }).collect();
    Ok(SparsityCertificate { k, s, i_x: ix + 1, delta, u_x, beta_hat, theta, chi, c_norm })
}

/// The norm whose unit ball is the hull of K-sparse vectors of unit base norm.
pub fn c_norm(x: &[f64], k: usize, norm: BaseNorm) -> Result<f64> {
    if norm == BaseNorm::Linf {
        check_finite("x", x)?;
        check_k(x.len(), k)?;
        return Ok(norm_inf(x).max(norm1(x) / k as f64));
    }
    Ok(sparsity_certificate(x, k, norm)?.c_norm)
}

/// Dual of the c-norm: the base dual norm of the K largest magnitudes.
pub fn c_dual_norm(beta: &[f64], k: usize, norm: BaseNorm) -> Result<f64> {
    check_finite("beta", beta)?;
    check_k(beta.len(), k)?;
    let a = sorted_profile(beta)?.abs_descending;
    Ok(norm.dual_eval(&a[..k]))
}

/// The integer `r ∈ {0..K−1}` with `|x|_[K−r−1] > Σ_{i≥K−r}|x|_[i]/(r+1) ≥ |x|_[K−r]`.
pub fn ksupport_split(x: &[f64], k: usize) -> Result<usize> {
    check_finite("x", x)?;
    check_k(x.len(), k)?;
    let a = sorted_profile(x)?.abs_descending;
    let n = a.len();
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        tail[i] = tail[i + 1] + a[i];
    }
    // `a` is 0-based, so |x|_[j] is a[j−1].
    let window = |r: usize| -> (f64, f64) {
        let mid = tail[k - r - 1] / (r + 1) as f64;
        let upper = if k - r - 1 == 0 { f64::INFINITY } else { a[k - r - 2] };
        (upper - mid, mid - a[k - r - 1])
    };
    let mut best = (0, f64::NEG_INFINITY);
    for r in 0..k {
        let (left, right) = window(r);
        if left > 0.0 && right >= 0.0 {
            return Ok(r);
        }
        let slack = left.min(right);
        if slack > best.1 {
            best = (r, slack);
        }
    }
    Ok(best.0)
}

/// Closed-form K-support norm.
pub fn k_support_norm(x: &[f64], k: usize) -> Result<f64> {
    let r = ksupport_split(x, k)?;
    let a = sorted_profile(x)?.abs_descending;
    let head: f64 = a[..k - r - 1].iter().map(|v| v * v).sum();
    let tail: f64 = a[k - r - 1..].iter().sum();
    Ok((head + tail * tail / (r + 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

const BOUNDARY_TOL: f64 = 1e-9;

pub(crate) fn classify(ratio: f64) -> Membership {
    if ratio > 1.0 + BOUNDARY_TOL {
        Membership::Outside
    } else if ratio < 1.0 - BOUNDARY_TOL {
        Membership::Inside
    } else {
        Membership::Boundary
    }
}

/// Position of `x` relative to the radius-`r` c-norm ball.
pub fn membership(x: &[f64], k: usize, norm: BaseNorm, radius: f64) -> Result<Membership> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input("radius must be positive"));
    }
    Ok(classify(c_norm(x, k, norm)? / radius))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

/// A cut `coefficientsᵀv ≤ 1` valid for the unit c-norm ball and violated by `x`.
pub fn separating_hyperplane(x: &[f64], k: usize, norm: BaseNorm) -> Result<Hyperplane> {
    let cert = sparsity_certificate(x, k, norm)?;
    if classify(cert.c_norm) != Membership::Outside {
        return Err(Error::NoSeparation);
    }
    let perm = sorted_profile(x)?.abs_permutation;
    let mut coefficients = vec![0.0; x.len()];
    for (pos, &src) in perm.iter().enumerate() {
        let sign = if x[src] < 0.0 { -1.0 } else { 1.0 };
        coefficients[src] = sign * cert.chi[pos];
    }
    Ok(Hyperplane { coefficients, rhs: 1.0 })
}

/// The descending K-sparse `u` of least base norm with `u ≥_wm |x|`.
pub fn sparsity_min_norm(x: &[f64], k: usize, norm: BaseNorm) -> Result<Vec<f64>> {
    Ok(sparsity_certificate(x, k, norm)?.u_x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> Vec<f64> {
        [27.0, 5.0, 4.0, 3.0, 2.0, 1.0].iter().map(|v| v / 28.0).collect()
    }

    #[test]
    fn worked_example() {
        let c = sparsity_certificate(&example(), 3, BaseNorm::L2).unwrap();
        let want_s = [28.0 / 56.0, 15.0 / 56.0, 20.0 / 56.0];
        for (a, b) in c.s.iter().zip(want_s) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(c.i_x, 2);
        assert!((c.delta - 15.0 / 56.0).abs() < 1e-12);
        assert!((c.c_norm - 1.0360).abs() < 5e-4);
        assert_eq!(ksupport_split(&example(), 3).unwrap(), 1);
    }

    #[test]
    fn sparse_input_keeps_norm() {
        let e1 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let c = sparsity_certificate(&e1, 3, BaseNorm::L2).unwrap();
        assert_eq!(c.u_x, e1.to_vec());
        assert_eq!(c.c_norm, 1.0);
        assert_eq!(k_support_norm(&e1, 3).unwrap(), 1.0);
    }

    #[test]
    fn linf_fast_path() {
        assert_eq!(membership(&[1.0, 1.0, 1.0], 2, BaseNorm::Linf, 1.0).unwrap(), Membership::Outside);
        assert_eq!(membership(&[0.0; 4], 2, BaseNorm::L2, 1.0).unwrap(), Membership::Inside);
    }

    #[test]
    fn k_range_checked() {
        assert!(sparsity_certificate(&[1.0, 2.0, 3.0], 3, BaseNorm::L2).is_err());
        assert!(sparsity_certificate(&[1.0, 2.0, 3.0], 1, BaseNorm::L2).is_err());
    }

    #[test]
    fn norm_parsing() {
        assert_eq!("lp:3".parse::<BaseNorm>().unwrap(), BaseNorm::Lp(3.0));
        assert!("lp:1".parse::<BaseNorm>().is_err());
        assert!("l7".parse::<BaseNorm>().is_err());
    }

    #[test]
    fn inside_point_has_no_cut() {
        assert!(matches!(
            separating_hyperplane(&[0.1, 0.1, 0.0, 0.0], 2, BaseNorm::L2),
            Err(Error::NoSeparation)
        ));
    }
}
