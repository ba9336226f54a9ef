//! Convex envelopes of permutation-invariant functions over `[a, b]^n`.

use crate::error::{check_finite, Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_solve, sym_eigenvalues, Matrix};
use crate::majorization::{birkhoff, majorizes, transport_matrix};
use crate::model::{emit_descending_chain, emit_majorization, Cmp, ConicModel, LinExpr, Sense};
use crate::solvers::{solve_lp, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// The box `[lower, upper]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hypercube {
    pub lower: f64,
    pub upper: f64,
    pub dim: usize,
}

impl Hypercube {
    pub fn new(lower: f64, upper: f64, dim: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::input(format!("box needs finite a < b, got [{lower}, {upper}]")));
        }
        if dim == 0 {
            return Err(Error::input("box dimension must be positive"));
        }
        Ok(Hypercube { lower, upper, dim })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        check_finite("x", x)?;
        if x.len() != self.dim {
            return Err(Error::input(format!("point has {} coordinates, box has {}", x.len(), self.dim)));
        }
        if let Some(v) = x.iter().find(|&&v| v < self.lower || v > self.upper) {
            return Err(Error::input(format!("coordinate {v} outside [{}, {}]", self.lower, self.upper)));
        }
        Ok(())
    }

    /// Column `j` of the chain: `b` in the first `j` places, `a` elsewhere.
    pub fn chain_vertex(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| if i < j { self.upper } else { self.lower }).collect()
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        (0..1usize << self.dim)
            .map(|mask| {
                (0..self.dim)
                    .map(|i| if mask >> i & 1 == 1 { self.upper } else { self.lower })
                    .collect()
            })
            .collect()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dim).map(|_| rng.random_range(self.lower..self.upper)).collect()
    }
}

pub fn product(x: &[f64]) -> f64 {
    x.iter().product()
}

/// The point `u^s` with `s = Σ(x_i − a)`: full coordinates at `b`, one partial, the rest at `a`.
pub fn schur_point(x: &[f64], cube: &Hypercube) -> Result<Vec<f64>> {
    cube.check_point(x)?;
    let (a, w, n) = (cube.lower, cube.width(), cube.dim);
    let s: f64 = x.iter().map(|v| v - a).sum();
    let full = (1..n).filter(|&i| i as f64 * w < s).count();
    let u: Vec<f64> = (0..n)
        .map(|i| match i.cmp(&full) {
            std::cmp::Ordering::Less => cube.upper,
            std::cmp::Ordering::Equal => (a + s - w * full as f64).clamp(a, cube.upper),
            std::cmp::Ordering::Greater => a,
        })
        .collect();
    debug_assert!(majorizes(&u, x).unwrap_or(false));
    Ok(u)
}

/// Envelope of a Schur-concave, componentwise convex `phi` at `x`.
pub fn schur_envelope_value<F>(phi: F, x: &[f64], cube: &Hypercube) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    Ok(phi(&schur_point(x, cube)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub value: f64,
    /// Descending `u ≥_m x` attaining the value.
    pub u: Vec<f64>,
}

/// Envelope at `x` of a permutation-invariant `phi` whose envelope is generated by the box vertices.
pub fn vertex_envelope<F>(phi: F, x: &[f64], cube: &Hypercube) -> Result<EnvelopePoint>
where
    F: Fn(&[f64]) -> f64,
{
    cube.check_point(x)?;
    let n = cube.dim;
    let chain: Vec<f64> = (0..=n).map(|j| phi(&cube.chain_vertex(j))).collect();
    let mut m = ConicModel::new("envelope");
    let u: Vec<_> = (0..n)
        .map(|i| m.add_var(format!("u{}", i + 1), cube.lower, cube.upper))
        .collect();
    let ue: Vec<LinExpr> = u.iter().map(|&v| v.into()).collect();
    let xe: Vec<LinExpr> = x.iter().map(|&v| LinExpr::constant(v)).collect();
    emit_descending_chain(&mut m, &ue, "u");
    emit_majorization(&mut m, &ue, &xe, false, "maj")?;
    let mut obj = LinExpr::constant(chain[0]);
    for i in 0..n {
        let slope = (chain[i + 1] - chain[i]) / cube.width();
        obj.add_term(u[i], slope);
        obj.constant -= slope * cube.lower;
    }
    m.set_objective(Sense::Minimize, obj);
    let sol = solve_lp(&m.seal()?)?;
    if sol.report.status != Status::Optimal {
        return Err(Error::Solver(format!("envelope LP ended with status {}", sol.report.status)));
    }
    let u = u.iter().map(|v| sol.x[v.0]).collect();
    Ok(EnvelopePoint { value: sol.report.objective, u })
}

/// Convex envelope of `Π x_i` over the box.
pub fn multilinear_envelope(x: &[f64], cube: &Hypercube) -> Result<f64> {
    Ok(vertex_envelope(product, x, cube)?.value)
}

/// Lowest value of `w_n` in the recursive McCormick relaxation `w_k ≈ w_{k−1}·x_k`.
///
/// Variables are multiplied left to right.
pub fn mccormick_relax(x: &[f64], cube: &Hypercube) -> Result<f64> {
    cube.check_point(x)?;
    let (a, b) = (cube.lower, cube.upper);
    // Bounds of the partial product and the feasible interval of its relaxation at x.
    let (mut lo_b, mut hi_b) = (a, b);
    let (mut lo, mut hi) = (x[0], x[0]);
    for &xk in &x[1..] {
        let under = |w: f64| (lo_b * xk + a * w - lo_b * a).max(hi_b * xk + b * w - hi_b * b);
        let over = |w: f64| (hi_b * xk + a * w - hi_b * a).min(lo_b * xk + b * w - lo_b * b);
        let under_kink = (hi_b * b - lo_b * a - (hi_b - lo_b) * xk) / (b - a);
        let over_kink = (lo_b * b - hi_b * a - (lo_b - hi_b) * xk) / (b - a);
        let mut cands_lo = vec![lo, hi];
        if under_kink > lo && under_kink < hi {
            cands_lo.push(under_kink);
        }
        let mut cands_hi = vec![lo, hi];
        if over_kink > lo && over_kink < hi {
            cands_hi.push(over_kink);
        }
        let new_lo = cands_lo.into_iter().map(under).fold(f64::INFINITY, f64::min);
        let new_hi = cands_hi.into_iter().map(over).fold(f64::NEG_INFINITY, f64::max);
        let corners = [lo_b * a, lo_b * b, hi_b * a, hi_b * b];
        lo_b = corners.iter().copied().fold(f64::INFINITY, f64::min);
        hi_b = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo = new_lo;
        hi = new_hi;
    }
    Ok(lo)
}

/// Whether `(x, y)` lies in the hull of `{Π y_i^α ≥ Π x_j^β}` over `[a,b]^n × [c,d]^m`, for `mα ≤ β`.
pub fn monomial_hull_membership(
    x: &[f64],
    y: &[f64],
    x_cube: &Hypercube,
    y_cube: &Hypercube,
    alpha: f64,
    beta: f64,
) -> Result<bool> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::input("exponents must be positive"));
    }
    if x_cube.lower < 0.0 || y_cube.lower < 0.0 {
        return Err(Error::input("both boxes must lie in the nonnegative orthant"));
    }
    y_cube.check_point(y)?;
    let m = y.len() as f64;
    if m * alpha > beta {
        return Err(Error::Unsupported("monomial hull with mα > β needs the disjunctive lift".into()));
    }
    let u = schur_point(x, x_cube)?;
    let lhs: f64 = y.iter().map(|v| v.powf(1.0 / m)).product();
    let rhs: f64 = u.iter().map(|v| v.powf(beta / (m * alpha))).product();
    Ok(lhs >= rhs - 1e-12 * rhs.abs().max(1.0))
}

/// An affine underestimator `coefficientsᵀv + offset` of the envelope, tight at the input point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacetCut {
    pub coefficients: Vec<f64>,
    pub offset: f64,
    pub certifying_vertices: Vec<Vec<f64>>,
}

impl FacetCut {
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.coefficients.iter().zip(v).map(|(c, x)| c * x).sum::<f64>() + self.offset
    }
}

const WEIGHT_TOL: f64 = 1e-9;
const FIT_TOL: f64 = 1e-9;

/// Facet of the envelope of a multilinear, permutation-invariant `phi` through `(x, env(x))`.
pub fn facet_from_point<F>(x: &[f64], cube: &Hypercube, phi: F) -> Result<FacetCut>
where
    F: Fn(&[f64]) -> f64,
{
    cube.check_point(x)?;
    let at_bound = |v: f64| (v - cube.lower).abs() <= 1e-12 || (v - cube.upper).abs() <= 1e-12;
    if x.iter().all(|&v| at_bound(v)) {
        return vertex_facet(x, cube, &phi);
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|p, q| p.total_cmp(q));
    if sorted.windows(2).any(|w| w[1] - w[0] <= 1e-12) {
        return Err(Error::Precondition("point is not in general position (tied coordinates)".into()));
    }

    let env = vertex_envelope(&phi, x, cube)?;
    let u = &env.u;
    let n = cube.dim;
    let w = cube.width();
    // u = Σ_j γ_j · chain_vertex(j).
    let mut gamma = vec![0.0; n + 1];
    gamma[0] = (cube.upper - u[0]) / w;
    for j in 1..n {
        gamma[j] = (u[j - 1] - u[j]) / w;
    }
    gamma[n] = (u[n - 1] - cube.lower) / w;

    let s = transport_matrix(u, x)?;
    let decomposition = birkhoff(&s)?;
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for (pw, perm) in decomposition.weights.iter().zip(&decomposition.permutations) {
        for (j, g) in gamma.iter().enumerate() {
            if pw * g <= WEIGHT_TOL {
                continue;
            }
            let v: Vec<f64> = perm.iter().map(|&src| if src < j { cube.upper } else { cube.lower }).collect();
            if !vertices.contains(&v) {
                vertices.push(v);
            }
        }
    }
    fit_affine(&vertices, &phi, n)
}

/// Least-squares affine fit through `(v, phi(v))`, rejected unless it is exact and unique.
fn fit_affine<F: Fn(&[f64]) -> f64>(vertices: &[Vec<f64>], phi: &F, n: usize) -> Result<FacetCut> {
    let degenerate = || Error::DegenerateVertices { vertices: vertices.to_vec() };
    let k = n + 1;
    let mut gram = Matrix::zeros(k, k);
    let mut rhs = vec![0.0; k];
    for v in vertices {
        let row: Vec<f64> = v.iter().copied().chain([1.0]).collect();
        let f = phi(v);
        for i in 0..k {
            rhs[i] += row[i] * f;
            for j in 0..k {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    let eig = sym_eigenvalues(&gram)?;
    if eig[k - 1] <= 1e-10 * eig[0] {
        return Err(degenerate());
    }
    let mut l = gram.as_slice().to_vec();
    if !cholesky_in_place(&mut l, k) {
        return Err(degenerate());
    }
    cholesky_solve(&l, k, &mut rhs);
    let cut = FacetCut {
        coefficients: rhs[..n].to_vec(),
        offset: rhs[n],
        certifying_vertices: vertices.to_vec(),
    };
    let scale = vertices.iter().map(|v| phi(v).abs()).fold(1.0, f64::max);
    if vertices.iter().any(|v| (cut.eval(v) - phi(v)).abs() > FIT_TOL * scale) {
        return Err(degenerate());
    }
    Ok(cut)
}

/// At a vertex, any affine minorant over all vertices that touches `phi` there.
fn vertex_facet<F: Fn(&[f64]) -> f64>(x: &[f64], cube: &Hypercube, phi: &F) -> Result<FacetCut> {
    let n = cube.dim;
    if n > 16 {
        return Err(Error::input("vertex facets are enumerated only up to n = 16"));
    }
    let mut m = ConicModel::new("vertex_facet");
    let c: Vec<_> = (0..n).map(|i| m.free_var(format!("c{}", i + 1))).collect();
    let d = m.free_var("offset");
    let affine = |v: &[f64]| {
        let mut e = LinExpr::from(d);
        for (ci, vi) in c.iter().zip(v) {
            e.add_term(*ci, *vi);
        }
        e
    };
    let verts = cube.vertices();
    let mut obj = LinExpr::zero();
    for (k, v) in verts.iter().enumerate() {
        m.add_row(format!("under{k}"), affine(v), Cmp::Le, phi(v));
        obj.add_scaled(&affine(v), 1.0);
    }
    m.add_row("touch", affine(x), Cmp::Eq, phi(x));
    m.set_objective(Sense::Maximize, obj);
    let sol = solve_lp(&m.seal()?)?;
    if sol.report.status != Status::Optimal {
        return Err(Error::Solver(format!("vertex facet LP ended with status {}", sol.report.status)));
    }
    let cut = FacetCut {
        coefficients: c.iter().map(|v| sol.x[v.0]).collect(),
        offset: sol.x[d.0],
        certifying_vertices: Vec::new(),
    };
    let certifying_vertices = verts
        .into_iter()
        .filter(|v| (cut.eval(v) - phi(v)).abs() <= FIT_TOL * phi(v).abs().max(1.0))
        .collect();
    Ok(FacetCut { certifying_vertices, ..cut })
}

/// A face with coordinates `0..upper` at `b`, the next `free` coordinates free, the rest at `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HoleFreeFace {
    pub upper: usize,
    pub free: usize,
    pub dim: usize,
}

impl HoleFreeFace {
    pub fn is_fixed_upper(&self, i: usize) -> bool {
        i < self.upper
    }

    pub fn is_free(&self, i: usize) -> bool {
        i >= self.upper && i < self.upper + self.free
    }

    /// The face point with free coordinates set to `fill`.
    pub fn point(&self, cube: &Hypercube, fill: f64) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                if self.is_fixed_upper(i) {
                    cube.upper
                } else if self.is_free(i) {
                    fill
                } else {
                    cube.lower
                }
            })
            .collect()
    }
}

/// The `n − d + 1` faces of dimension `d` meeting the descending cone without gaps.
pub fn holefree_faces(n: usize, d: usize) -> Result<Vec<HoleFreeFace>> {
    if d > n {
        return Err(Error::input(format!("face dimension {d} exceeds n = {n}")));
    }
    Ok((0..=n - d).map(|upper| HoleFreeFace { upper, free: d, dim: n }).collect())
}

/// One line of a McCormick-versus-envelope comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub sample: usize,
    pub envelope: f64,
    pub mccormick: f64,
    pub gap: f64,
    /// `100·gap/|envelope|`.
    pub percent_gap: f64,
}

pub fn gap_row(sample: usize, x: &[f64], cube: &Hypercube) -> Result<GapRow> {
    let envelope = multilinear_envelope(x, cube)?;
    let mccormick = mccormick_relax(x, cube)?;
    let gap = envelope - mccormick;
    let percent_gap = if envelope == 0.0 { f64::NAN } else { 100.0 * gap / envelope.abs() };
    Ok(GapRow { sample, envelope, mccormick, gap, percent_gap })
}

/// Envelope and McCormick values at `samples` uniform points drawn with `seed`.
pub fn envelope_table(cube: &Hypercube, samples: usize, seed: u64) -> Result<Vec<GapRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples).map(|_| cube.sample(&mut rng)).collect();
    points.iter().enumerate().map(|(k, x)| gap_row(k + 1, x, cube)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schur_point_cases() {
        let c = Hypercube::new(2.0, 5.0, 3).unwrap();
        assert_eq!(schur_point(&[3.0, 3.0, 3.0], &c).unwrap(), vec![5.0, 2.0, 2.0]);
        assert_eq!(schur_envelope_value(product, &[3.0, 3.0, 3.0], &c).unwrap(), 20.0);
        assert_eq!(schur_point(&[2.0; 3], &c).unwrap(), vec![2.0; 3]);
        assert_eq!(schur_point(&[5.0; 3], &c).unwrap(), vec![5.0; 3]);
        assert_eq!(schur_point(&[2.0, 5.0, 2.0], &c).unwrap(), vec![5.0, 2.0, 2.0]);
    }

    #[test]
    fn envelope_lp_matches_closed_form() {
        let c = Hypercube::new(2.0, 5.0, 3).unwrap();
        assert!((multilinear_envelope(&[3.0, 3.0, 3.0], &c).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn mccormick_exact_at_vertices() {
        let c = Hypercube::new(-2.0, 3.0, 4).unwrap();
        for v in c.vertices() {
            assert!((mccormick_relax(&v, &c).unwrap() - product(&v)).abs() < 1e-9);
        }
    }

    #[test]
    fn monomial_example() {
        let xc = Hypercube::new(2.0, 5.0, 2).unwrap();
        let yc = Hypercube::new(0.0, 30.0, 1).unwrap();
        assert!(monomial_hull_membership(&[3.0, 3.0], &[8.5], &xc, &yc, 1.0, 1.0).unwrap());
        assert!(!monomial_hull_membership(&[3.0, 3.0], &[7.9], &xc, &yc, 1.0, 1.0).unwrap());
        let yc2 = Hypercube::new(0.0, 30.0, 3).unwrap();
        assert!(matches!(
            monomial_hull_membership(&[3.0, 3.0], &[1.0, 1.0, 1.0], &xc, &yc2, 1.0, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn face_counts() {
        assert_eq!(holefree_faces(3, 1).unwrap().len(), 3);
        assert_eq!(holefree_faces(5, 5).unwrap().len(), 1);
        let c = Hypercube::new(0.0, 1.0, 4).unwrap();
        let pts: Vec<_> = holefree_faces(4, 0).unwrap().iter().map(|f| f.point(&c, 0.5)).collect();
        let chain: Vec<_> = (0..=4).map(|j| c.chain_vertex(j)).collect();
        assert_eq!(pts, chain);
    }

    #[test]
    fn facet_in_the_square() {
        let c = Hypercube::new(0.0, 1.0, 2).unwrap();
        let cut = facet_from_point(&[0.6, 0.3], &c, product).unwrap();
        for v in c.vertices() {
            assert!(cut.eval(&v) <= product(&v) + 1e-9);
        }
        assert!((cut.eval(&[0.6, 0.3]) - 0.0).abs() < 1e-9);
        let at_vertex = facet_from_point(&[1.0, 0.0], &c, product).unwrap();
        assert!(at_vertex.eval(&[1.0, 0.0]).abs() < 1e-9);
    }
}
