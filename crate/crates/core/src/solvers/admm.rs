//! Operator-splitting solver for `min qᵀx` subject to `Ax + s = b`, `s ∈ K`.
//!
//! `K` is a product of the zero cone, the nonnegative orthant, second-order
//! cones and PSD cones in svec form. Each iteration solves one linear system
//! with the fixed matrix `σI + AᵀRA`, projects onto `K` and updates the
//! scaled dual.

use super::cones::{project_psd_svec, project_soc, svec_index, svec_len};
use super::{SolveReport, Status};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_solve};
use crate::model::{Cmp, Cone, LinExpr, SealedModel, Sense};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub scaling_passes: usize,
    pub check_every: usize,
    pub adapt_every: usize,
    /// Step multiplier on equality rows.
    pub eq_rho_factor: f64,
    /// Above this many variables the linear system is solved by conjugate gradients.
    pub dense_limit: usize,
}

impl Default for ConicSettings {
    fn default() -> Self {
        ConicSettings {
            tol: 1e-6,
            max_iter: 200_000,
            rho: 1.0,
            sigma: 1e-6,
            alpha: 1.6,
            scaling_passes: 15,
            check_every: 10,
            adapt_every: 50,
            eq_rho_factor: 1e3,
            dense_limit: 3000,
        }
    }
}

impl ConicSettings {
    pub fn with_tol(tol: f64) -> Self {
        ConicSettings { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    /// Residuals in the report are relative: `‖Ax+s−b‖∞ / (1 + max(‖Ax‖∞, ‖s‖∞, ‖b‖∞))`
    /// and `‖q−Aᵀy‖∞ / (1 + max(‖q‖∞, ‖Aᵀy‖∞))`.
    pub report: SolveReport,
    pub x: Vec<f64>,
    /// Dual objective in the model's own sense.
    pub dual_objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Zero,
    Nonneg,
    Soc,
    Psd(usize),
}

#[derive(Debug, Clone, Copy)]
struct Block {
    kind: Kind,
    start: usize,
    len: usize,
}

#[derive(Debug, Clone)]
struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: &[Vec<(usize, f64)>], ncols: usize) -> Csr {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in rows {
            for &(j, v) in r {
                indices.push(j);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Csr { nrows: rows.len(), ncols, indptr, indices, data }
    }

    fn transpose(&self) -> Csr {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                rows[self.indices[k]].push((i, self.data[k]));
            }
        }
        Csr::from_rows(&rows, self.nrows)
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            out[i] = s;
        }
    }
}

struct Compiled {
    a: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    q: Vec<f64>,
    blocks: Vec<Block>,
}

/// Merge duplicate variables of an affine form; returns `(−coefficients, constant)`
/// so that `s = b − a·x` equals the form.
fn row_of(e: &LinExpr, scale: f64) -> (Vec<(usize, f64)>, f64) {
    let c = e.canonical();
    (c.terms.iter().map(|&(v, a)| (v.0, -a * scale)).collect(), c.constant * scale)
}

fn compile(model: &SealedModel) -> Compiled {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut blocks = Vec::new();
    let push = |e: LinExpr, scale: f64, a: &mut Vec<Vec<(usize, f64)>>, b: &mut Vec<f64>| {
        let (r, c) = row_of(&e, scale);
        a.push(r);
        b.push(c);
    };
    let var = |k: usize| LinExpr::term(crate::model::VarId(k), 1.0);

    let start = a.len();
    for r in &model.rows {
        if r.cmp == Cmp::Eq {
            push(r.expr.clone() - LinExpr::constant(r.rhs), 1.0, &mut a, &mut b);
        }
    }
    for (k, v) in model.vars.iter().enumerate() {
        if v.lower.is_finite() && v.lower == v.upper {
            push(var(k) - LinExpr::constant(v.lower), 1.0, &mut a, &mut b);
        }
    }
    blocks.push(Block { kind: Kind::Zero, start, len: a.len() - start });

    let start = a.len();
    for r in &model.rows {
        match r.cmp {
            Cmp::Ge => push(r.expr.clone() - LinExpr::constant(r.rhs), 1.0, &mut a, &mut b),
            Cmp::Le => push(LinExpr::constant(r.rhs) - r.expr.clone(), 1.0, &mut a, &mut b),
            Cmp::Eq => {}
        }
    }
    for (k, v) in model.vars.iter().enumerate() {
        if v.lower == v.upper {
            continue;
        }
        if v.lower.is_finite() {
            push(var(k) - LinExpr::constant(v.lower), 1.0, &mut a, &mut b);
        }
        if v.upper.is_finite() {
            push(LinExpr::constant(v.upper) - var(k), 1.0, &mut a, &mut b);
        }
    }
    blocks.push(Block { kind: Kind::Nonneg, start, len: a.len() - start });

    for cone in &model.cones {
        if let Cone::SecondOrder { head, tail, .. } = cone {
            let start = a.len();
            push(head.clone(), 1.0, &mut a, &mut b);
            for t in tail {
                push(t.clone(), 1.0, &mut a, &mut b);
            }
            blocks.push(Block { kind: Kind::Soc, start, len: a.len() - start });
        }
    }
    for cone in &model.cones {
        if let Cone::Psd { dim, entries, .. } = cone {
            let start = a.len();
            let mut cells: Vec<(usize, LinExpr, f64)> = Vec::with_capacity(svec_len(*dim));
            for i in 0..*dim {
                for j in 0..=i {
                    let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                    cells.push((svec_index(*dim, i, j), entries[crate::model::tri_index(i, j)].clone(), scale));
                }
            }
            cells.sort_by_key(|c| c.0);
            for (_, e, scale) in cells {
                push(e, scale, &mut a, &mut b);
            }
            blocks.push(Block { kind: Kind::Psd(*dim), start, len: a.len() - start });
        }
    }
    blocks.retain(|blk| blk.len > 0);

    let sign = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut q = vec![0.0; model.num_vars()];
    for &(v, c) in &model.objective.terms {
        q[v.0] += sign * c;
    }
    Compiled { a, b, q, blocks }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

enum LinSolver {
    Dense { l: Vec<f64>, n: usize },
    Cg { diag: Vec<f64>, warm: Vec<f64> },
}

struct System<'a> {
    a: &'a Csr,
    at: &'a Csr,
    sigma: f64,
    rho: Vec<f64>,
}

impl System<'_> {
    fn build(&self, dense_limit: usize) -> Result<LinSolver> {
        let n = self.a.ncols;
        if n <= dense_limit {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                m[i * n + i] = self.sigma;
            }
            for i in 0..self.a.nrows {
                let r = self.rho[i];
                let (lo, hi) = (self.a.indptr[i], self.a.indptr[i + 1]);
                for p in lo..hi {
                    let (j, aj) = (self.a.indices[p], self.a.data[p] * r);
                    for k in lo..hi {
                        let col = self.a.indices[k];
                        if col <= j {
                            m[j * n + col] += aj * self.a.data[k];
                        }
                    }
                }
            }
            if !cholesky_in_place(&mut m, n) {
                return Err(Error::Solver("linear system is not positive definite".into()));
            }
            Ok(LinSolver::Dense { l: m, n })
        } else {
            let mut diag = vec![self.sigma; n];
            for i in 0..self.a.nrows {
                for p in self.a.indptr[i]..self.a.indptr[i + 1] {
                    diag[self.a.indices[p]] += self.rho[i] * self.a.data[p] * self.a.data[p];
                }
            }
            Ok(LinSolver::Cg { diag, warm: vec![0.0; n] })
        }
    }

    fn apply(&self, x: &[f64], tmp: &mut [f64], out: &mut [f64]) {
        self.a.matvec(x, tmp);
        for (t, r) in tmp.iter_mut().zip(&self.rho) {
            *t *= r;
        }
        self.at.matvec(tmp, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += self.sigma * xi;
        }
    }

    fn solve(&self, solver: &mut LinSolver, rhs: &mut [f64]) {
        match solver {
            LinSolver::Dense { l, n } => cholesky_solve(l, *n, rhs),
            LinSolver::Cg { diag, warm } => {
                let n = rhs.len();
                let mut x = warm.clone();
                let mut tmp = vec![0.0; self.a.nrows];
                let mut ax = vec![0.0; n];
                self.apply(&x, &mut tmp, &mut ax);
                let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
                let bnorm = inf_norm(rhs).max(1e-300);
                let mut z: Vec<f64> = r.iter().zip(diag.iter()).map(|(ri, d)| ri / d).collect();
                let mut p = z.clone();
                let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
                for _ in 0..(10 * n).max(50) {
                    if inf_norm(&r) <= 1e-12 * bnorm {
                        break;
                    }
                    self.apply(&p, &mut tmp, &mut ax);
                    let pap: f64 = p.iter().zip(&ax).map(|(a, b)| a * b).sum();
                    if pap <= 0.0 {
                        break;
                    }
                    let step = rz / pap;
                    for k in 0..n {
                        x[k] += step * p[k];
                        r[k] -= step * ax[k];
                    }
                    for k in 0..n {
                        z[k] = r[k] / diag[k];
                    }
                    let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
                    let beta = rz_new / rz;
                    rz = rz_new;
                    for k in 0..n {
                        p[k] = z[k] + beta * p[k];
                    }
                }
                warm.copy_from_slice(&x);
                rhs.copy_from_slice(&x);
            }
        }
    }
}

fn project(blocks: &[Block], v: &mut [f64]) {
    for blk in blocks {
        let s = &mut v[blk.start..blk.start + blk.len];
        match blk.kind {
            Kind::Zero => s.iter_mut().for_each(|x| *x = 0.0),
            Kind::Nonneg => s.iter_mut().for_each(|x| *x = x.max(0.0)),
            Kind::Soc => project_soc(s),
            Kind::Psd(dim) => project_psd_svec(s, dim),
        }
    }
}

/// Ruiz equilibration; cone blocks other than the orthant share one row factor.
fn equilibrate(a: &mut [Vec<(usize, f64)>], n: usize, blocks: &[Block], passes: usize) -> (Vec<f64>, Vec<f64>) {
    let m = a.len();
    let mut d = vec![1.0; n];
    let mut e = vec![1.0; m];
    for _ in 0..passes {
        let mut col = vec![0.0f64; n];
        let mut row = vec![0.0f64; m];
        for (i, r) in a.iter().enumerate() {
            for &(j, v) in r {
                col[j] = col[j].max(v.abs());
                row[i] = row[i].max(v.abs());
            }
        }
        for blk in blocks {
            if matches!(blk.kind, Kind::Soc | Kind::Psd(_)) {
                let mx = row[blk.start..blk.start + blk.len].iter().fold(0.0f64, |a, &b| a.max(b));
                row[blk.start..blk.start + blk.len].iter_mut().for_each(|r| *r = mx);
            }
        }
        let fac = |x: f64| if x > 0.0 { (1.0 / x.sqrt()).clamp(1e-4, 1e4) } else { 1.0 };
        let dc: Vec<f64> = col.iter().map(|&c| fac(c)).collect();
        let dr: Vec<f64> = row.iter().map(|&r| fac(r)).collect();
        for (i, r) in a.iter_mut().enumerate() {
            for (j, v) in r.iter_mut() {
                *v *= dr[i] * dc[*j];
            }
        }
        for j in 0..n {
            d[j] *= dc[j];
        }
        for i in 0..m {
            e[i] *= dr[i];
        }
    }
    (d, e)
}

pub fn solve_conic(model: &SealedModel, settings: &ConicSettings) -> Result<ConicSolution> {
    let start = Instant::now();
    let Compiled { mut a, b, q, blocks } = compile(model);
    let n = model.num_vars();
    let m = a.len();
    let sign = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let obj_const = model.objective.constant;

    let (d, e) = equilibrate(&mut a, n, &blocks, settings.scaling_passes);
    let bs: Vec<f64> = b.iter().zip(&e).map(|(bi, ei)| bi * ei).collect();
    let mut qs: Vec<f64> = q.iter().zip(&d).map(|(qi, di)| qi * di).collect();
    let qmax = inf_norm(&qs);
    let cscale = if qmax > 0.0 { (1.0 / qmax).clamp(1e-4, 1e4) } else { 1.0 };
    qs.iter_mut().for_each(|v| *v *= cscale);
    let acsr = Csr::from_rows(&a, n);
    let at = acsr.transpose();

    let is_eq: Vec<bool> = {
        let mut v = vec![false; m];
        for blk in &blocks {
            if blk.kind == Kind::Zero {
                v[blk.start..blk.start + blk.len].iter_mut().for_each(|x| *x = true);
            }
        }
        v
    };
    let mut rho = settings.rho;
    let rho_vec = |rho: f64| -> Vec<f64> {
        is_eq.iter().map(|&z| if z { rho * settings.eq_rho_factor } else { rho }).collect()
    };
    let mut sys = System { a: &acsr, at: &at, sigma: settings.sigma, rho: rho_vec(rho) };
    let mut lin = sys.build(settings.dense_limit)?;

    let b_norm = inf_norm(&b);
    let q_norm = inf_norm(&q);
    let mut x = vec![0.0; n];
    let mut s = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut work = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut ax = vec![0.0; m];
    let mut aty = vec![0.0; n];

    struct Snapshot {
        x: Vec<f64>,
        pres: f64,
        dres: f64,
        pobj: f64,
        dobj: f64,
    }
    let evaluate = |x: &[f64], s: &[f64], y: &[f64], ax: &mut [f64], aty: &mut [f64]| -> Snapshot {
        acsr.matvec(x, ax);
        at.matvec(y, aty);
        let mut pr = 0.0f64;
        let mut axn = 0.0f64;
        let mut sn = 0.0f64;
        for i in 0..m {
            let axi = ax[i] / e[i];
            let si = s[i] / e[i];
            pr = pr.max((axi + si - b[i]).abs());
            axn = axn.max(axi.abs());
            sn = sn.max(si.abs());
        }
        let mut dr = 0.0f64;
        let mut atyn = 0.0f64;
        for j in 0..n {
            let atyj = aty[j] / d[j] / cscale;
            dr = dr.max((q[j] - atyj).abs());
            atyn = atyn.max(atyj.abs());
        }
        let xu: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi * di).collect();
        let pobj: f64 = q.iter().zip(&xu).map(|(a, b)| a * b).sum();
        let dobj: f64 = (0..m).map(|i| b[i] * y[i] * e[i] / cscale).sum();
        Snapshot {
            x: xu,
            pres: pr / (1.0 + axn.max(sn).max(b_norm)),
            dres: dr / (1.0 + q_norm.max(atyn)),
            pobj,
            dobj,
        }
    };

    let mut best: Option<Snapshot> = None;
    let mut status = Status::MaxIter;
    let mut iters = 0;
    for k in 1..=settings.max_iter {
        iters = k;
        for i in 0..m {
            work[i] = sys.rho[i] * (bs[i] - s[i]) + y[i];
        }
        at.matvec(&work, &mut rhs);
        for j in 0..n {
            rhs[j] += settings.sigma * x[j] - qs[j];
        }
        sys.solve(&mut lin, &mut rhs);
        acsr.matvec(&rhs, &mut ax);
        let al = settings.alpha;
        for j in 0..n {
            x[j] = al * rhs[j] + (1.0 - al) * x[j];
        }
        for i in 0..m {
            let s_hat = al * (bs[i] - ax[i]) + (1.0 - al) * s[i];
            work[i] = s_hat + y[i] / sys.rho[i];
        }
        project(&blocks, &mut work);
        for i in 0..m {
            let s_hat = al * (bs[i] - ax[i]) + (1.0 - al) * s[i];
            let v = s_hat + y[i] / sys.rho[i];
            y[i] = sys.rho[i] * (v - work[i]);
            s[i] = work[i];
        }

        if k % settings.check_every != 0 && k != settings.max_iter {
            continue;
        }
        let snap = evaluate(&x, &s, &y, &mut ax, &mut aty);
        if !snap.pobj.is_finite() || !snap.pres.is_finite() || !snap.dres.is_finite() {
            status = Status::Numerical;
            break;
        }
        let gap = (snap.pobj - snap.dobj).abs() / (1.0 + snap.pobj.abs() + snap.dobj.abs());
        let done = snap.pres <= settings.tol && snap.dres <= settings.tol && gap <= settings.tol;
        let score = snap.pres.max(snap.dres);
        if best.as_ref().is_none_or(|bst| score <= bst.pres.max(bst.dres)) || done {
            best = Some(snap);
        }
        if done {
            status = Status::Optimal;
            break;
        }

        if k % settings.adapt_every == 0 {
            // Residual balancing in the scaled space.
            let mut pr = 0.0f64;
            let mut pn = inf_norm(&bs).max(inf_norm(&s));
            for i in 0..m {
                pr = pr.max((ax[i] + s[i] - bs[i]).abs());
                pn = pn.max(ax[i].abs());
            }
            let mut dr = 0.0f64;
            let dn = inf_norm(&qs).max(inf_norm(&aty));
            for j in 0..n {
                dr = dr.max((qs[j] - aty[j]).abs());
            }
            let rp = pr / pn.max(1e-12);
            let rd = dr / dn.max(1e-12);
            let new_rho = if rp > 10.0 * rd {
                rho * 2.0
            } else if rd > 10.0 * rp {
                rho / 2.0
            } else {
                rho
            };
            if new_rho != rho && (1e-6..=1e6).contains(&new_rho) {
                rho = new_rho;
                sys.rho = rho_vec(rho);
                lin = sys.build(settings.dense_limit)?;
            }
        }
    }

    let snap = match best {
        Some(s) => s,
        None => evaluate(&x, &s, &y, &mut ax, &mut aty),
    };
    Ok(ConicSolution {
        report: SolveReport {
            status,
            objective: sign * snap.pobj + obj_const,
            iterations: iters,
            primal_residual: snap.pres,
            dual_residual: snap.dres,
            seconds: start.elapsed().as_secs_f64(),
        },
        x: snap.x,
        dual_objective: sign * snap.dobj + obj_const,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lower_triangle, ConicModel};

    #[test]
    fn eigenvalue_sdp() {
        let c = [[2.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]];
        let mut m = ConicModel::new("lmax");
        let mut x = vec![vec![crate::model::VarId(0); 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let v = m.free_var(format!("X{i}{j}"));
                x[i][j] = v;
                x[j][i] = v;
            }
        }
        let entries = lower_triangle(3, |i, j| x[i][j].into());
        m.add_psd("X", 3, entries);
        m.add_row("tr", LinExpr::sum((0..3).map(|i| x[i][i])), Cmp::Eq, 1.0);
        let mut obj = LinExpr::zero();
        for i in 0..3 {
            for j in 0..=i {
                obj.add_term(x[i][j], if i == j { c[i][j] } else { 2.0 * c[i][j] });
            }
        }
        m.set_objective(Sense::Maximize, obj);
        let sol = solve_conic(&m.seal().unwrap(), &ConicSettings::default()).unwrap();
        let lam = crate::linalg::sym_eigenvalues(
            &crate::linalg::Matrix::from_rows(&c.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap(),
        )
        .unwrap()[0];
        assert_eq!(sol.report.status, Status::Optimal);
        assert!((sol.report.objective - lam).abs() < 1e-5, "{} vs {lam}", sol.report.objective);
    }

    #[test]
    fn second_order_cone() {
        // min t s.t. ‖(x−1, y−2)‖ ≤ t  →  0 at (1, 2).
        let mut m = ConicModel::new("soc");
        let t = m.free_var("t");
        let x = m.free_var("x");
        let y = m.free_var("y");
        m.add_soc(
            "q",
            t.into(),
            vec![LinExpr::from(x) - LinExpr::constant(1.0), LinExpr::from(y) - LinExpr::constant(2.0)],
        );
        m.add_row("xy", LinExpr::from(x) + LinExpr::from(y), Cmp::Eq, 0.0);
        m.set_objective(Sense::Minimize, t.into());
        let sol = solve_conic(&m.seal().unwrap(), &ConicSettings::default()).unwrap();
        assert_eq!(sol.report.status, Status::Optimal);
        assert!((sol.report.objective - 3.0 / 2f64.sqrt()).abs() < 1e-5);
    }
}
