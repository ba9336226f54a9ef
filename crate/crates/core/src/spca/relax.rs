use super::{RelaxationKind, SpcaInstance};
use crate::error::{Error, Result};
use crate::linalg::{descending_order, Matrix};
use crate::model::{
    bitonic_network, emit_prefix_rows_with, emit_sorting_with, lower_triangle, tri_index, Cmp, ComparatorVars,
    ConicModel, LinExpr, MajorizationForm, SealedModel, Sense, VarId,
};
use crate::solvers::{solve_conic, ConicSettings, SolveReport};
use crate::transport::dual_certificate_block;

/// A symmetric matrix of model variables stored as a row-by-row lower triangle.
#[derive(Debug, Clone)]
pub struct SymVars {
    pub dim: usize,
    pub ids: Vec<VarId>,
}

impl SymVars {
    fn new(model: &mut ConicModel, name: &str, dim: usize, lower: f64) -> Self {
        let mut ids = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                ids.push(model.add_var(format!("{name}{}_{}", i + 1, j + 1), lower, f64::INFINITY));
            }
        }
        SymVars { dim, ids }
    }

    pub fn id(&self, i: usize, j: usize) -> VarId {
        self.ids[tri_index(i, j)]
    }

    pub fn expr(&self, i: usize, j: usize) -> LinExpr {
        self.id(i, j).into()
    }

    fn trace(&self) -> LinExpr {
        LinExpr::sum((0..self.dim).map(|i| self.id(i, i)))
    }

    /// `𝟙ᵀM𝟙`.
    fn total(&self) -> LinExpr {
        let mut e = LinExpr::zero();
        for i in 0..self.dim {
            for j in 0..=i {
                e.add_term(self.id(i, j), if i == j { 1.0 } else { 2.0 });
            }
        }
        e
    }

    fn row_sum(&self, i: usize) -> LinExpr {
        LinExpr::sum((0..self.dim).map(|j| self.id(i, j)))
    }

    /// Sum over rows `< p` and columns `< q`.
    fn block_sum(&self, p: usize, q: usize) -> LinExpr {
        let mut e = LinExpr::zero();
        for i in 0..p {
            for j in 0..q {
                e.add_term(self.id(i, j), 1.0);
            }
        }
        e
    }

    pub fn value(&self, x: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..=i {
                let v = x[self.id(i, j).0];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn set(&self, out: &mut [f64], m: &Matrix) {
        for i in 0..self.dim {
            for j in 0..=i {
                out[self.id(i, j).0] = m[(i, j)];
            }
        }
    }
}

/// Rules that reconstruct auxiliary variables from the main ones at a lifted point.
#[derive(Debug, Clone)]
enum Fill {
    /// `r = j`-th largest value, `t_i = max(v_i − r, 0)`.
    TopSumDual { j: usize, r: VarId, t: Vec<VarId>, values: Vec<LinExpr> },
    /// `var = ` sum of the `j` largest values.
    TopSum { var: VarId, j: usize, values: Vec<LinExpr> },
    Comparator(ComparatorVars),
    /// Block dual certificate for `h(wwᵀ)` with capacities `(p̄, q̄)`.
    Transport { pbar: usize, qbar: usize, alpha: Vec<VarId>, beta: Vec<VarId>, gamma: VarId, delta: Vec<Vec<VarId>>, weights: Vec<LinExpr> },
}

fn kth_largest(vals: &[f64], j: usize) -> f64 {
    let mut v = vals.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v[j - 1]
}

impl Fill {
    fn apply(&self, out: &mut [f64]) -> Result<()> {
        let eval = |es: &[LinExpr], out: &[f64]| -> Vec<f64> { es.iter().map(|e| e.eval(out)).collect() };
        match self {
            Fill::TopSumDual { j, r, t, values } => {
                let v = eval(values, out);
                let rv = kth_largest(&v, *j);
                out[r.0] = rv;
                for (ti, vi) in t.iter().zip(&v) {
                    out[ti.0] = (vi - rv).max(0.0);
                }
            }
            Fill::TopSum { var, j, values } => {
                let mut v = eval(values, out);
                v.sort_by(|a, b| b.total_cmp(a));
                out[var.0] = v[..*j].iter().sum();
            }
            Fill::Comparator(c) => {
                let (p, q) = (c.p.eval(out), c.q.eval(out));
                out[c.hi.0] = p.max(q);
                out[c.lo.0] = p.min(q);
            }
            Fill::Transport { pbar, qbar, alpha, beta, gamma, delta, weights } => {
                let w = eval(weights, out);
                let order = descending_order(&w);
                let sorted: Vec<f64> = order.iter().map(|&i| w[i].max(0.0)).collect();
                let cert = dual_certificate_block(&sorted, *pbar, *qbar)?;
                for (a, &i) in order.iter().enumerate() {
                    out[alpha[i].0] = cert.alpha[a];
                    out[beta[i].0] = cert.beta[a];
                    for (b, &j) in order.iter().enumerate() {
                        out[delta[i][j].0] = cert.delta[(a, b)];
                    }
                }
                out[gamma.0] = cert.gamma;
            }
        }
        Ok(())
    }
}

/// Handles to the main variable families of a relaxation.
#[derive(Debug, Clone, Default)]
pub struct RelaxationHandles {
    pub x_mat: Option<SymVars>,
    pub y_mat: Option<SymVars>,
    /// Leading `K×K` block; entries outside it are fixed at zero and not modelled.
    pub u_mat: Option<SymVars>,
    pub x_vec: Option<Vec<VarId>>,
    pub y_vec: Option<Vec<VarId>>,
    /// Leading `K` entries.
    pub u_vec: Option<Vec<VarId>>,
    pub z: Option<Vec<VarId>>,
    /// `t[i][j]` for every ordered pair.
    pub t: Option<Vec<Vec<VarId>>>,
    fills: Vec<Fill>,
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub kind: RelaxationKind,
    pub form: MajorizationForm,
    pub n: usize,
    pub k: usize,
    pub model: SealedModel,
    pub handles: RelaxationHandles,
}

struct Builder {
    m: ConicModel,
    h: RelaxationHandles,
    n: usize,
    k: usize,
    form: MajorizationForm,
}

impl Builder {
    fn row(&mut self, name: String, e: LinExpr, cmp: Cmp, rhs: f64) {
        self.m.add_row(name, e, cmp, rhs);
    }

    /// `Y ≥ X` and `Y ≥ −X` entrywise.
    fn dominate(&mut self, x: &SymVars, y: &SymVars) {
        for i in 0..self.n {
            for j in 0..=i {
                let (xe, ye) = (x.expr(i, j), y.expr(i, j));
                self.row(format!("abs_hi{}_{}", i + 1, j + 1), ye.clone() - xe.clone(), Cmp::Ge, 0.0);
                self.row(format!("abs_lo{}_{}", i + 1, j + 1), ye + xe, Cmp::Ge, 0.0);
            }
        }
    }

    /// `[M m; mᵀ 1] ⪰ 0`.
    fn schur(&mut self, name: &str, mat: &SymVars, vec: &[VarId]) {
        let d = mat.dim;
        let entries = lower_triangle(d + 1, |i, j| {
            if i < d {
                mat.expr(i, j)
            } else if j < d {
                vec[j].into()
            } else {
                LinExpr::constant(1.0)
            }
        });
        self.m.add_psd(name, d + 1, entries);
    }

    fn psd(&mut self, name: &str, mat: &SymVars) {
        let entries = lower_triangle(mat.dim, |i, j| mat.expr(i, j));
        self.m.add_psd(name, mat.dim, entries);
    }

    /// `Σ_{i≤j} u_i ≥ s_j(x)` for `j = 1..n−1`, `u` descending with equal totals enforced elsewhere.
    fn prefix(&mut self, u: &[LinExpr], x: &[LinExpr], tag: &str) {
        let (_, duals) = emit_prefix_rows_with(&mut self.m, u, x, x.len() - 1, tag);
        for d in duals {
            self.h.fills.push(Fill::TopSumDual { j: d.j, r: d.r, t: d.t, values: x.to_vec() });
        }
    }

    /// `u ≥_m x` for blocks whose totals already agree, in the configured form.
    fn majorize(&mut self, u: &[LinExpr], x: &[LinExpr], tag: &str) -> Result<()> {
        match self.form {
            MajorizationForm::Dual => self.prefix(u, x, tag),
            MajorizationForm::SortNet => {
                let (_, comps) = emit_sorting_with(&mut self.m, u, x, &bitonic_network(x.len()), tag)?;
                self.h.fills.extend(comps.into_iter().map(Fill::Comparator));
            }
        }
        Ok(())
    }

    fn pad(&self, head: Vec<LinExpr>) -> Vec<LinExpr> {
        let mut v = head;
        v.resize(self.n, LinExpr::zero());
        v
    }

    fn objective(&mut self, sigma: &Matrix, x: &SymVars) {
        let mut obj = LinExpr::zero();
        for i in 0..self.n {
            for j in 0..=i {
                let c = if i == j { sigma[(i, i)] } else { 2.0 * sigma[(i, j)] };
                if c != 0.0 {
                    obj.add_term(x.id(i, j), c);
                }
            }
        }
        self.m.set_objective(Sense::Maximize, obj);
    }

    fn cardinality_box(&mut self) -> Vec<VarId> {
        let z: Vec<VarId> = (0..self.n).map(|i| self.m.add_var(format!("z{}", i + 1), 0.0, 1.0)).collect();
        self.row("card".into(), LinExpr::sum(z.iter().copied()), Cmp::Eq, self.k as f64);
        z
    }

    /// `U ≥ 0` with descending rows on the `K×K` block, `tr U ≤ 1`, `𝟙ᵀU𝟙 = 𝟙ᵀY𝟙`.
    fn sorted_block(&mut self, y: &SymVars) -> SymVars {
        let k = self.k;
        let u = SymVars::new(&mut self.m, "U", k, 0.0);
        for i in 0..k {
            for j in 0..k - 1 {
                self.row(format!("U_desc{}_{}", i + 1, j + 1), u.expr(i, j) - u.expr(i, j + 1), Cmp::Ge, 0.0);
            }
        }
        self.row("U_trace".into(), u.trace(), Cmp::Le, 1.0);
        self.row("U_total".into(), u.total() - y.total(), Cmp::Eq, 0.0);
        u
    }

    fn submatrix_rows(&mut self, u: &SymVars, y: &SymVars) {
        let (n, k) = (self.n, self.k);
        let y_vec: Vec<LinExpr> = self.h.y_vec.as_ref().expect("y present").iter().map(|&v| v.into()).collect();
        for p in 1..=k {
            for q in p..=k {
                let pbar = if p < k { p } else { n };
                let qbar = if q < k { q } else { n };
                let tag = format!("ul{p}_{q}");
                let alpha: Vec<VarId> = (0..n).map(|i| self.m.nonneg_var(format!("{tag}_a{}", i + 1))).collect();
                let beta: Vec<VarId> = (0..n).map(|i| self.m.nonneg_var(format!("{tag}_b{}", i + 1))).collect();
                let gamma = self.m.nonneg_var(format!("{tag}_g"));
                let delta: Vec<Vec<VarId>> = (0..n)
                    .map(|i| (0..n).map(|j| self.m.nonneg_var(format!("{tag}_d{}_{}", i + 1, j + 1))).collect())
                    .collect();
                let mut lhs = u.block_sum(p, q);
                for i in 0..n {
                    lhs.add_term(alpha[i], -(qbar as f64)).add_term(beta[i], -(pbar as f64));
                }
                lhs.add_term(gamma, -((pbar * qbar) as f64));
                for row in &delta {
                    for &d in row {
                        lhs.add_term(d, -1.0);
                    }
                }
                self.row(format!("{tag}_bound"), lhs, Cmp::Ge, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let mut e = LinExpr::sum([alpha[i], beta[j], gamma, delta[i][j]]);
                        e.add_term(y.id(i, j), -1.0);
                        self.row(format!("{tag}_cover{}_{}", i + 1, j + 1), e, Cmp::Ge, 0.0);
                    }
                }
                self.h.fills.push(Fill::Transport { pbar, qbar, alpha, beta, gamma, delta, weights: y_vec.clone() });
            }
        }
    }

    fn two_step_rows(&mut self, u: &SymVars, y: &SymVars) {
        let (n, k) = (self.n, self.k);
        // sr[i][q-1] bounds the sum of the q largest entries of row i of Y.
        let sr: Vec<Vec<VarId>> =
            (0..n).map(|i| (1..=k).map(|q| self.m.free_var(format!("sr{}_{q}", i + 1))).collect()).collect();
        for q in 1..=k {
            for i in 0..n {
                let row_vals: Vec<LinExpr> = (0..n).map(|j| y.expr(i, j)).collect();
                self.h.fills.push(Fill::TopSum { var: sr[i][q - 1], j: q, values: row_vals.clone() });
                let tag = format!("rs{}_{q}", i + 1);
                let r = self.m.free_var(format!("{tag}_r"));
                let t: Vec<VarId> = (0..n).map(|j| self.m.nonneg_var(format!("{tag}_t{}", j + 1))).collect();
                let mut lhs = LinExpr::from(sr[i][q - 1]);
                lhs.add_term(r, -(q as f64));
                t.iter().for_each(|&tj| {
                    lhs.add_term(tj, -1.0);
                });
                self.row(format!("{tag}_top"), lhs, Cmp::Ge, 0.0);
                for j in 0..n {
                    let mut e = y.expr(i, j);
                    e.add_term(t[j], -1.0).add_term(r, -1.0);
                    self.row(format!("{tag}_cap{}", j + 1), e, Cmp::Le, 0.0);
                }
                self.h.fills.push(Fill::TopSumDual { j: q, r, t, values: row_vals });
            }
        }
        for p in 1..=k {
            for q in 1..=k {
                let col: Vec<LinExpr> = (0..n).map(|i| sr[i][q - 1].into()).collect();
                let tag = format!("cs{p}_{q}");
                if p == k {
                    let mut lhs = u.block_sum(p, q);
                    col.iter().for_each(|c| {
                        lhs.add_scaled(c, -1.0);
                    });
                    self.row(format!("{tag}_all"), lhs, Cmp::Ge, 0.0);
                    continue;
                }
                let r = self.m.free_var(format!("{tag}_r"));
                let t: Vec<VarId> = (0..n).map(|i| self.m.nonneg_var(format!("{tag}_t{}", i + 1))).collect();
                let mut lhs = u.block_sum(p, q);
                lhs.add_term(r, -(p as f64));
                t.iter().for_each(|&ti| {
                    lhs.add_term(ti, -1.0);
                });
                self.row(format!("{tag}_top"), lhs, Cmp::Ge, 0.0);
                for i in 0..n {
                    let mut e = col[i].clone();
                    e.add_term(t[i], -1.0).add_term(r, -1.0);
                    self.row(format!("{tag}_cap{}", i + 1), e, Cmp::Le, 0.0);
                }
                self.h.fills.push(Fill::TopSumDual { j: p, r, t, values: col });
            }
        }
    }
}

/// Builds the conic model of one relaxation; its maximum is the relaxation bound.
pub fn build_relaxation(inst: &SpcaInstance, kind: RelaxationKind, form: MajorizationForm) -> Result<Relaxation> {
    let (n, k) = (inst.n(), inst.k());
    let mut b = Builder {
        m: ConicModel::new(format!("spca_{}", kind.as_str())),
        h: RelaxationHandles::default(),
        n,
        k,
        form,
    };
    let x = SymVars::new(&mut b.m, "X", n, f64::NEG_INFINITY);
    b.objective(inst.sigma(), &x);
    b.h.x_mat = Some(x.clone());

    match kind {
        RelaxationKind::D => {
            let y = SymVars::new(&mut b.m, "Y", n, f64::NEG_INFINITY);
            let xv: Vec<VarId> = (0..n).map(|i| b.m.free_var(format!("x{}", i + 1))).collect();
            b.dominate(&x, &y);
            b.row("trace".into(), x.trace(), Cmp::Le, 1.0);
            b.row("l1".into(), y.total(), Cmp::Le, k as f64);
            b.schur("schur_x", &x, &xv);
            b.h.y_mat = Some(y);
            b.h.x_vec = Some(xv);
        }
        RelaxationKind::B => {
            let y = SymVars::new(&mut b.m, "Y", n, f64::NEG_INFINITY);
            b.dominate(&x, &y);
            let z = b.cardinality_box();
            b.row("trace".into(), x.trace(), Cmp::Eq, 1.0);
            b.psd("psd_x", &x);
            b.row("l1".into(), y.total(), Cmp::Eq, k as f64);
            for i in 0..n {
                b.row(format!("ydiag{}", i + 1), y.expr(i, i) - z[i].into(), Cmp::Le, 0.0);
                for j in i + 1..n {
                    b.row(format!("yoff{}_{}", i + 1, j + 1), y.expr(i, j) * 2.0 - z[i].into(), Cmp::Le, 0.0);
                }
            }
            for i in 0..n {
                // Σ_j X_ij² ≤ z_i X_ii.
                let mut tail: Vec<LinExpr> = (0..n).map(|j| x.expr(i, j) * 2.0).collect();
                tail.push(LinExpr::from(z[i]) - x.expr(i, i));
                b.m.add_soc(format!("rowcone{}", i + 1), LinExpr::from(z[i]) + x.expr(i, i), tail);
            }
            b.h.y_mat = Some(y);
            b.h.z = Some(z);
        }
        RelaxationKind::T => {
            let y = SymVars::new(&mut b.m, "Y", n, f64::NEG_INFINITY);
            b.dominate(&x, &y);
            let u = b.sorted_block(&y);
            let z = b.cardinality_box();
            b.row("U_unit".into(), u.trace(), Cmp::Eq, 1.0);
            b.row("Y_unit".into(), y.trace(), Cmp::Eq, 1.0);
            b.row("X_unit".into(), x.trace(), Cmp::Eq, 1.0);
            b.psd("psd_x", &x);
            b.psd("psd_u", &u);
            let ud = b.pad((0..k).map(|i| u.expr(i, i)).collect());
            let xd: Vec<LinExpr> = (0..n).map(|i| x.expr(i, i)).collect();
            b.majorize(&ud, &xd, "dmaj")?;
            let t: Vec<Vec<VarId>> = (0..n)
                .map(|i| (0..n).map(|j| b.m.add_var(format!("T{}_{}", i + 1, j + 1), 0.0, f64::INFINITY)).collect())
                .collect();
            for i in 0..n {
                for j in i + 1..n {
                    let tag = format!("{}_{}", i + 1, j + 1);
                    let two_y = y.expr(i, j) * 2.0;
                    b.m.add_soc(
                        format!("tcone{tag}"),
                        LinExpr::sum([t[i][j], t[j][i]]),
                        vec![two_y.clone(), LinExpr::from(t[i][j]) - t[j][i].into()],
                    );
                    b.m.add_soc(
                        format!("ycone{tag}"),
                        y.expr(i, i) + y.expr(j, j),
                        vec![two_y, y.expr(i, i) - y.expr(j, j)],
                    );
                }
            }
            for i in 0..n {
                b.row(format!("tdiag{}", i + 1), LinExpr::from(t[i][i]) - y.expr(i, i), Cmp::Eq, 0.0);
                b.row(format!("trow{}", i + 1), LinExpr::sum(t[i].iter().copied()) - z[i].into(), Cmp::Eq, 0.0);
                let mut col = LinExpr::sum((0..n).map(|r| t[r][i]));
                col.add_term(y.id(i, i), -(k as f64));
                b.row(format!("tcol{}", i + 1), col, Cmp::Eq, 0.0);
                for r in 0..n {
                    b.row(format!("tcap{}_{}", r + 1, i + 1), LinExpr::from(t[r][i]) - y.expr(i, i), Cmp::Le, 0.0);
                }
            }
            b.h.y_mat = Some(y);
            b.h.u_mat = Some(u);
            b.h.z = Some(z);
            b.h.t = Some(t);
        }
        RelaxationKind::Rowsum | RelaxationKind::Diagonal | RelaxationKind::TwoStep | RelaxationKind::Submatrix => {
            let y = SymVars::new(&mut b.m, "Y", n, f64::NEG_INFINITY);
            b.dominate(&x, &y);
            let u = b.sorted_block(&y);
            let xv: Vec<VarId> = (0..n).map(|i| b.m.free_var(format!("x{}", i + 1))).collect();
            let yv: Vec<VarId> = (0..n).map(|i| b.m.free_var(format!("y{}", i + 1))).collect();
            let uv: Vec<VarId> = (0..k).map(|i| b.m.nonneg_var(format!("u{}", i + 1))).collect();
            for i in 0..n {
                let (xe, ye) = (LinExpr::from(xv[i]), LinExpr::from(yv[i]));
                b.row(format!("vabs_hi{}", i + 1), ye.clone() - xe.clone(), Cmp::Ge, 0.0);
                b.row(format!("vabs_lo{}", i + 1), ye + xe, Cmp::Ge, 0.0);
            }
            for i in 0..k - 1 {
                b.row(format!("u_desc{}", i + 1), LinExpr::from(uv[i]) - uv[i + 1].into(), Cmp::Ge, 0.0);
            }
            b.schur("schur_x", &x, &xv);
            b.schur("schur_y", &y, &yv);
            b.schur("schur_u", &u, &uv);
            b.row("trace_link".into(), u.trace() - x.trace(), Cmp::Eq, 0.0);
            let u_pad = b.pad(uv.iter().map(|&v| v.into()).collect());
            let y_lin: Vec<LinExpr> = yv.iter().map(|&v| v.into()).collect();
            b.prefix(&u_pad, &y_lin, "vmaj");
            b.h.y_vec = Some(yv);
            if matches!(kind, RelaxationKind::Rowsum | RelaxationKind::Submatrix | RelaxationKind::TwoStep) {
                let ru = b.pad((0..k).map(|i| u.row_sum(i)).collect());
                let ry: Vec<LinExpr> = (0..n).map(|i| y.row_sum(i)).collect();
                b.majorize(&ru, &ry, "rmaj")?;
            }
            if matches!(kind, RelaxationKind::Diagonal | RelaxationKind::Submatrix | RelaxationKind::TwoStep) {
                let ud = b.pad((0..k).map(|i| u.expr(i, i)).collect());
                let xd: Vec<LinExpr> = (0..n).map(|i| x.expr(i, i)).collect();
                b.majorize(&ud, &xd, "dmaj")?;
            }
            if kind == RelaxationKind::Submatrix {
                b.submatrix_rows(&u, &y);
            }
            if kind == RelaxationKind::TwoStep {
                b.two_step_rows(&u, &y);
            }
            b.h.y_mat = Some(y);
            b.h.u_mat = Some(u);
            b.h.x_vec = Some(xv);
            b.h.u_vec = Some(uv);
        }
    }
    Ok(Relaxation { kind, form, n, k, model: b.m.seal()?, handles: b.h })
}

fn outer(v: &[f64]) -> Matrix {
    crate::transport::outer(v)
}

impl Relaxation {
    /// The point induced by a K-sparse unit vector `x` with support `support` (|support| = K).
    ///
    /// `X = xxᵀ`, `Y = |x||x|ᵀ`, `U` the outer product of the sorted magnitudes,
    /// `z` the support indicator and `T_ij = z_i y_j²`; auxiliary variables follow.
    pub fn lift_point(&self, x: &[f64], support: &[usize]) -> Result<Vec<f64>> {
        let (n, k) = (self.n, self.k);
        if x.len() != n {
            return Err(Error::input(format!("point has length {}, expected {n}", x.len())));
        }
        let mut in_support = vec![false; n];
        for &i in support {
            if i >= n || in_support[i] {
                return Err(Error::input("support indices must be distinct and in range"));
            }
            in_support[i] = true;
        }
        if support.len() != k || x.iter().zip(&in_support).any(|(v, &s)| !s && *v != 0.0) {
            return Err(Error::input(format!("need a point supported on exactly K = {k} indices")));
        }
        let y: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let mut u = y.clone();
        u.sort_by(|a, b| b.total_cmp(a));
        let z: Vec<f64> = in_support.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect();

        let h = &self.handles;
        let mut out = vec![0.0; self.model.num_vars()];
        if let Some(m) = &h.x_mat {
            m.set(&mut out, &outer(x));
        }
        if let Some(m) = &h.y_mat {
            let mut yy = outer(&y);
            if self.kind == RelaxationKind::B {
                // Spread the slack of 𝟙ᵀY𝟙 = K over the support diagonal.
                let s1: f64 = y.iter().sum();
                let theta = (k as f64 - s1 * s1) / (k as f64 - 1.0);
                for &i in support {
                    yy[(i, i)] += (1.0 - y[i] * y[i]) * theta;
                }
            }
            m.set(&mut out, &yy);
        }
        if let Some(m) = &h.u_mat {
            m.set(&mut out, &outer(&u[..k]));
        }
        for (ids, vals) in [(&h.x_vec, x), (&h.y_vec, &y[..]), (&h.u_vec, &u[..])] {
            if let Some(ids) = ids {
                for (id, v) in ids.iter().zip(vals) {
                    out[id.0] = *v;
                }
            }
        }
        if let Some(ids) = &h.z {
            for (id, v) in ids.iter().zip(&z) {
                out[id.0] = *v;
            }
        }
        if let Some(t) = &h.t {
            for i in 0..n {
                for j in 0..n {
                    out[t[i][j].0] = z[i] * y[j] * y[j];
                }
            }
        }
        for f in &h.fills {
            f.apply(&mut out)?;
        }
        Ok(out)
    }

    pub fn x_matrix(&self, sol: &[f64]) -> Matrix {
        self.handles.x_mat.as_ref().expect("every relaxation has X").value(sol)
    }
}

#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub report: SolveReport,
    pub x: Vec<f64>,
    pub dual_objective: f64,
}

/// Builds and solves one relaxation with the in-repo conic solver.
pub fn solve_relaxation(
    inst: &SpcaInstance,
    kind: RelaxationKind,
    form: MajorizationForm,
    settings: &ConicSettings,
) -> Result<RelaxationSolution> {
    let relax = build_relaxation(inst, kind, form)?;
    let sol = solve_conic(&relax.model, settings)?;
    Ok(RelaxationSolution { report: sol.report, x: sol.x, dual_objective: sol.dual_objective })
}
