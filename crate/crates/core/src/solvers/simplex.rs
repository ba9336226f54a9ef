//! Dense two-phase primal simplex on a full tableau.

use super::{SolveReport, Status};
use crate::error::{Error, Result};
use crate::model::{Cmp, SealedModel, Sense};
use std::time::Instant;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub report: SolveReport,
    pub x: Vec<f64>,
    /// One per model row, for the minimization form (`Maximize` models are negated first).
    pub row_duals: Vec<f64>,
    /// Dual objective in the model's own sense.
    pub dual_objective: f64,
}

#[derive(Clone, Copy)]
enum VarMap {
    /// `x = offset + s`.
    Shift { col: usize, offset: f64 },
    /// `x = offset − s`.
    Flip { col: usize, offset: f64 },
    /// `x = s⁺ − s⁻`.
    Split { pos: usize, neg: usize },
}

struct StdRow {
    coefs: Vec<(usize, f64)>,
    cmp: Cmp,
    rhs: f64,
}

struct Tableau {
    m: usize,
    width: usize,
    t: Vec<f64>,
    d: Vec<f64>,
    z: f64,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[r * w + c];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (v, &pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for (v, &pr) in self.d.iter_mut().zip(&pivot_row[..w - 1]) {
                *v -= f * pr;
            }
            self.z += f * pivot_row[w - 1];
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        self.z = 0.0;
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.width - 1 {
                    self.d[j] -= cb * self.at(i, j);
                }
                self.z += cb * self.rhs(i);
            }
        }
    }

    /// Run simplex pivots; `allowed` marks columns that may enter.
    fn optimize(&mut self, allowed: &[bool], pivots: &mut usize) -> Status {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if *pivots >= MAX_PIVOTS {
                return Status::MaxIter;
            }
            let mut enter = None;
            let mut best = -COST_TOL;
            for (j, &ok) in allowed.iter().enumerate() {
                if ok && self.d[j] < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = self.d[j];
                }
            }
            let Some(c) = enter else { return Status::Optimal };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, r)) => {
                        let tie = (ratio - r).abs() <= 1e-12 * (1.0 + r.abs());
                        let better = if tie {
                            if bland {
                                self.basis[i] < self.basis[k]
                            } else {
                                a > self.at(k, c)
                            }
                        } else {
                            ratio < r
                        };
                        if better {
                            Some((i, ratio))
                        } else {
                            Some((k, r))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else { return Status::Unbounded };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            self.pivot(r, c);
            *pivots += 1;
        }
    }
}

/// Solve a model with linear rows and bounds only.
pub fn solve_lp(model: &SealedModel) -> Result<LpSolution> {
    if model.has_cones() {
        return Err(Error::Capability("simplex handles linear rows and bounds only".into()));
    }
    let start = Instant::now();
    let sign = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };

    // Standard form: every model variable becomes shifted, flipped or split nonnegative columns.
    let mut maps = Vec::with_capacity(model.num_vars());
    let mut ns = 0usize;
    let mut rows: Vec<StdRow> = Vec::new();
    for v in &model.vars {
        let map = if v.lower.is_finite() {
            let m = VarMap::Shift { col: ns, offset: v.lower };
            if v.upper.is_finite() {
                rows.push(StdRow { coefs: vec![(ns, 1.0)], cmp: Cmp::Le, rhs: v.upper - v.lower });
            }
            ns += 1;
            m
        } else if v.upper.is_finite() {
            ns += 1;
            VarMap::Flip { col: ns - 1, offset: v.upper }
        } else {
            ns += 2;
            VarMap::Split { pos: ns - 2, neg: ns - 1 }
        };
        maps.push(map);
    }
    let n_bound_rows = rows.len();
    let substitute = |terms: &[(crate::model::VarId, f64)]| -> (Vec<(usize, f64)>, f64) {
        let mut out = Vec::with_capacity(terms.len());
        let mut shift = 0.0;
        for &(v, c) in terms {
            match maps[v.0] {
                VarMap::Shift { col, offset } => {
                    out.push((col, c));
                    shift += c * offset;
                }
                VarMap::Flip { col, offset } => {
                    out.push((col, -c));
                    shift += c * offset;
                }
                VarMap::Split { pos, neg } => {
                    out.push((pos, c));
                    out.push((neg, -c));
                }
            }
        }
        (out, shift)
    };
    for r in &model.rows {
        let (coefs, shift) = substitute(&r.expr.terms);
        rows.push(StdRow { coefs, cmp: r.cmp, rhs: r.rhs - shift });
    }
    let (obj_coefs, obj_shift) = substitute(&model.objective.terms);
    let obj_const = sign * (model.objective.constant + obj_shift);

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
    let mut row_sign = vec![1.0; m];
    let mut id_col = vec![usize::MAX; m];
    let mut slack_of = vec![None; m];
    {
        let mut k = ns;
        for (i, r) in rows.iter().enumerate() {
            if r.cmp != Cmp::Eq {
                slack_of[i] = Some(k);
                k += 1;
            }
        }
    }
    let mut n_art = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.rhs < 0.0 {
            row_sign[i] = -1.0;
        }
        let slack_coef = match r.cmp {
            Cmp::Le => 1.0,
            Cmp::Ge => -1.0,
            Cmp::Eq => 0.0,
        } * row_sign[i];
        if slack_coef > 0.0 {
            id_col[i] = slack_of[i].unwrap();
        } else {
            id_col[i] = ns + n_slack + n_art;
            n_art += 1;
        }
    }
    let ncols = ns + n_slack + n_art;
    let width = ncols + 1;
    let mut t = vec![0.0; m * width];
    for (i, r) in rows.iter().enumerate() {
        let s = row_sign[i];
        for &(c, a) in &r.coefs {
            t[i * width + c] += s * a;
        }
        if let Some(k) = slack_of[i] {
            t[i * width + k] = s * if r.cmp == Cmp::Le { 1.0 } else { -1.0 };
        }
        t[i * width + id_col[i]] = 1.0;
        t[i * width + ncols] = s * r.rhs;
    }
    let is_art: Vec<bool> = (0..ncols).map(|j| j >= ns + n_slack).collect();
    let mut tab = Tableau { m, width, t, d: vec![0.0; ncols], z: 0.0, basis: id_col.clone() };
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    let mut pivots = 0usize;

    let finish = |status: Status, pivots: usize| LpSolution {
        report: SolveReport {
            status,
            objective: f64::NAN,
            iterations: pivots,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            seconds: start.elapsed().as_secs_f64(),
        },
        x: vec![f64::NAN; model.num_vars()],
        row_duals: vec![f64::NAN; model.num_rows()],
        dual_objective: f64::NAN,
    };

    if n_art > 0 {
        let phase1: Vec<f64> = (0..ncols).map(|j| if is_art[j] { 1.0 } else { 0.0 }).collect();
        tab.set_costs(&phase1);
        let st = tab.optimize(&allowed, &mut pivots);
        if st == Status::MaxIter {
            return Ok(finish(st, pivots));
        }
        let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if tab.z > 1e-9 * scale {
            return Ok(finish(Status::Infeasible, pivots));
        }
        for i in 0..m {
            if is_art[tab.basis[i]] {
                if let Some(j) = (0..ncols).find(|&j| !is_art[j] && tab.at(i, j).abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                    pivots += 1;
                }
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    for &(c, a) in &obj_coefs {
        cost[c] += sign * a;
    }
    tab.set_costs(&cost);
    let st = tab.optimize(&allowed, &mut pivots);
    if st != Status::Optimal {
        return Ok(finish(st, pivots));
    }

    let mut xs = vec![0.0; ncols];
    for i in 0..m {
        xs[tab.basis[i]] = tab.rhs(i);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|mp| match *mp {
            VarMap::Shift { col, offset } => offset + xs[col],
            VarMap::Flip { col, offset } => offset - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();
    let y: Vec<f64> = (0..m).map(|i| -tab.d[id_col[i]] * row_sign[i]).collect();
    let dual_min: f64 = rows.iter().zip(&y).map(|(r, yi)| r.rhs * yi).sum::<f64>() + obj_const;
    let primal_min = tab.z + obj_const;

    let mut dual_res = 0.0f64;
    for j in 0..ncols {
        if allowed[j] {
            dual_res = dual_res.max(-tab.d[j]).max((xs[j] * tab.d[j]).abs());
        }
    }
    let primal_res = model.max_violation(&x).1;
    let objective = model.objective_value(&x);
    debug_assert!((objective - sign * primal_min).abs() <= 1e-6 * (1.0 + objective.abs()));
    Ok(LpSolution {
        report: SolveReport {
            status: Status::Optimal,
            objective,
            iterations: pivots,
            primal_residual: primal_res,
            dual_residual: dual_res,
            seconds: start.elapsed().as_secs_f64(),
        },
        x,
        row_duals: y[n_bound_rows..].to_vec(),
        dual_objective: sign * dual_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConicModel, LinExpr};

    #[test]
    fn single_bound_row() {
        let mut m = ConicModel::new("t");
        let x = m.free_var("x");
        m.add_row("c", x.into(), Cmp::Ge, 1.0);
        m.set_objective(Sense::Minimize, x.into());
        let s = solve_lp(&m.seal().unwrap()).unwrap();
        assert_eq!(s.report.status, Status::Optimal);
        assert!((s.report.objective - 1.0).abs() < 1e-12);
        assert!((s.dual_objective - 1.0).abs() < 1e-12);
        assert!((s.row_duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut m = ConicModel::new("t");
        let x = m.nonneg_var("x");
        m.add_row("c", x.into(), Cmp::Le, -1.0);
        assert_eq!(solve_lp(&m.seal().unwrap()).unwrap().report.status, Status::Infeasible);

        let mut m = ConicModel::new("t");
        let x = m.free_var("x");
        m.set_objective(Sense::Maximize, x.into());
        m.add_row("c", x.into(), Cmp::Ge, 0.0);
        assert_eq!(solve_lp(&m.seal().unwrap()).unwrap().report.status, Status::Unbounded);
    }

    #[test]
    fn bounded_maximize() {
        let mut m = ConicModel::new("t");
        let x = m.add_var("x", -1.0, 2.0);
        let y = m.add_var("y", f64::NEG_INFINITY, 3.0);
        m.add_row("s", LinExpr::from(x) + LinExpr::from(y), Cmp::Le, 4.0);
        m.set_objective(Sense::Maximize, LinExpr::term(x, 2.0) + LinExpr::from(y));
        let s = solve_lp(&m.seal().unwrap()).unwrap();
        assert!((s.report.objective - 6.0).abs() < 1e-12);
        assert!((s.dual_objective - 6.0).abs() < 1e-12);
    }
}
