//! Block-structured conic model shared by emitters, solvers and exporters.

mod emit;
pub mod lp_format;
mod network;
pub mod sdpa;

pub use emit::{
    emit_descending_chain, emit_majorization, emit_permutahedron, emit_sorting_majorization,
    emit_weak_majorization, majorization_counts, MajorizationCounts, MajorizationForm,
};
pub use network::{bitonic_network, ComparatorNetwork};
pub(crate) use emit::{emit_prefix_rows_with, emit_sorting_with, ComparatorVars};

use crate::error::{Error, Result};
use crate::linalg::{jacobi, norm2};
use std::collections::HashSet;
use std::ops::{Add, Deref, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

/// Affine expression `Σ coef·var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn term(v: VarId, c: f64) -> Self {
        LinExpr { terms: vec![(v, c)], constant: 0.0 }
    }

    pub fn sum<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        LinExpr { terms: vars.into_iter().map(|v| (v, 1.0)).collect(), constant: 0.0 }
    }

    pub fn add_term(&mut self, v: VarId, c: f64) -> &mut Self {
        self.terms.push((v, c));
        self
    }

    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>() + self.constant
    }

    /// Merge duplicate variables and drop zero coefficients, keeping first-seen order.
    pub fn canonical(&self) -> LinExpr {
        let mut order: Vec<VarId> = Vec::new();
        let mut acc: std::collections::HashMap<VarId, f64> = std::collections::HashMap::new();
        for &(v, c) in &self.terms {
            match acc.get_mut(&v) {
                Some(a) => *a += c,
                None => {
                    order.push(v);
                    acc.insert(v, c);
                }
            }
        }
        LinExpr {
            terms: order.into_iter().map(|v| (v, acc[&v])).filter(|&(_, c)| c != 0.0).collect(),
            constant: self.constant,
        }
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, s: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Le,
    Ge,
}

/// `expr cmp rhs`, with any expression constant folded into `rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub expr: LinExpr,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// `‖tail‖₂ ≤ head`.
    SecondOrder { name: String, head: LinExpr, tail: Vec<LinExpr> },
    /// Symmetric `dim × dim` matrix ⪰ 0; `entries` is the lower triangle row by row.
    Psd { name: String, dim: usize, entries: Vec<LinExpr> },
}

impl Cone {
    pub fn name(&self) -> &str {
        match self {
            Cone::SecondOrder { name, .. } | Cone::Psd { name, .. } => name,
        }
    }
}

/// Position of `(i, j)` in a row-by-row lower triangle.
pub fn tri_index(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub sense: Sense,
    pub objective: LinExpr,
    pub rows: Vec<Row>,
    pub cones: Vec<Cone>,
}

impl ConicModel {
    pub fn new(name: impl Into<String>) -> Self {
        ConicModel {
            name: name.into(),
            vars: Vec::new(),
            sense: Sense::Minimize,
            objective: LinExpr::zero(),
            rows: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.vars.push(Variable { name: name.into(), lower, upper });
        VarId(self.vars.len() - 1)
    }

    pub fn free_var(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn nonneg_var(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, f64::INFINITY)
    }

    pub fn add_row(&mut self, name: impl Into<String>, expr: LinExpr, cmp: Cmp, rhs: f64) -> RowId {
        let rhs = rhs - expr.constant;
        let expr = LinExpr { terms: expr.canonical().terms, constant: 0.0 };
        self.rows.push(Row { name: name.into(), expr, cmp, rhs });
        RowId(self.rows.len() - 1)
    }

    pub fn add_soc(&mut self, name: impl Into<String>, head: LinExpr, tail: Vec<LinExpr>) {
        self.cones.push(Cone::SecondOrder { name: name.into(), head, tail });
    }

    /// `entries[i][j]` for `j ≤ i`.
    pub fn add_psd(&mut self, name: impl Into<String>, dim: usize, entries: Vec<LinExpr>) {
        self.cones.push(Cone::Psd { name: name.into(), dim, entries });
    }

    pub fn set_objective(&mut self, sense: Sense, objective: LinExpr) {
        self.sense = sense;
        self.objective = objective;
    }

    pub fn has_cones(&self) -> bool {
        !self.cones.is_empty()
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn seal(self) -> Result<SealedModel> {
        self.validate()?;
        Ok(SealedModel(self))
    }

    fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        let mut names = HashSet::new();
        for v in &self.vars {
            if v.name.is_empty() || !names.insert(v.name.as_str()) {
                return Err(Error::input(format!("duplicate or empty variable name '{}'", v.name)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::input(format!("bad bounds on '{}'", v.name)));
            }
        }
        let check = |e: &LinExpr, what: &str| -> Result<()> {
            for &(v, c) in &e.terms {
                if v.0 >= n {
                    return Err(Error::input(format!("{what} references undeclared variable {}", v.0)));
                }
                if !c.is_finite() {
                    return Err(Error::input(format!("{what} has a non-finite coefficient")));
                }
            }
            if !e.constant.is_finite() {
                return Err(Error::input(format!("{what} has a non-finite constant")));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        let mut row_names = HashSet::new();
        for r in &self.rows {
            if r.name.is_empty() || !row_names.insert(r.name.as_str()) {
                return Err(Error::input(format!("duplicate or empty row name '{}'", r.name)));
            }
            check(&r.expr, &r.name)?;
            if !r.rhs.is_finite() {
                return Err(Error::input(format!("row '{}' has a non-finite rhs", r.name)));
            }
        }
        for c in &self.cones {
            match c {
                Cone::SecondOrder { name, head, tail } => {
                    check(head, name)?;
                    for t in tail {
                        check(t, name)?;
                    }
                }
                Cone::Psd { name, dim, entries } => {
                    if entries.len() != dim * (dim + 1) / 2 {
                        return Err(Error::input(format!("PSD block '{name}' is not square")));
                    }
                    for e in entries {
                        check(e, name)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// A validated model; immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct SealedModel(ConicModel);

impl Deref for SealedModel {
    type Target = ConicModel;
    fn deref(&self) -> &ConicModel {
        &self.0
    }
}

impl SealedModel {
    pub fn into_inner(self) -> ConicModel {
        self.0
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Every constraint's violation at `x` (zero when satisfied).
    pub fn violations(&self, x: &[f64]) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for v in self.vars.iter().zip(x) {
            let (var, &val) = v;
            let viol = (var.lower - val).max(val - var.upper).max(0.0);
            out.push((format!("bound:{}", var.name), viol));
        }
        for r in &self.rows {
            let lhs = r.expr.eval(x);
            let viol = match r.cmp {
                Cmp::Eq => (lhs - r.rhs).abs(),
                Cmp::Le => (lhs - r.rhs).max(0.0),
                Cmp::Ge => (r.rhs - lhs).max(0.0),
            };
            out.push((r.name.clone(), viol));
        }
        for c in &self.cones {
            let viol = match c {
                Cone::SecondOrder { head, tail, .. } => {
                    let t: Vec<f64> = tail.iter().map(|e| e.eval(x)).collect();
                    (norm2(&t) - head.eval(x)).max(0.0)
                }
                Cone::Psd { dim, entries, .. } => {
                    let m = psd_matrix(*dim, entries, x);
                    let ev = jacobi(&m, *dim, false).values;
                    (-ev.last().copied().unwrap_or(0.0)).max(0.0)
                }
            };
            out.push((c.name().to_string(), viol));
        }
        out
    }

    pub fn max_violation(&self, x: &[f64]) -> (String, f64) {
        self.violations(x)
            .into_iter()
            .fold((String::new(), 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}

/// Dense symmetric matrix of a PSD block evaluated at `x`.
pub(crate) fn psd_matrix(dim: usize, entries: &[LinExpr], x: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let v = entries[tri_index(i, j)].eval(x);
            m[i * dim + j] = v;
            m[j * dim + i] = v;
        }
    }
    m
}

/// Lower-triangle entry list for a symmetric matrix given by a closure.
pub fn lower_triangle<F: FnMut(usize, usize) -> LinExpr>(dim: usize, mut f: F) -> Vec<LinExpr> {
    let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in 0..=i {
            out.push(f(i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_fold_constants() {
        let mut m = ConicModel::new("t");
        let x = m.free_var("x");
        let mut e = LinExpr::from(x);
        e.constant = 2.0;
        m.add_row("c", e, Cmp::Ge, 3.0);
        assert_eq!(m.rows[0].rhs, 1.0);
        assert_eq!(m.rows[0].expr.constant, 0.0);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut m = ConicModel::new("t");
        m.free_var("x");
        m.free_var("x");
        assert!(m.seal().is_err());
    }

    #[test]
    fn psd_shape_checked() {
        let mut m = ConicModel::new("t");
        let x = m.free_var("x");
        m.add_psd("P", 2, vec![x.into(), x.into()]);
        assert!(m.seal().is_err());
    }

    #[test]
    fn violations_cover_all_blocks() {
        let mut m = ConicModel::new("t");
        let y = m.free_var("y");
        let t1 = m.nonneg_var("t1");
        let t2 = m.nonneg_var("t2");
        m.add_soc(
            "rot",
            LinExpr::from(t1) + LinExpr::from(t2),
            vec![LinExpr::term(y, 2.0), LinExpr::from(t1) - LinExpr::from(t2)],
        );
        let m = m.seal().unwrap();
        assert_eq!(m.max_violation(&[2.0, 2.0, 2.0]).1, 0.0);
        assert!(m.max_violation(&[3.0, 2.0, 2.0]).1 > 0.1);
    }
}
