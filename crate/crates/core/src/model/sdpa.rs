//! SDPA sparse format (`.dat-s`).
//!
//! The exported problem is `min Σ c_i x_i` subject to `Σ F_i x_i − F_0 ⪰ 0`,
//! one model variable per `x_i`. Blocks appear as: PSD cones in model order,
//! second-order cones as arrow matrices `[h tᵀ; t h·I]`, then one diagonal
//! block carrying every linear row and finite bound. A maximization is
//! exported as the minimization of the negated objective; the objective
//! constant is dropped.

use super::{tri_index, Cmp, ConicModel, Cone, LinExpr, Sense};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    pub m: usize,
    /// Negative entries are diagonal blocks.
    pub block_sizes: Vec<i64>,
    pub c: Vec<f64>,
    /// `(matrix, block, i, j, value)`, 1-based with `i ≤ j`; matrix 0 is `F_0`.
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

#[derive(Default)]
struct Acc(BTreeMap<(usize, usize, usize, usize), f64>);

impl Acc {
    fn add(&mut self, mat: usize, blk: usize, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            *self.0.entry((mat, blk, i, j)).or_insert(0.0) += v;
        }
    }

    /// Place `expr` at `(i, j)`: variable coefficients into `F_k`, the constant negated into `F_0`.
    fn expr(&mut self, blk: usize, i: usize, j: usize, e: &LinExpr) {
        for &(v, c) in &e.terms {
            self.add(v.0 + 1, blk, i, j, c);
        }
        self.add(0, blk, i, j, -e.constant);
    }
}

impl SdpaProblem {
    pub fn from_model(model: &ConicModel) -> Result<Self> {
        let m = model.num_vars();
        if m == 0 {
            return Err(Error::Capability("SDPA export needs at least one variable".into()));
        }
        let sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c = vec![0.0; m];
        for &(v, coef) in &model.objective.terms {
            c[v.0] += sign * coef;
        }
        let mut acc = Acc::default();
        let mut block_sizes = Vec::new();
        for cone in &model.cones {
            if let Cone::Psd { dim, entries, .. } = cone {
                block_sizes.push(*dim as i64);
                let blk = block_sizes.len();
                for i in 0..*dim {
                    for j in 0..=i {
                        acc.expr(blk, j + 1, i + 1, &entries[tri_index(i, j)]);
                    }
                }
            }
        }
        for cone in &model.cones {
            if let Cone::SecondOrder { head, tail, .. } = cone {
                let dim = tail.len() + 1;
                block_sizes.push(dim as i64);
                let blk = block_sizes.len();
                for k in 1..=dim {
                    acc.expr(blk, k, k, head);
                }
                for (k, t) in tail.iter().enumerate() {
                    acc.expr(blk, 1, k + 2, t);
                }
            }
        }
        let mut diag: Vec<LinExpr> = Vec::new();
        for r in &model.rows {
            let base = LinExpr { terms: r.expr.terms.clone(), constant: -r.rhs };
            match r.cmp {
                Cmp::Ge => diag.push(base),
                Cmp::Le => diag.push(-base),
                Cmp::Eq => {
                    diag.push(base.clone());
                    diag.push(-base);
                }
            }
        }
        for (k, v) in model.vars.iter().enumerate() {
            let x = LinExpr::term(super::VarId(k), 1.0);
            if v.lower.is_finite() {
                diag.push(x.clone() - LinExpr::constant(v.lower));
            }
            if v.upper.is_finite() {
                diag.push(LinExpr::constant(v.upper) - x);
            }
        }
        if !diag.is_empty() {
            block_sizes.push(-(diag.len() as i64));
            let blk = block_sizes.len();
            for (k, e) in diag.iter().enumerate() {
                acc.expr(blk, k + 1, k + 1, e);
            }
        }
        if block_sizes.is_empty() {
            return Err(Error::Capability("SDPA export needs at least one constraint".into()));
        }
        let entries = acc.0.into_iter().filter(|&(_, v)| v != 0.0).map(|((a, b, i, j), v)| (a, b, i, j, v)).collect();
        Ok(SdpaProblem { m, block_sizes, c, entries })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.m);
        let _ = writeln!(out, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let c: Vec<String> = self.c.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", c.join(" "));
        for &(a, b, i, j, v) in &self.entries {
            let _ = writeln!(out, "{a} {b} {i} {j} {v:?}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::parse(0, format!("missing {what}")));
        let tokens = |l: &str| -> Vec<String> {
            l.split(|c: char| c.is_whitespace() || ",{}()".contains(c))
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        };

        let (ln, l) = next("m")?;
        let m: usize = tokens(l).first().and_then(|t| t.parse().ok()).ok_or_else(|| Error::parse(ln, "bad m"))?;
        let (ln, l) = next("block count")?;
        let nb: usize = tokens(l).first().and_then(|t| t.parse().ok()).ok_or_else(|| Error::parse(ln, "bad block count"))?;
        let (ln, l) = next("block sizes")?;
        let block_sizes: Vec<i64> = tokens(l)
            .iter()
            .take(nb)
            .map(|t| t.parse().map_err(|_| Error::parse(ln, "bad block size")))
            .collect::<Result<_>>()?;
        if block_sizes.len() != nb || block_sizes.contains(&0) {
            return Err(Error::parse(ln, "block structure does not match block count"));
        }
        let (ln, l) = next("objective")?;
        let c: Vec<f64> = tokens(l)
            .iter()
            .take(m)
            .map(|t| t.parse().map_err(|_| Error::parse(ln, "bad objective coefficient")))
            .collect::<Result<_>>()?;
        if c.len() != m {
            return Err(Error::parse(ln, "objective length differs from m"));
        }
        let mut entries = Vec::new();
        for (ln, l) in lines {
            let t = tokens(l);
            if t.len() != 5 {
                return Err(Error::parse(ln, "entry needs five fields"));
            }
            let u = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(ln, "bad index"));
            let (a, b, i, j) = (u(&t[0])?, u(&t[1])?, u(&t[2])?, u(&t[3])?);
            let v: f64 = t[4].parse().map_err(|_| Error::parse(ln, "bad value"))?;
            if a > m || b == 0 || b > nb || i == 0 || j == 0 || i > j {
                return Err(Error::parse(ln, "entry index out of range"));
            }
            let size = block_sizes[b - 1].unsigned_abs() as usize;
            if j > size || (block_sizes[b - 1] < 0 && i != j) {
                return Err(Error::parse(ln, "entry outside its block"));
            }
            entries.push((a, b, i, j, v));
        }
        Ok(SdpaProblem { m, block_sizes, c, entries })
    }

    /// Rebuild a minimization model with free variables `x1..xm`.
    pub fn to_model(&self, name: &str) -> ConicModel {
        let mut model = ConicModel::new(name);
        let x: Vec<_> = (0..self.m).map(|k| model.free_var(format!("x{}", k + 1))).collect();
        let mut obj = LinExpr::zero();
        for (k, &c) in self.c.iter().enumerate() {
            if c != 0.0 {
                obj.add_term(x[k], c);
            }
        }
        model.set_objective(Sense::Minimize, obj);
        for (b, &size) in self.block_sizes.iter().enumerate() {
            let dim = size.unsigned_abs() as usize;
            let mut cells: Vec<LinExpr> = vec![LinExpr::zero(); dim * (dim + 1) / 2];
            for &(a, blk, i, j, v) in &self.entries {
                if blk != b + 1 {
                    continue;
                }
                let cell = &mut cells[tri_index(j - 1, i - 1)];
                if a == 0 {
                    cell.constant -= v;
                } else {
                    cell.add_term(x[a - 1], v);
                }
            }
            if size < 0 {
                for k in 0..dim {
                    let e = cells[tri_index(k, k)].clone();
                    model.add_row(format!("b{}_{}", b + 1, k + 1), e, Cmp::Ge, 0.0);
                }
            } else {
                model.add_psd(format!("b{}", b + 1), dim, cells);
            }
        }
        model
    }
}

pub fn export_sdpa(model: &ConicModel) -> Result<String> {
    Ok(SdpaProblem::from_model(model)?.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_exports_as_one_diagonal_block() {
        let mut m = ConicModel::new("t");
        let x = m.free_var("x");
        m.add_row("c", x.into(), Cmp::Ge, 1.0);
        m.set_objective(Sense::Minimize, x.into());
        assert_eq!(export_sdpa(&m).unwrap(), "1\n1\n-1\n1.0\n0 1 1 1 1.0\n1 1 1 1 1.0\n");
    }

    #[test]
    fn parse_round_trip() {
        let mut m = ConicModel::new("t");
        let a = m.nonneg_var("a");
        let b = m.free_var("b");
        m.add_psd("P", 2, vec![a.into(), LinExpr::term(b, 0.5), LinExpr::constant(1.0)]);
        m.add_soc("q", LinExpr::from(a), vec![LinExpr::from(b)]);
        m.set_objective(Sense::Maximize, LinExpr::from(b));
        let p = SdpaProblem::from_model(&m).unwrap();
        assert_eq!(p.block_sizes, vec![2, 2, -1]);
        assert_eq!(SdpaProblem::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn rejects_lower_triangle_entries() {
        let err = SdpaProblem::parse("1\n1\n2\n1.0\n1 1 2 1 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }));
    }
}
