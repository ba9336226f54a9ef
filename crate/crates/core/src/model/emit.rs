use super::{Cmp, ComparatorNetwork, ConicModel, LinExpr, RowId, VarId};
use crate::error::{Error, Result};

/// Variables and rows added by one emitter call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MajorizationCounts {
    pub vars: usize,
    pub rows: usize,
}

/// Rows `u_i ≥ u_{i+1}` for `i = 1..n−1`.
pub fn emit_descending_chain(model: &mut ConicModel, u: &[LinExpr], tag: &str) -> Vec<RowId> {
    (0..u.len().saturating_sub(1))
        .map(|i| {
            let e = u[i].clone() - u[i + 1].clone();
            model.add_row(format!("{tag}_desc{}", i + 1), e, Cmp::Ge, 0.0)
        })
        .collect()
}

/// Auxiliary variables `(r^j, t^j)` of one prefix row.
#[derive(Debug, Clone)]
pub(crate) struct PrefixDual {
    pub j: usize,
    pub r: VarId,
    pub t: Vec<VarId>,
}

/// One comparator: `hi ≥ p`, `hi ≥ q`, `hi + lo = p + q`.
#[derive(Debug, Clone)]
pub(crate) struct ComparatorVars {
    pub hi: VarId,
    pub lo: VarId,
    pub p: LinExpr,
    pub q: LinExpr,
}

/// Rows `Σ_{i≤j} u_i ≥ j·r^j + Σ_i t^j_i`, `x_i ≤ t^j_i + r^j` for `j = 1..=j_max`.
pub(crate) fn emit_prefix_rows(
    model: &mut ConicModel,
    u: &[LinExpr],
    x: &[LinExpr],
    j_max: usize,
    tag: &str,
) -> Vec<RowId> {
    emit_prefix_rows_with(model, u, x, j_max, tag).0
}

pub(crate) fn emit_prefix_rows_with(
    model: &mut ConicModel,
    u: &[LinExpr],
    x: &[LinExpr],
    j_max: usize,
    tag: &str,
) -> (Vec<RowId>, Vec<PrefixDual>) {
    let n = x.len();
    let mut rows = Vec::new();
    let mut duals = Vec::new();
    for j in 1..=j_max {
        let r = model.free_var(format!("{tag}_r{j}"));
        let t: Vec<_> = (0..n).map(|i| model.nonneg_var(format!("{tag}_t{j}_{}", i + 1))).collect();
        let mut lhs = LinExpr::zero();
        for ui in &u[..j] {
            lhs.add_scaled(ui, 1.0);
        }
        lhs.add_term(r, -(j as f64));
        for &ti in &t {
            lhs.add_term(ti, -1.0);
        }
        rows.push(model.add_row(format!("{tag}_top{j}"), lhs, Cmp::Ge, 0.0));
        for i in 0..n {
            let mut e = x[i].clone();
            e.add_term(t[i], -1.0).add_term(r, -1.0);
            rows.push(model.add_row(format!("{tag}_cap{j}_{}", i + 1), e, Cmp::Le, 0.0));
        }
        duals.push(PrefixDual { j, r, t });
    }
    (rows, duals)
}

fn check_dims(u: &[LinExpr], x: &[LinExpr]) -> Result<()> {
    if u.len() != x.len() || u.is_empty() {
        return Err(Error::input(format!(
            "majorization blocks differ in length ({} vs {})",
            u.len(),
            x.len()
        )));
    }
    Ok(())
}

/// `u ≥_m x` through LP-duality rows; `u` is taken to be in descending order.
///
/// With `ensure_descending` the chain `u_1 ≥ … ≥ u_n` is added too.
pub fn emit_majorization(
    model: &mut ConicModel,
    u: &[LinExpr],
    x: &[LinExpr],
    ensure_descending: bool,
    tag: &str,
) -> Result<Vec<RowId>> {
    check_dims(u, x)?;
    let n = u.len();
    let mut rows = if ensure_descending { emit_descending_chain(model, u, tag) } else { Vec::new() };
    rows.extend(emit_prefix_rows(model, u, x, n - 1, tag));
    let mut total = LinExpr::zero();
    for (ui, xi) in u.iter().zip(x) {
        total.add_scaled(ui, 1.0).add_scaled(xi, -1.0);
    }
    rows.push(model.add_row(format!("{tag}_total"), total, Cmp::Eq, 0.0));
    Ok(rows)
}

/// `u ≥_wm x_abs`: prefix rows for every `j = 1..n`, no total equality.
pub fn emit_weak_majorization(
    model: &mut ConicModel,
    u: &[LinExpr],
    x_abs: &[LinExpr],
    ensure_descending: bool,
    tag: &str,
) -> Result<Vec<RowId>> {
    check_dims(u, x_abs)?;
    let mut rows = if ensure_descending { emit_descending_chain(model, u, tag) } else { Vec::new() };
    rows.extend(emit_prefix_rows(model, u, x_abs, u.len(), tag));
    Ok(rows)
}

/// `x` in the permutahedron of a descending `u`, one comparator at a time.
pub fn emit_sorting_majorization(
    model: &mut ConicModel,
    u: &[LinExpr],
    x: &[LinExpr],
    network: &ComparatorNetwork,
    tag: &str,
) -> Result<Vec<RowId>> {
    Ok(emit_sorting_with(model, u, x, network, tag)?.0)
}

pub(crate) fn emit_sorting_with(
    model: &mut ConicModel,
    u: &[LinExpr],
    x: &[LinExpr],
    network: &ComparatorNetwork,
    tag: &str,
) -> Result<(Vec<RowId>, Vec<ComparatorVars>)> {
    check_dims(u, x)?;
    if network.wires != x.len() {
        return Err(Error::input(format!(
            "network has {} wires for a block of length {}",
            network.wires,
            x.len()
        )));
    }
    let mut wires: Vec<Option<LinExpr>> = x.iter().cloned().map(Some).collect();
    wires.resize(network.padded, None);
    let mut rows = Vec::new();
    let mut comps = Vec::new();
    for (k, &(hi, lo)) in network.comparators.iter().enumerate() {
        match (wires[hi].take(), wires[lo].take()) {
            (Some(p), Some(q)) => {
                let h = model.free_var(format!("{tag}_hi{k}"));
                let l = model.free_var(format!("{tag}_lo{k}"));
                rows.push(model.add_row(format!("{tag}_c{k}a"), LinExpr::from(h) - p.clone(), Cmp::Ge, 0.0));
                rows.push(model.add_row(format!("{tag}_c{k}b"), LinExpr::from(h) - q.clone(), Cmp::Ge, 0.0));
                let bal = LinExpr::from(h) + LinExpr::from(l) - p.clone() - q.clone();
                rows.push(model.add_row(format!("{tag}_c{k}s"), bal, Cmp::Eq, 0.0));
                comps.push(ComparatorVars { hi: h, lo: l, p, q });
                wires[hi] = Some(h.into());
                wires[lo] = Some(l.into());
            }
            (Some(p), None) | (None, Some(p)) => wires[hi] = Some(p),
            (None, None) => {}
        }
    }
    for (i, ui) in u.iter().enumerate() {
        let w = wires[i].take().expect("sorted real wires occupy the top positions");
        rows.push(model.add_row(format!("{tag}_out{}", i + 1), w - ui.clone(), Cmp::Eq, 0.0));
    }
    Ok((rows, comps))
}

/// How a permutahedron constraint is written out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MajorizationForm {
    #[default]
    Dual,
    SortNet,
}

impl std::str::FromStr for MajorizationForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dual" => Ok(MajorizationForm::Dual),
            "sortnet" => Ok(MajorizationForm::SortNet),
            _ => Err(Error::input(format!("unknown majorization form '{s}' (use dual or sortnet)"))),
        }
    }
}

/// `u ≥_m x` in the chosen form, `u` descending.
pub fn emit_permutahedron(
    model: &mut ConicModel,
    u: &[LinExpr],
    x: &[LinExpr],
    form: MajorizationForm,
    tag: &str,
) -> Result<Vec<RowId>> {
    match form {
        MajorizationForm::Dual => emit_majorization(model, u, x, false, tag),
        MajorizationForm::SortNet => {
            emit_sorting_majorization(model, u, x, &super::bitonic_network(x.len()), tag)
        }
    }
}

/// Size of one `u ≥_m x` block of length `n`, excluding `u` and `x` themselves.
pub fn majorization_counts(n: usize, form: MajorizationForm) -> MajorizationCounts {
    let mut m = ConicModel::new("count");
    let u: Vec<LinExpr> = (0..n).map(|i| m.free_var(format!("u{i}")).into()).collect();
    let x: Vec<LinExpr> = (0..n).map(|i| m.free_var(format!("x{i}")).into()).collect();
    let base = m.num_vars();
    emit_permutahedron(&mut m, &u, &x, form, "m").expect("blocks have equal length");
    MajorizationCounts { vars: m.num_vars() - base, rows: m.num_rows() }
}
