//! CPLEX-style LP text for purely linear models.
//!
//! Every variable appears in the `Bounds` section in declaration order, so a
//! parse of the output rebuilds the same model.

use super::{Cmp, ConicModel, LinExpr, Sense, VarId};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write;

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || "_.[]".contains(c))
}

fn write_terms(out: &mut String, model: &ConicModel, e: &LinExpr) {
    if e.terms.is_empty() {
        out.push_str(" 0.0");
    }
    for (k, &(v, c)) in e.terms.iter().enumerate() {
        let neg = c.is_sign_negative();
        let sep = match (k, neg) {
            (0, false) => " ",
            (0, true) => " - ",
            (_, false) => " + ",
            (_, true) => " - ",
        };
        let _ = write!(out, "{sep}{} {}", num(c.abs()), model.vars[v.0].name);
    }
}

pub fn export_lp(model: &ConicModel) -> Result<String> {
    if model.has_cones() {
        return Err(Error::Capability("LP format cannot express cone blocks".into()));
    }
    for name in model.vars.iter().map(|v| &v.name).chain(model.rows.iter().map(|r| &r.name)) {
        if !valid_name(name) {
            return Err(Error::Capability(format!("name '{name}' is not representable in LP format")));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str(match model.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, model, &model.objective);
    if model.objective.constant != 0.0 {
        let c = model.objective.constant;
        let _ = write!(out, " {} {}", if c.is_sign_negative() { "-" } else { "+" }, num(c.abs()));
    }
    out.push_str("\nSubject To\n");
    for r in &model.rows {
        let _ = write!(out, " {}:", r.name);
        write_terms(&mut out, model, &r.expr);
        let op = match r.cmp {
            Cmp::Eq => "=",
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", num(r.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        let line = match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => format!(" {} free", v.name),
            (true, false) => format!(" {} >= {}", v.name, num(v.lower)),
            (false, true) => format!(" -inf <= {} <= {}", v.name, num(v.upper)),
            (true, true) if v.lower == v.upper => format!(" {} = {}", v.name, num(v.lower)),
            (true, true) => format!(" {} <= {} <= {}", num(v.lower), v.name, num(v.upper)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(PartialEq)]
enum Section {
    Head,
    Objective,
    Rows,
    Bounds,
    Done,
}

/// Parse `[sign] coef name` tokens; a trailing bare number is a constant.
fn parse_terms(tokens: &[&str], line: usize, names: &mut Vec<String>) -> Result<(Vec<(usize, f64)>, f64)> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut k = 0;
    let mut sign = 1.0;
    while k < tokens.len() {
        match tokens[k] {
            "+" => {
                sign = 1.0;
                k += 1;
                continue;
            }
            "-" => {
                sign = -1.0;
                k += 1;
                continue;
            }
            _ => {}
        }
        let c: f64 = tokens[k]
            .parse()
            .map_err(|_| Error::parse(line, format!("expected a number, got '{}'", tokens[k])))?;
        match tokens.get(k + 1) {
            Some(&name) if name != "+" && name != "-" => {
                let idx = match names.iter().position(|n| n == name) {
                    Some(i) => i,
                    None => {
                        names.push(name.to_string());
                        names.len() - 1
                    }
                };
                terms.push((idx, sign * c));
                k += 2;
            }
            _ => {
                constant += sign * c;
                k += 1;
            }
        }
        sign = 1.0;
    }
    Ok((terms, constant))
}

pub fn parse_lp(text: &str) -> Result<ConicModel> {
    let mut name = String::new();
    let mut sense = None;
    let mut section = Section::Head;
    let mut names: Vec<String> = Vec::new();
    let mut objective: (Vec<(usize, f64)>, f64) = (Vec::new(), 0.0);
    let mut rows: Vec<(String, Vec<(usize, f64)>, Cmp, f64)> = Vec::new();
    let mut bounds: Vec<(String, f64, f64)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('\\') {
            if section == Section::Head && name.is_empty() {
                name = rest.trim().to_string();
            }
            continue;
        }
        match trimmed {
            "Minimize" | "Maximize" => {
                sense = Some(if trimmed == "Minimize" { Sense::Minimize } else { Sense::Maximize });
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Rows;
                continue;
            }
            "Bounds" => {
                section = Section::Bounds;
                continue;
            }
            "End" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match section {
            Section::Objective => {
                let body = tokens
                    .split_first()
                    .filter(|(h, _)| h.ends_with(':'))
                    .map(|(_, b)| b)
                    .ok_or_else(|| Error::parse(line, "objective must be labelled"))?;
                objective = parse_terms(body, line, &mut names)?;
            }
            Section::Rows => {
                let (label, body) = tokens
                    .split_first()
                    .filter(|(h, _)| h.ends_with(':'))
                    .ok_or_else(|| Error::parse(line, "row must be labelled"))?;
                if body.len() < 2 {
                    return Err(Error::parse(line, "row is missing a comparison"));
                }
                let (lhs, tail) = body.split_at(body.len() - 2);
                let cmp = match tail[0] {
                    "=" => Cmp::Eq,
                    "<=" => Cmp::Le,
                    ">=" => Cmp::Ge,
                    other => return Err(Error::parse(line, format!("unknown comparison '{other}'"))),
                };
                let rhs: f64 = tail[1].parse().map_err(|_| Error::parse(line, "bad right-hand side"))?;
                let (terms, constant) = parse_terms(lhs, line, &mut names)?;
                if constant != 0.0 {
                    return Err(Error::parse(line, "constant on the left of a row"));
                }
                rows.push((label.trim_end_matches(':').to_string(), terms, cmp, rhs));
            }
            Section::Bounds => {
                let p = |s: &str| -> Result<f64> {
                    s.parse().map_err(|_| Error::parse(line, format!("bad bound '{s}'")))
                };
                let b = match tokens.as_slice() {
                    [v, "free"] => (v.to_string(), f64::NEG_INFINITY, f64::INFINITY),
                    [v, ">=", l] => (v.to_string(), p(l)?, f64::INFINITY),
                    [v, "<=", u] => (v.to_string(), 0.0, p(u)?),
                    [v, "=", x] => (v.to_string(), p(x)?, p(x)?),
                    [l, "<=", v, "<=", u] => (v.to_string(), p(l)?, p(u)?),
                    _ => return Err(Error::parse(line, "unrecognised bound")),
                };
                bounds.push(b);
            }
            Section::Head | Section::Done => {
                return Err(Error::parse(line, format!("unexpected text '{trimmed}'")));
            }
        }
    }
    let sense = sense.ok_or_else(|| Error::parse(0, "missing objective sense"))?;
    if section != Section::Done {
        return Err(Error::parse(text.lines().count(), "missing End"));
    }

    // Declaration order comes from Bounds; unlisted variables follow with default bounds.
    let mut model = ConicModel::new(name);
    let mut remap: HashMap<usize, VarId> = HashMap::new();
    for (v, l, u) in &bounds {
        let id = model.add_var(v.clone(), *l, *u);
        if let Some(i) = names.iter().position(|n| n == v) {
            remap.insert(i, id);
        }
    }
    for (i, n) in names.iter().enumerate() {
        remap.entry(i).or_insert_with(|| model.add_var(n.clone(), 0.0, f64::INFINITY));
    }
    let expr = |terms: &[(usize, f64)], constant: f64| LinExpr {
        terms: terms.iter().map(|&(i, c)| (remap[&i], c)).collect(),
        constant,
    };
    model.set_objective(sense, expr(&objective.0, objective.1));
    for (label, terms, cmp, rhs) in &rows {
        model.rows.push(super::Row { name: label.clone(), expr: expr(terms, 0.0), cmp: *cmp, rhs: *rhs });
    }
    Ok(model)
}
