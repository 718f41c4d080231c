//! CPLEX LP text export of a [`GenericMilp`] and a reader for the subset
//! the writer produces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use cddp_core::milp::{GenericMilp, Sense, VarKind};
use thiserror::Error;

const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing `End`")]
    Unterminated,
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+infinity".into()
    } else if v == f64::NEG_INFINITY {
        "-infinity".into()
    } else {
        format!("{v}")
    }
}

fn push_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    for (k, (a, name)) in terms.enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {name}", num(a.abs()));
    }
}

pub fn write_lp(milp: &GenericMilp) -> String {
    let vars = milp.vars();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", milp.name);
    out.push_str("Minimize\n obj:");
    push_terms(
        &mut out,
        vars.iter().filter(|v| v.objective != 0.0).map(|v| (v.objective, v.name.clone())),
    );
    if milp.objective_offset != 0.0 || vars.iter().all(|v| v.objective == 0.0) {
        let a = milp.objective_offset;
        let _ = write!(out, " {} {}", if a.is_sign_negative() { '-' } else { '+' }, num(a.abs()));
    }
    out.push_str("\nSubject To\n");
    for row in milp.rows() {
        let _ = write!(out, " {}:", row.name);
        push_terms(&mut out, row.coeffs.iter().map(|&(j, a)| (a, vars[j].name.clone())));
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in vars {
        let default = match v.kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (0.0, f64::INFINITY),
        };
        if (v.lower, v.upper) == default {
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, num(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
        }
    }
    let binaries: Vec<&str> = vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

/// Name-keyed reading of an LP model; column order is not preserved by
/// the format.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpModel {
    pub objective: BTreeMap<String, f64>,
    pub offset: f64,
    pub rows: Vec<LpRow>,
    /// Explicit bounds; other columns keep their defaults.
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub binaries: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub coeffs: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpModel {
    /// The reading [`read_lp`] gives of `write_lp(milp)`.
    pub fn from_milp(milp: &GenericMilp) -> Self {
        let vars = milp.vars();
        let mut m = LpModel { offset: milp.objective_offset, ..Default::default() };
        for v in vars {
            if v.objective != 0.0 {
                m.objective.insert(v.name.clone(), v.objective);
            }
            let default = match v.kind {
                VarKind::Binary => (0.0, 1.0),
                VarKind::Continuous => (0.0, f64::INFINITY),
            };
            if (v.lower, v.upper) != default {
                m.bounds.insert(v.name.clone(), (v.lower, v.upper));
            }
            if v.kind == VarKind::Binary {
                m.binaries.insert(v.name.clone());
            }
        }
        m.rows = milp
            .rows()
            .iter()
            .map(|r| LpRow {
                name: r.name.clone(),
                coeffs: r.coeffs.iter().map(|&(j, a)| (vars[j].name.clone(), a)).collect(),
                sense: r.sense,
                rhs: r.rhs,
            })
            .collect();
        m
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimum" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        _ => None,
    }
}

fn parse_num(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "+infinity" | "infinity" | "+inf" | "inf" => Some(f64::INFINITY),
        "-infinity" | "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

fn sense_of(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "<" | "=<" => Some(Sense::Le),
        ">=" | ">" | "=>" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Tokens of one statement with the line each starts on.
struct Statement {
    line: usize,
    tokens: Vec<String>,
}

/// Signed terms, a constant and the index of the first unread token.
type Expr = (Vec<(String, f64)>, f64, usize);

/// Linear expression up to a sense token.
fn parse_expr(st: &Statement, mut i: usize) -> Result<Expr, LpError> {
    let err = |m: &str| LpError::Parse { line: st.line, message: m.into() };
    let t = &st.tokens;
    let mut terms = Vec::new();
    let mut constant = 0.0;
    while i < t.len() && sense_of(&t[i]).is_none() {
        let mut sign = 1.0;
        if t[i] == "+" || t[i] == "-" {
            if t[i] == "-" {
                sign = -1.0;
            }
            i += 1;
        }
        let tok = t.get(i).ok_or_else(|| err("dangling sign"))?;
        match parse_num(tok) {
            Some(a) => {
                i += 1;
                match t.get(i) {
                    Some(name) if name != "+" && name != "-" && sense_of(name).is_none() => {
                        terms.push((name.clone(), sign * a));
                        i += 1;
                    }
                    _ => constant += sign * a,
                }
            }
            None => {
                terms.push((tok.clone(), sign));
                i += 1;
            }
        }
    }
    Ok((terms, constant, i))
}

pub fn read_lp(text: &str) -> Result<LpModel, LpError> {
    let mut model = LpModel::default();
    let mut section = Section::Preamble;
    let mut pending: Option<Statement> = None;
    let mut ended = false;

    let flush = |model: &mut LpModel, section: Section, st: Statement| -> Result<(), LpError> {
        let err = |m: String| LpError::Parse { line: st.line, message: m };
        match section {
            Section::Objective => {
                let start = usize::from(st.tokens.first().is_some_and(|t| t.ends_with(':')));
                let (terms, constant, end) = parse_expr(&st, start)?;
                if end != st.tokens.len() {
                    return Err(err("comparison in the objective".into()));
                }
                for (name, a) in terms {
                    *model.objective.entry(name).or_insert(0.0) += a;
                }
                model.offset += constant;
            }
            Section::Constraints => {
                let name = st.tokens.first().and_then(|t| t.strip_suffix(':')).map(str::to_string);
                let start = usize::from(name.is_some());
                let (coeffs, constant, i) = parse_expr(&st, start)?;
                let sense = st.tokens.get(i).and_then(|t| sense_of(t)).ok_or_else(|| err("missing comparison".into()))?;
                let rhs = st.tokens.get(i + 1).and_then(|t| parse_num(t)).ok_or_else(|| err("missing right-hand side".into()))?;
                if i + 2 != st.tokens.len() {
                    return Err(err("trailing tokens after right-hand side".into()));
                }
                let name = name.unwrap_or_else(|| format!("r{}", model.rows.len() + 1));
                model.rows.push(LpRow { name, coeffs, sense, rhs: rhs - constant });
            }
            Section::Bounds => {
                let t = &st.tokens;
                let (name, lo, hi) = match t.as_slice() {
                    [n, eq, v] if eq == "=" => {
                        let v = parse_num(v).ok_or_else(|| err(format!("bad value `{v}`")))?;
                        (n.clone(), v, v)
                    }
                    [lo, a, n, b, hi] if a == "<=" && b == "<=" => {
                        let lo = parse_num(lo).ok_or_else(|| err(format!("bad bound `{lo}`")))?;
                        let hi = parse_num(hi).ok_or_else(|| err(format!("bad bound `{hi}`")))?;
                        (n.clone(), lo, hi)
                    }
                    _ => return Err(err(format!("unsupported bound `{}`", t.join(" ")))),
                };
                model.bounds.insert(name, (lo, hi));
            }
            Section::Binaries => model.binaries.extend(st.tokens.iter().cloned()),
            Section::Preamble => return Err(err("statement before `Minimize`".into())),
        }
        Ok(())
    };

    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if ended {
            return Err(LpError::Parse { line, message: "text after `End`".into() });
        }
        let next = section_of(body);
        if next.is_some() || body.eq_ignore_ascii_case("end") {
            if let Some(st) = pending.take() {
                flush(&mut model, section, st)?;
            }
            match next {
                Some(s) => section = s,
                None => ended = true,
            }
            continue;
        }
        let tokens: Vec<String> = body.split_whitespace().map(str::to_string).collect();
        // a new statement starts at a label, or at every line of the
        // bound and binary sections
        let starts = match section {
            Section::Objective | Section::Constraints => tokens[0].ends_with(':'),
            _ => true,
        };
        match pending.as_mut() {
            Some(st) if !starts => st.tokens.extend(tokens),
            _ => {
                if let Some(st) = pending.take() {
                    flush(&mut model, section, st)?;
                }
                pending = Some(Statement { line, tokens });
            }
        }
    }
    if !ended {
        return Err(LpError::Unterminated);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_model_text() {
        let mut m = GenericMilp::new("toy");
        let a = m.add_var("a", VarKind::Binary, (0.0, 1.0), 3.0, None);
        let b = m.add_var("b", VarKind::Continuous, (0.0, 2.5), -1.0, None);
        m.add_row("r", [(a, 1.0), (b, -2.0)], Sense::Ge, -1.0);
        m.objective_offset = 4.0;
        let text = write_lp(&m);
        assert_eq!(
            text,
            "\\ toy\nMinimize\n obj: + 3 a - 1 b + 4\nSubject To\n r: + 1 a - 2 b >= -1\nBounds\n 0 <= b <= 2.5\nBinaries\n a\nEnd\n"
        );
        assert_eq!(read_lp(&text).unwrap(), LpModel::from_milp(&m));
    }

    #[test]
    fn missing_end_is_reported() {
        assert_eq!(read_lp("Minimize\n obj: + 1 x\n"), Err(LpError::Unterminated));
    }
}
