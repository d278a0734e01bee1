//! Reading and writing models in CPLEX LP text format.
//!
//! Only the subset this crate emits is supported:
//!
//! ```text
//! \ comment lines start with a backslash
//! Maximize
//!  obj: 2 q_a + y_b
//! Subject To
//!  row_name: 1 x_a - 1 x_b <= 0
//! Bounds
//!  0 <= d_a <= 128000
//!  b_a = 1647
//!  -inf <= z <= +inf
//! Binary
//!  y_b
//! End
//! ```
//!
//! Every column gets an explicit bounds line, so the file never depends on LP
//! default bounds. Numbers use Rust's shortest round-trip formatting, which
//! makes write, parse, write a fixed point. Long expressions wrap onto
//! continuation lines that start with whitespace.

use std::fmt::Write as _;

use crate::error::MilpError;
use crate::model::{MilpModel, Sense, VarKind};

const TERMS_PER_LINE: usize = 8;

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn write_expr(out: &mut String, terms: &[(usize, f64)], model: &MilpModel) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(c, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 || (a == 0.0 && a.is_sign_negative()) {
            '-'
        } else {
            '+'
        };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", num(a), model.columns()[c].name);
        } else {
            let _ = write!(out, " {sign} {} {}", num(a.abs()), model.columns()[c].name);
        }
    }
}

/// Renders `model` as LP text. Output is byte-identical for identical models.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", model.name);
    out.push_str("Maximize\n obj:");
    let obj: Vec<(usize, f64)> = model
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.objective != 0.0)
        .map(|(i, c)| (i, c.objective))
        .collect();
    write_expr(&mut out, &obj, model);
    out.push_str("\nSubject To\n");
    for row in model.rows() {
        let _ = write!(out, " {}:", row.name);
        write_expr(&mut out, &row.coeffs, model);
        let _ = writeln!(out, " {} {}", row.sense.symbol(), num(row.rhs));
    }
    out.push_str("Bounds\n");
    for col in model.columns() {
        if col.lower == col.upper {
            let _ = writeln!(out, " {} = {}", col.name, num(col.lower));
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                num(col.lower),
                col.name,
                num(col.upper)
            );
        }
    }
    let binaries: Vec<&str> = model
        .columns()
        .iter()
        .filter(|c| c.kind == VarKind::Binary)
        .map(|c| c.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binary,
    End,
}

fn parse_num(tok: &str, line: usize) -> Result<f64, MilpError> {
    match tok {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| MilpError::Parse {
            line,
            message: format!("expected a number, found `{tok}`"),
        }),
    }
}

fn is_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// A statement collected from one or more physical lines, with the line it started on.
struct Statement {
    line: usize,
    tokens: Vec<String>,
}

/// Parses LP text produced by [`write_lp`]. Columns are created in order of first
/// appearance in the bounds, objective, rows and binary sections.
pub fn parse_lp(text: &str) -> Result<MilpModel, MilpError> {
    let mut name = String::from("model");
    let mut section = Section::None;
    let mut objective: Option<Statement> = None;
    let mut rows: Vec<Statement> = Vec::new();
    let mut bounds: Vec<Statement> = Vec::new();
    let mut binaries: Vec<(usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(rest) = raw.strip_prefix('\\') {
            if let Some(n) = rest.trim().strip_prefix("Problem:") {
                name = n.trim().to_string();
            }
            continue;
        }
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let header = trimmed.to_ascii_lowercase();
        let next = match header.as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective),
            "subject to" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binary" | "binaries" | "bin" => Some(Section::Binary),
            "end" => Some(Section::End),
            "minimize" | "minimise" | "min" => {
                return Err(MilpError::Parse {
                    line: line_no,
                    message: "only maximization models are supported".into(),
                })
            }
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let continuation = raw.starts_with("   ");
        let tokens: Vec<String> = trimmed.split_whitespace().map(str::to_string).collect();
        match section {
            Section::Objective => match &mut objective {
                Some(st) => st.tokens.extend(tokens),
                None => {
                    objective = Some(Statement {
                        line: line_no,
                        tokens,
                    })
                }
            },
            Section::Constraints => {
                if continuation && !rows.is_empty() {
                    rows.last_mut().unwrap().tokens.extend(tokens);
                } else {
                    rows.push(Statement {
                        line: line_no,
                        tokens,
                    });
                }
            }
            Section::Bounds => bounds.push(Statement {
                line: line_no,
                tokens,
            }),
            Section::Binary => binaries.extend(tokens.into_iter().map(|t| (line_no, t))),
            Section::None | Section::End => {
                return Err(MilpError::Parse {
                    line: line_no,
                    message: format!("unexpected text `{trimmed}` outside a section"),
                })
            }
        }
    }
    if section != Section::End {
        return Err(MilpError::Parse {
            line: text.lines().count(),
            message: "missing `End`".into(),
        });
    }

    // Pass 1: discover column names in order of appearance.
    let mut order: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut note = |n: &str| {
        if seen.insert(n.to_string()) {
            order.push(n.to_string());
        }
    };
    let label_and_terms = |st: &Statement| -> Result<(Option<String>, Vec<String>), MilpError> {
        let mut toks = st.tokens.clone();
        let mut label = None;
        if let Some(first) = toks.first() {
            if let Some(l) = first.strip_suffix(':') {
                label = Some(l.to_string());
                toks.remove(0);
            }
        }
        Ok((label, toks))
    };
    let parse_terms = |toks: &[String], line: usize| -> Result<Vec<(String, f64)>, MilpError> {
        let mut out = Vec::new();
        let mut i = 0;
        let mut sign = 1.0;
        while i < toks.len() {
            let t = toks[i].as_str();
            match t {
                "+" => {
                    sign = 1.0;
                    i += 1;
                }
                "-" => {
                    sign = -1.0;
                    i += 1;
                }
                "0" if toks.len() == 1 => i += 1,
                _ => {
                    if let Ok(coef) = t.parse::<f64>() {
                        let var = toks.get(i + 1).ok_or(MilpError::Parse {
                            line,
                            message: "coefficient without variable".into(),
                        })?;
                        out.push((var.clone(), sign * coef));
                        i += 2;
                    } else {
                        out.push((t.to_string(), sign));
                        i += 1;
                    }
                    sign = 1.0;
                }
            }
        }
        Ok(out)
    };

    let mut parsed_bounds = Vec::new();
    for st in &bounds {
        let t: Vec<&str> = st.tokens.iter().map(String::as_str).collect();
        let (var, lo, hi) = match t.as_slice() {
            [lo, "<=", v, "<=", hi] => (*v, parse_num(lo, st.line)?, parse_num(hi, st.line)?),
            [v, "=", x] => {
                let x = parse_num(x, st.line)?;
                (*v, x, x)
            }
            [v, "free"] => (*v, f64::NEG_INFINITY, f64::INFINITY),
            [v, ">=", lo] => (*v, parse_num(lo, st.line)?, f64::INFINITY),
            [v, "<=", hi] => (*v, 0.0, parse_num(hi, st.line)?),
            _ => {
                return Err(MilpError::Parse {
                    line: st.line,
                    message: format!("unsupported bound `{}`", st.tokens.join(" ")),
                })
            }
        };
        note(var);
        parsed_bounds.push((var.to_string(), lo, hi));
    }
    let mut obj_terms = Vec::new();
    if let Some(st) = &objective {
        let (_, toks) = label_and_terms(st)?;
        obj_terms = parse_terms(&toks, st.line)?;
        for (n, _) in &obj_terms {
            note(n);
        }
    }
    let mut parsed_rows = Vec::new();
    for st in &rows {
        let (label, toks) = label_and_terms(st)?;
        let pos = toks
            .iter()
            .position(|t| is_sense(t).is_some())
            .ok_or(MilpError::Parse {
                line: st.line,
                message: "row without a sense operator".into(),
            })?;
        let sense = is_sense(&toks[pos]).unwrap();
        let rhs_tok = toks.get(pos + 1).ok_or(MilpError::Parse {
            line: st.line,
            message: "row without a right-hand side".into(),
        })?;
        let rhs = parse_num(rhs_tok, st.line)?;
        let terms = parse_terms(&toks[..pos], st.line)?;
        for (n, _) in &terms {
            note(n);
        }
        let label = label.unwrap_or_else(|| format!("R{}", parsed_rows.len() + 1));
        parsed_rows.push((label, terms, sense, rhs));
    }
    for (_, b) in &binaries {
        note(b);
    }

    let mut model = MilpModel::new(name);
    let binary_set: std::collections::HashSet<&str> =
        binaries.iter().map(|(_, b)| b.as_str()).collect();
    let mut bounds_of: std::collections::HashMap<&str, (f64, f64)> =
        std::collections::HashMap::new();
    for (v, lo, hi) in &parsed_bounds {
        bounds_of.insert(v.as_str(), (*lo, *hi));
    }
    let mut obj_of: std::collections::HashMap<&str, f64> = std::collections::HashMap::new();
    for (v, a) in &obj_terms {
        *obj_of.entry(v.as_str()).or_insert(0.0) += a;
    }
    for n in &order {
        let kind = if binary_set.contains(n.as_str()) {
            VarKind::Binary
        } else {
            VarKind::Continuous
        };
        let default = if kind == VarKind::Binary {
            (0.0, 1.0)
        } else {
            (0.0, f64::INFINITY)
        };
        let (lo, hi) = bounds_of.get(n.as_str()).copied().unwrap_or(default);
        let obj = obj_of.get(n.as_str()).copied().unwrap_or(0.0);
        model
            .add_column(n.clone(), kind, lo, hi, obj)
            .map_err(|e| MilpError::Parse {
                line: 0,
                message: e.to_string(),
            })?;
    }
    for (label, terms, sense, rhs) in parsed_rows {
        let coeffs: Vec<(usize, f64)> = terms
            .iter()
            .map(|(n, a)| (model.column_index(n).unwrap(), *a))
            .collect();
        model
            .add_row(label, coeffs, sense, rhs)
            .map_err(|e| MilpError::Parse {
                line: 0,
                message: e.to_string(),
            })?;
    }
    Ok(model)
}
