//! Plain-text solution files: a `#`-prefixed header followed by one
//! `name value` line per column.
//!
//! ```text
//! # status optimal
//! # objective 97
//! # bound 97
//! # gap 0
//! x_s01_k01_i001_j001 1
//! ```

use std::fmt::Write as _;

use crate::bnb::{MilpSolution, MilpStatus};
use crate::error::MilpError;
use crate::model::MilpModel;

/// Parsed contents of a solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub status: MilpStatus,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub values: Vec<(String, f64)>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x}"))
}

/// Renders the solution of `model`. Columns are written in model order; when the
/// solve produced no solution only the header is written.
pub fn write_solution(model: &MilpModel, sol: &MilpSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# status {}", sol.status.as_str());
    let _ = writeln!(out, "# objective {}", opt(sol.objective));
    let _ = writeln!(out, "# bound {}", opt(sol.best_bound));
    let _ = writeln!(out, "# gap {}", opt(sol.gap));
    if let Some(values) = &sol.values {
        for (col, v) in model.columns().iter().zip(values) {
            let _ = writeln!(out, "{} {}", col.name, v);
        }
    }
    out
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, MilpError> {
    let mut status = None;
    let mut objective = None;
    let mut bound = None;
    let mut gap = None;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |m: String| MilpError::Parse {
            line: line_no,
            message: m,
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let val = parts
                .next()
                .ok_or_else(|| err("header without value".into()))?;
            let num = || -> Result<Option<f64>, MilpError> {
                if val == "none" {
                    Ok(None)
                } else {
                    val.parse()
                        .map(Some)
                        .map_err(|_| err(format!("bad number `{val}`")))
                }
            };
            match key {
                "status" => {
                    status = Some(
                        MilpStatus::parse(val)
                            .ok_or_else(|| err(format!("unknown status `{val}`")))?,
                    )
                }
                "objective" => objective = num()?,
                "bound" => bound = num()?,
                "gap" => gap = num()?,
                _ => return Err(err(format!("unknown header `{key}`"))),
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected `name value`".into()));
        };
        let v: f64 = v.parse().map_err(|_| err(format!("bad value `{v}`")))?;
        values.push((name.to_string(), v));
    }
    Ok(SolutionFile {
        status: status.ok_or(MilpError::Parse {
            line: 1,
            message: "missing status header".into(),
        })?,
        objective,
        bound,
        gap,
        values,
    })
}
