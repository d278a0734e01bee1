//! Sparse maximization model: columns with bounds and kinds, rows with a sense and a
//! right-hand side.

use std::collections::HashMap;

use crate::error::MilpError;

/// Feasibility tolerance used when checking rows and bounds.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Integrality tolerance for binary columns.
pub const INTEGRALITY_TOL: f64 = 1e-5;

/// Column kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// Row sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// A column of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub objective: f64,
    /// Branching priority: fractional binaries of a higher priority are branched first.
    pub priority: i32,
}

/// A linear row `sum(coeff * x) sense rhs`. Coefficients are sorted by column and
/// each column appears at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    /// Left-hand side activity for the given column values.
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// Amount by which the row is violated (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A maximization MILP in sparse form.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    columns: Vec<Column>,
    rows: Vec<Row>,
    by_name: HashMap<String, usize>,
}

/// A violated row or bound found by [`MilpModel::check`].
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    Bound { column: usize, value: f64 },
    Integrality { column: usize, value: f64 },
    Row { row: usize, violation: f64 },
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Adds a column and returns its index.
    ///
    /// Fails on a duplicate name, on `lower > upper`, on non-finite objective
    /// coefficients, or on binary bounds outside `[0, 1]`.
    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> Result<usize, MilpError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper || !objective.is_finite() {
            return Err(MilpError::InvalidColumn(name));
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(MilpError::InvalidColumn(name));
        }
        let idx = self.columns.len();
        self.by_name.insert(name.clone(), idx);
        self.columns.push(Column {
            name,
            lower,
            upper,
            kind,
            objective,
            priority: 0,
        });
        Ok(idx)
    }

    /// Adds a row. Duplicate columns are merged and zero coefficients dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, MilpError> {
        let name = name.into();
        let mut terms: Vec<(usize, f64)> = coeffs.into_iter().collect();
        if !rhs.is_finite()
            || terms
                .iter()
                .any(|&(c, a)| c >= self.columns.len() || !a.is_finite())
        {
            return Err(MilpError::InvalidRow(name));
        }
        terms.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (c, a) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += a,
                _ => merged.push((c, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row {
            name,
            coeffs: merged,
            sense,
            rhs,
        });
        Ok(self.rows.len() - 1)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| c.kind == VarKind::Binary)
            .count()
    }

    pub fn binary_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&c| self.columns[c].kind == VarKind::Binary)
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Tightens the bounds of an existing column.
    pub fn set_bounds(&mut self, column: usize, lower: f64, upper: f64) -> Result<(), MilpError> {
        let col = &mut self.columns[column];
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvalidColumn(col.name.clone()));
        }
        col.lower = lower;
        col.upper = upper;
        Ok(())
    }

    pub fn set_priority(&mut self, column: usize, priority: i32) {
        self.columns[column].priority = priority;
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.columns
            .iter()
            .zip(values)
            .map(|(c, v)| c.objective * v)
            .sum()
    }

    /// Lists every bound, integrality and row violation beyond the tolerances.
    pub fn check(&self, values: &[f64], feas_tol: f64, int_tol: f64) -> Vec<Infeasibility> {
        assert_eq!(values.len(), self.columns.len(), "value vector length");
        let mut out = Vec::new();
        for (i, (col, &v)) in self.columns.iter().zip(values).enumerate() {
            if !v.is_finite() || v < col.lower - feas_tol || v > col.upper + feas_tol {
                out.push(Infeasibility::Bound {
                    column: i,
                    value: v,
                });
            }
            if col.kind == VarKind::Binary && (v - v.round()).abs() > int_tol {
                out.push(Infeasibility::Integrality {
                    column: i,
                    value: v,
                });
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            let viol = row.violation(values);
            let scale = 1.0 + row.rhs.abs();
            if viol > feas_tol * scale {
                out.push(Infeasibility::Row {
                    row: r,
                    violation: viol,
                });
            }
        }
        out
    }

    pub fn is_feasible(&self, values: &[f64]) -> bool {
        self.check(values, FEASIBILITY_TOL, INTEGRALITY_TOL)
            .is_empty()
    }

    /// True when every objective term sits on a binary column with an integer
    /// coefficient, so any integral solution has an integer objective.
    pub fn has_integral_objective(&self) -> bool {
        self.columns.iter().all(|c| {
            c.objective == 0.0 || (c.kind == VarKind::Binary && c.objective.fract() == 0.0)
        })
    }
}
