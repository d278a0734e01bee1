//! Exhaustive enumeration of binary assignments, used as a test oracle.

use crate::bnb::complete_with_binaries;
use crate::error::MilpError;
use crate::model::MilpModel;

/// Largest number of free binaries [`brute_force`] accepts.
pub const MAX_BRUTE_FORCE_BINARIES: usize = 25;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    /// Best objective, `None` when no assignment is feasible.
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Number of binary assignments examined.
    pub evaluated: u64,
    pub feasible: u64,
}

/// Enumerates every assignment of the free binaries and solves an LP over the
/// continuous columns for each one.
pub fn brute_force(model: &MilpModel) -> Result<BruteForceResult, MilpError> {
    brute_force_with(model, |assignment| {
        complete_with_binaries(model, assignment).ok().flatten()
    })
}

/// Enumerates every assignment of the free binaries (columns whose bounds are not
/// already fixed). `complete` receives a full-length vector with the binaries set
/// and must return the completed column vector, or `None` if it cannot.
/// Completed vectors are checked against every row and bound; among feasible
/// assignments the first one with the largest objective in enumeration order wins.
pub fn brute_force_with(
    model: &MilpModel,
    complete: impl Fn(&[f64]) -> Option<Vec<f64>>,
) -> Result<BruteForceResult, MilpError> {
    let cols = model.columns();
    let mut base: Vec<f64> = cols
        .iter()
        .map(|c| if c.lower.is_finite() { c.lower } else { 0.0 })
        .collect();
    let free: Vec<usize> = model
        .binary_columns()
        .into_iter()
        .filter(|&c| cols[c].lower < cols[c].upper)
        .collect();
    if free.len() > MAX_BRUTE_FORCE_BINARIES {
        return Err(MilpError::TooManyBinaries(
            free.len(),
            MAX_BRUTE_FORCE_BINARIES,
        ));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible = 0u64;
    let total = 1u64 << free.len();
    for mask in 0..total {
        for (bit, &c) in free.iter().enumerate() {
            base[c] = ((mask >> bit) & 1) as f64;
        }
        let Some(vals) = complete(&base) else {
            continue;
        };
        if !model.is_feasible(&vals) {
            continue;
        }
        feasible += 1;
        let obj = model.objective_value(&vals);
        if best.as_ref().is_none_or(|(b, _)| obj > *b + 1e-9) {
            best = Some((obj, vals));
        }
    }
    Ok(BruteForceResult {
        objective: best.as_ref().map(|b| b.0),
        values: best.map(|b| b.1),
        evaluated: total,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sense, VarKind};

    #[test]
    fn enumerates_knapsack() {
        let mut m = MilpModel::new("k");
        let w = [3.0, 4.0, 2.0];
        let v = [4.0, 5.0, 3.0];
        let cols: Vec<usize> = (0..3)
            .map(|i| {
                m.add_column(format!("x{i}"), VarKind::Binary, 0.0, 1.0, v[i])
                    .unwrap()
            })
            .collect();
        m.add_row("cap", cols.iter().map(|&c| (c, w[c])), Sense::Le, 6.0)
            .unwrap();
        let r = brute_force(&m).unwrap();
        assert_eq!(r.objective, Some(8.0));
        assert_eq!(r.evaluated, 8);
        assert_eq!(r.feasible, 6);
    }

    #[test]
    fn refuses_large_models() {
        let mut m = MilpModel::new("big");
        for i in 0..26 {
            m.add_column(format!("x{i}"), VarKind::Binary, 0.0, 1.0, 1.0)
                .unwrap();
        }
        assert!(matches!(
            brute_force(&m),
            Err(MilpError::TooManyBinaries(26, 25))
        ));
    }

    #[test]
    fn fixed_binaries_are_not_enumerated() {
        let mut m = MilpModel::new("fixed");
        for i in 0..30 {
            let ub = if i < 3 { 1.0 } else { 0.0 };
            m.add_column(format!("x{i}"), VarKind::Binary, 0.0, ub, 1.0)
                .unwrap();
        }
        let r = brute_force(&m).unwrap();
        assert_eq!(r.evaluated, 8);
        assert_eq!(r.objective, Some(3.0));
    }
}
