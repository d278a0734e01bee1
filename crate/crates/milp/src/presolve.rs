//! Activity-based bound tightening run before the tree search.

use crate::model::{MilpModel, Sense, VarKind};

/// Relative slack kept on tightened continuous bounds.
const SLACK: f64 = 1e-9;
/// Smallest relative change worth recording for a continuous bound.
const MIN_CHANGE: f64 = 1e-7;

/// Outcome of [`tighten_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Presolve {
    /// Bounds tightened (possibly none); `changes` counts updated bounds.
    Tightened { changes: usize },
    /// Some column was left with an empty domain.
    Infeasible,
}

/// Tightens column bounds from row activities for at most `passes` sweeps.
/// Binary bounds are rounded to integers. Every point feasible for the rows and
/// the original bounds stays feasible.
pub fn tighten_bounds(model: &mut MilpModel, passes: usize) -> Presolve {
    let mut changes = 0;
    for _ in 0..passes {
        let mut changed = false;
        for r in 0..model.num_rows() {
            let row = model.rows()[r].clone();
            let senses: &[f64] = match row.sense {
                Sense::Le => &[1.0],
                Sense::Ge => &[-1.0],
                Sense::Eq => &[1.0, -1.0],
            };
            for &sign in senses {
                // sign * sum(a x) <= sign * rhs
                let terms: Vec<(usize, f64)> =
                    row.coeffs.iter().map(|&(c, a)| (c, sign * a)).collect();
                let rhs = sign * row.rhs;
                let cols = model.columns();
                let mut finite_min = 0.0;
                let mut infinite = 0usize;
                let mut last_infinite = usize::MAX;
                let contrib: Vec<f64> = terms
                    .iter()
                    .map(|&(c, a)| {
                        let col = &cols[c];
                        if a > 0.0 {
                            a * col.lower
                        } else {
                            a * col.upper
                        }
                    })
                    .collect();
                for (i, v) in contrib.iter().enumerate() {
                    if v.is_finite() {
                        finite_min += v;
                    } else {
                        infinite += 1;
                        last_infinite = i;
                    }
                }
                if infinite > 1 {
                    continue;
                }
                for (i, &(c, a)) in terms.iter().enumerate() {
                    let rest = if infinite == 1 {
                        if i != last_infinite {
                            continue;
                        }
                        finite_min
                    } else {
                        finite_min - contrib[i]
                    };
                    let limit = (rhs - rest) / a;
                    let col = &model.columns()[c];
                    let (mut lo, mut hi) = (col.lower, col.upper);
                    let binary = col.kind == VarKind::Binary;
                    if a > 0.0 {
                        let cand = if binary {
                            (limit + 1e-9).floor()
                        } else {
                            limit + SLACK * (1.0 + limit.abs())
                        };
                        if cand < hi
                            && (binary || hi - cand > MIN_CHANGE * (1.0 + hi.abs().min(cand.abs())))
                        {
                            hi = cand;
                        }
                    } else {
                        let cand = if binary {
                            (limit - 1e-9).ceil()
                        } else {
                            limit - SLACK * (1.0 + limit.abs())
                        };
                        if cand > lo
                            && (binary || cand - lo > MIN_CHANGE * (1.0 + lo.abs().min(cand.abs())))
                        {
                            lo = cand;
                        }
                    }
                    if (lo, hi) == (col.lower, col.upper) {
                        continue;
                    }
                    if lo > hi + 1e-6 * (1.0 + lo.abs()) {
                        return Presolve::Infeasible;
                    }
                    let (lo, hi) = if lo > hi { (hi, hi) } else { (lo, hi) };
                    model
                        .set_bounds(c, lo, hi)
                        .expect("tightened bounds are ordered");
                    changes += 1;
                    changed = true;
                    // Later columns of this row use the stale activity, which is
                    // still valid (only looser).
                }
            }
        }
        if !changed {
            break;
        }
    }
    Presolve::Tightened { changes }
}
