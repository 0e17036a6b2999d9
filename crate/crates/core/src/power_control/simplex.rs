//! Small dense tableau simplex for the max-min feasibility program.
//!
//! Solves `maximize c^T x  subject to  A x <= b, x >= 0` with `b >= 0`, so
//! the all-slack basis is feasible and no separate phase-1 start is needed.
//! Problem sizes here are tiny (K + 1 variables, K + 1 rows for K users),
//! so a dense tableau with Dantzig pricing and a Bland anti-cycling
//! fallback is exact enough and self-contained.

use crate::error::{Error, Result};

const PIVOT_TOLERANCE: f64 = 1e-11;
const COST_TOLERANCE: f64 = 1e-11;
/// Pivots before switching from Dantzig to Bland's rule.
const BLAND_THRESHOLD: usize = 256;
const MAX_PIVOTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<SimplexSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument(
            "inconsistent LP dimensions".into(),
        ));
    }
    if b.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(
            "this simplex expects non-negative right-hand sides".into(),
        ));
    }

    // Tableau: m constraint rows + objective row; columns are the n
    // structural variables, m slacks, and the right-hand side.
    let width = n + m + 1;
    let mut t = vec![vec![0.0f64; width]; m + 1];
    for (i, row) in a.iter().enumerate() {
        t[i][..n].copy_from_slice(row);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for (j, &cj) in c.iter().enumerate() {
        t[m][j] = -cj;
    }

    let mut basis: Vec<usize> = (n..n + m).collect();

    for pivot_count in 0..MAX_PIVOTS {
        // Entering column.
        let entering = if pivot_count < BLAND_THRESHOLD {
            // Dantzig: most negative reduced cost.
            let mut best = None;
            let mut best_val = -COST_TOLERANCE;
            for (j, &cost) in t[m][..n + m].iter().enumerate() {
                if cost < best_val {
                    best_val = cost;
                    best = Some(j);
                }
            }
            best
        } else {
            // Bland: first negative reduced cost.
            (0..n + m).find(|&j| t[m][j] < -COST_TOLERANCE)
        };
        let Some(col) = entering else {
            // Optimal.
            let mut x = vec![0.0; n];
            for (i, &bi) in basis.iter().enumerate() {
                if bi < n {
                    x[bi] = t[i][width - 1];
                }
            }
            return Ok(SimplexSolution {
                objective: t[m][width - 1],
                x,
            });
        };

        // Ratio test; ties broken by smallest basis index to curb cycling.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > PIVOT_TOLERANCE {
                let ratio = t[i][width - 1] / t[i][col];
                let better = ratio < best_ratio - 1e-15
                    || (ratio < best_ratio + 1e-15
                        && leave.is_some_and(|l| basis[i] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(Error::InvalidArgument(
                "linear program is unbounded".into(),
            ));
        };

        // Pivot on (row, col).
        let pivot = t[row][col];
        for v in t[row].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[row].clone();
        for (i, other) in t.iter_mut().enumerate() {
            if i != row {
                let factor = other[col];
                if factor != 0.0 {
                    for (v, p) in other.iter_mut().zip(&pivot_row) {
                        *v -= factor * p;
                    }
                }
            }
        }
        basis[row] = col;
    }

    Err(Error::NonConvergence {
        iterations: MAX_PIVOTS,
        residual: f64::NAN,
        last_iterate: Vec::new(),
    })
}
