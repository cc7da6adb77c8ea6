//! Max-min linear programs over the probability simplex.
//!
//! `max_λ min_r Σ_a P[r][a] λ_a` is the value of a zero-sum matrix game. After
//! shifting `P` to be strictly positive, the dual program
//! `max Σ_r y_r  s.t.  Σ_r P[r][a] y_r ≤ 1, y ≥ 0` has the origin as a
//! feasible basis, so a single-phase tableau simplex suffices. The optimal
//! λ is read off the reduced costs of the slack columns.

use crate::error::{Error, Result};

/// Solution of a max-min program.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution {
    /// Maximizing rule λ over the columns.
    pub weights: Vec<f64>,
    /// `min_r Σ_a P[r][a] λ_a`, re-evaluated at `weights`.
    pub value: f64,
    /// Minimizing mixture over the rows (dual certificate).
    pub row_mixture: Vec<f64>,
    /// `max_a Σ_r μ_r P[r][a]`; equals `value` at optimality.
    pub dual_value: f64,
}

const PIVOT_EPS: f64 = 1e-12;

/// Solves `max_{λ ∈ Δ(K)} min_r (P λ)_r` for a dense `rows × K` payoff matrix.
pub fn solve_maxmin(payoff: &[Vec<f64>]) -> Result<MaxMinSolution> {
    let rows = payoff.len();
    if rows == 0 {
        return Err(Error::Argument("max-min program needs at least one row".into()));
    }
    let k = payoff[0].len();
    if k == 0 || payoff.iter().any(|r| r.len() != k) {
        return Err(Error::Argument("payoff rows must share a positive length".into()));
    }
    if payoff.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Argument("payoff entries must be finite".into()));
    }
    let min_entry = payoff.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min_entry;

    // tableau rows: one per action; columns: rows y_r, then K slacks, then rhs
    let width = rows + k + 1;
    let mut tab = vec![vec![0.0; width]; k];
    for a in 0..k {
        for r in 0..rows {
            tab[a][r] = payoff[r][a] + shift;
        }
        tab[a][rows + a] = 1.0;
        tab[a][width - 1] = 1.0;
    }
    let mut objective = vec![0.0; width];
    for c in objective.iter_mut().take(rows) {
        *c = -1.0;
    }
    let mut basis: Vec<usize> = (rows..rows + k).collect();

    let max_pivots = 50 * (rows + k) + 100;
    for _ in 0..max_pivots {
        // Bland's rule: lowest-index improving column
        let Some(col) = (0..width - 1).find(|&c| objective[c] < -PIVOT_EPS) else {
            break;
        };
        let mut pivot_row = None;
        let mut best_ratio = f64::INFINITY;
        for (r, row) in tab.iter().enumerate() {
            if row[col] > PIVOT_EPS {
                let ratio = row[width - 1] / row[col];
                let better = ratio < best_ratio - 1e-15
                    || (ratio <= best_ratio + 1e-15 && pivot_row.is_some_and(|p: usize| basis[r] < basis[p]));
                if pivot_row.is_none() || better {
                    best_ratio = ratio;
                    pivot_row = Some(r);
                }
            }
        }
        // the feasible region is bounded (positive payoff), so a pivot row exists
        let pr = pivot_row.ok_or_else(|| Error::Argument("unbounded max-min program".into()))?;
        let pv = tab[pr][col];
        for x in tab[pr].iter_mut() {
            *x /= pv;
        }
        let pivot = tab[pr].clone();
        for (r, row) in tab.iter_mut().enumerate() {
            if r != pr {
                let f = row[col];
                if f != 0.0 {
                    for (x, p) in row.iter_mut().zip(&pivot) {
                        *x -= f * p;
                    }
                }
            }
        }
        let f = objective[col];
        for (x, p) in objective.iter_mut().zip(&pivot) {
            *x -= f * p;
        }
        basis[pr] = col;
    }

    let x: Vec<f64> = (0..k).map(|a| objective[rows + a].max(0.0)).collect();
    let total: f64 = x.iter().sum();
    let weights: Vec<f64> = if total > 0.0 {
        x.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / k as f64; k]
    };
    let mut y = vec![0.0; rows];
    for (r, &b) in basis.iter().enumerate() {
        if b < rows {
            y[b] = tab[r][width - 1].max(0.0);
        }
    }
    let ysum: f64 = y.iter().sum();
    let row_mixture: Vec<f64> = if ysum > 0.0 {
        y.iter().map(|v| v / ysum).collect()
    } else {
        vec![1.0 / rows as f64; rows]
    };
    let value = evaluate_min(payoff, &weights);
    let dual_value = (0..k)
        .map(|a| (0..rows).map(|r| row_mixture[r] * payoff[r][a]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MaxMinSolution {
        weights,
        value,
        row_mixture,
        dual_value,
    })
}

/// `min_r Σ_a P[r][a] λ_a`.
pub fn evaluate_min(payoff: &[Vec<f64>], weights: &[f64]) -> f64 {
    payoff
        .iter()
        .map(|row| row.iter().zip(weights).map(|(p, w)| p * w).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}
