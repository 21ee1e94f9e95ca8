//! Binary soft-margin SVM solved in the dual.
//!
//! The solver is two-coordinate ascent on the maximal violating pair: pick
//! the most KKT-violating index from the "can increase" set and the most
//! violating from the "can decrease" set, solve that two-variable
//! subproblem exactly, repeat. The equality constraint sum(alpha_i y_i) = 0
//! is preserved by construction, so feasibility never has to be repaired.
//!
//! The stopping gap is far tighter than the nominal KKT tolerance: the
//! kernel-weight optimizer wraps this solver in an alternating loop whose
//! objective-descent guarantee only holds when each inner solve is close to
//! exact, and these problems are small enough (dozens of samples) that the
//! extra iterations are free.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Hard cap on pair updates before the solver reports non-convergence.
const MAX_ITERS: usize = 100_000;

/// Result of a dual solve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmSolution {
    /// Dual coefficients, one per training sample, each in [0, C].
    pub alpha: Vec<f64>,
    /// Decision-function offset.
    pub bias: f64,
    /// Bias-free scores at the training samples:
    /// `scores[i] = sum_j alpha_j y_j K[j][i]`.
    pub scores: Vec<f64>,
    /// Pair updates performed.
    pub iterations: usize,
    /// Final KKT violation gap.
    pub gap: f64,
}

impl SvmSolution {
    /// Dual objective `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        let linear: f64 = self.alpha.iter().sum();
        let quad: f64 = self
            .alpha
            .iter()
            .zip(y)
            .zip(&self.scores)
            .map(|((a, yi), s)| a * yi * s)
            .sum();
        linear - 0.5 * quad
    }
}

fn stopping_gap(c: f64) -> f64 {
    // The alternating kernel-weight loop needs its inner solves close to
    // exact: a KKT gap of g can leave the primal about g * sum(alpha) above
    // the optimum, and that slack shows up as noise in the outer objective.
    1e-14 * c.max(1.0)
}

/// Maximize the soft-margin dual on a precomputed Gram matrix.
///
/// `y` must be +1/-1 with both classes present; `gram` must be the
/// symmetric positive semidefinite kernel matrix of the training rows.
pub fn solve_binary_svm(gram: &[Vec<f64>], y: &[f64], c: f64) -> Result<SvmSolution> {
    solve_binary_svm_warm(gram, y, c, None)
}

/// [`solve_binary_svm`] seeded with a feasible starting point, used by the
/// alternating kernel-weight optimizer to carry duals across outer steps.
pub(crate) fn solve_binary_svm_warm(
    gram: &[Vec<f64>],
    y: &[f64],
    c: f64,
    warm_start: Option<&[f64]>,
) -> Result<SvmSolution> {
    let n = y.len();
    if n < 2 {
        return Err(Error::Shape(format!("need at least 2 samples, got {n}")));
    }
    if gram.len() != n || gram.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!(
            "gram is not {n} x {n} to match the labels"
        )));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Label("labels must be +1 or -1".into()));
    }
    if !y.iter().any(|&v| v == 1.0) || !y.iter().any(|&v| v == -1.0) {
        return Err(Error::Label("training set contains a single class".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("C must be positive, got {c}")));
    }

    let mut alpha = vec![0.0; n];
    let mut scores = vec![0.0; n];
    if let Some(seed) = warm_start {
        debug_assert_eq!(seed.len(), n);
        alpha.copy_from_slice(seed);
        for i in 0..n {
            scores[i] = (0..n).map(|j| alpha[j] * y[j] * gram[j][i]).sum();
        }
    }
    let tol = stopping_gap(c);

    let mut iterations = 0;
    let gap = loop {
        // score y_i - f_i: equal across support vectors at the optimum.
        // up: indices whose alpha may grow along +y_i; low: may shrink.
        let mut up_best: Option<(usize, f64)> = None;
        let mut low_best: Option<(usize, f64)> = None;
        for k in 0..n {
            let v = y[k] - scores[k];
            let in_up = (y[k] > 0.0 && alpha[k] < c) || (y[k] < 0.0 && alpha[k] > 0.0);
            let in_low = (y[k] > 0.0 && alpha[k] > 0.0) || (y[k] < 0.0 && alpha[k] < c);
            if in_up && up_best.map_or(true, |(_, best)| v > best) {
                up_best = Some((k, v));
            }
            if in_low && low_best.map_or(true, |(_, best)| v < best) {
                low_best = Some((k, v));
            }
        }
        let (Some((i, m_up)), Some((j, m_low))) = (up_best, low_best) else {
            // Both classes are present, so both sets are only empty when
            // every alpha is pinned in a way that admits no ascent.
            break 0.0;
        };
        let gap = m_up - m_low;
        if gap <= tol {
            break gap;
        }
        if iterations >= MAX_ITERS {
            return Err(Error::Convergence {
                iterations,
                residual: gap,
            });
        }

        // Exact solution of the two-variable subproblem in alpha_j. The
        // interval is non-empty in exact arithmetic; rounding in the bound
        // computation can cross it by an ulp, so pin hi to lo.
        let (lo, hi) = if y[i] != y[j] {
            ((alpha[j] - alpha[i]).max(0.0), (c + alpha[j] - alpha[i]).min(c))
        } else {
            ((alpha[i] + alpha[j] - c).max(0.0), (alpha[i] + alpha[j]).min(c))
        };
        let hi = hi.max(lo);
        let eta = gram[i][i] + gram[j][j] - 2.0 * gram[i][j];
        let err_diff = (scores[i] - y[i]) - (scores[j] - y[j]);
        let unclipped_step = y[j] * err_diff;
        let new_aj = if eta > 1e-12 * (gram[i][i] + gram[j][j]).max(1.0) {
            (alpha[j] + unclipped_step / eta).clamp(lo, hi)
        } else {
            // Flat curvature: the subproblem is linear, optimum at a bound.
            if unclipped_step > 0.0 {
                hi
            } else {
                lo
            }
        };
        if new_aj == alpha[j] {
            #[cfg(debug_assertions)]
            eprintln!(
                "STUCK i={i} j={j} yi={} yj={} ai={:e} aj={:e} lo={lo:e} hi={hi:e} eta={eta:e} step={unclipped_step:e} gap={gap:e}",
                y[i], y[j], alpha[i], alpha[j]
            );
            // No representable progress on the worst pair; accept the
            // current point and report the remaining gap.
            break gap;
        }
        let delta_j = new_aj - alpha[j];
        // The complement moves by -y_i y_j delta_j; keep it inside the box
        // so rounding never strands an alpha an ulp past a bound, and fold
        // any clip back into the delta so the cached scores stay exact.
        let new_ai = (alpha[i] - y[i] * y[j] * delta_j).clamp(0.0, c);
        let delta_i = new_ai - alpha[i];
        alpha[i] = new_ai;
        alpha[j] = new_aj;
        for k in 0..n {
            scores[k] += delta_i * y[i] * gram[i][k] + delta_j * y[j] * gram[j][k];
        }
        iterations += 1;
    };

    // Offset from the KKT conditions: free support vectors sit exactly on
    // their margin, so y_i - f_i equals the bias at each of them.
    let mut free_sum = 0.0;
    let mut free_count = 0;
    for k in 0..n {
        if alpha[k] > 0.0 && alpha[k] < c {
            free_sum += y[k] - scores[k];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for k in 0..n {
            let v = y[k] - scores[k];
            if (y[k] > 0.0 && alpha[k] < c) || (y[k] < 0.0 && alpha[k] > 0.0) {
                m_up = m_up.max(v);
            }
            if (y[k] > 0.0 && alpha[k] > 0.0) || (y[k] < 0.0 && alpha[k] < c) {
                m_low = m_low.min(v);
            }
        }
        if m_up.is_finite() && m_low.is_finite() {
            (m_up + m_low) / 2.0
        } else {
            0.0
        }
    };
    Ok(SvmSolution {
        alpha,
        bias,
        scores,
        iterations,
        gap,
    })
}
