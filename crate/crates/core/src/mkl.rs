//! l_p-norm multiple kernel learning and one-vs-rest multiclass on top.
//!
//! Training alternates two exact steps. With kernel weights d fixed, the
//! combined Gram sum_m d_m K_m feeds the binary SVM solver. With the
//! resulting duals fixed, the weights have a closed-form update:
//!
//! ```text
//! ||w_m||^2 = d_m^2 alpha' Y K_m Y alpha
//! d_m <- ||w_m||^(2/(p+1)) / (sum_m ||w_m||^(2p/(p+1)))^(1/p)
//! ```
//!
//! which minimizes the regularization term over the l_p sphere for the
//! current decision function. Both steps are exact minimizations of the
//! same primal objective, so the recorded objective trajectory is
//! non-increasing; the loop stops when the weight vector moves less than
//! `d_tol` in the max norm.
//!
//! Every Gram matrix is trace-normalized before combination and the same
//! normalizers are applied at prediction time, so kernel scale never leaks
//! into the learned weights.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::{gram, kernel_eval, KernelSpec};
use crate::math;
use crate::recording::Label;
use crate::svm::{solve_binary_svm_warm, SvmSolution};
use crate::{Error, Result};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Soft-margin penalty.
    pub c: f64,
    /// Norm exponent for the kernel-weight constraint ||d||_p = 1.
    pub p: f64,
    /// Kernels to combine; a single entry reduces training to a plain SVM.
    pub kernel_bank: Vec<KernelSpec>,
    /// Acceptable KKT violation in the trained model.
    pub kkt_tol: f64,
    /// Stop when no kernel weight moves by more than this.
    pub d_tol: f64,
    /// Cap on alternating rounds.
    pub max_outer_iters: usize,
}

impl TrainConfig {
    /// Defaults with an explicit kernel bank.
    pub fn with_bank(kernel_bank: Vec<KernelSpec>) -> TrainConfig {
        TrainConfig {
            c: 100.0,
            p: 1.5,
            kernel_bank,
            kkt_tol: 1e-3,
            d_tol: 1e-4,
            max_outer_iters: 100,
        }
    }

    /// Defaults with the standard bank sized to the given training rows.
    pub fn for_rows(rows: &[Vec<f64>]) -> TrainConfig {
        TrainConfig::with_bank(crate::kernel::default_kernel_bank(rows))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::Config(format!(
                "norm exponent p must be at least 1, got {}",
                self.p
            )));
        }
        if self.kernel_bank.is_empty() {
            return Err(Error::Config("kernel bank is empty".into()));
        }
        for spec in &self.kernel_bank {
            spec.validate()?;
        }
        if !(self.kkt_tol > 0.0 && self.d_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::Config("max_outer_iters must be positive".into()));
        }
        Ok(())
    }
}

/// A trained binary MKL classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MklModel {
    /// Training rows, kept verbatim for kernel evaluation at test time.
    pub rows: Vec<Vec<f64>>,
    /// Training labels, +1/-1.
    pub labels: Vec<f64>,
    /// Dual coefficients, one per row, in [0, C].
    pub alphas: Vec<f64>,
    /// Kernel combination weights, ||d||_p = 1.
    pub kernel_weights: Vec<f64>,
    /// Decision-function offset.
    pub bias: f64,
    /// The kernels behind each weight.
    pub bank: Vec<KernelSpec>,
    /// Trace normalizer of each kernel's training Gram; test-time kernel
    /// values are divided by the same factors.
    pub trace_norms: Vec<f64>,
    /// Primal objective after each inner solve; non-increasing.
    pub objective_trajectory: Vec<f64>,
    /// Kernel weights after each outer round, starting with the uniform
    /// initialization; every entry has unit l_p norm.
    pub weight_trajectory: Vec<Vec<f64>>,
}

impl MklModel {
    /// Decision value
    /// `sum_i sum_m alpha_i y_i d_m K_m(x_i, z) / trace_norm_m + bias`.
    pub fn decision_value(&self, z: &[f64]) -> Result<f64> {
        let d = self.rows.first().map_or(0, Vec::len);
        if z.len() != d {
            return Err(Error::Shape(format!(
                "test point has {} dims, model stores {d}",
                z.len()
            )));
        }
        let mut acc = 0.0;
        for ((row, &alpha), &y) in self.rows.iter().zip(&self.alphas).zip(&self.labels) {
            if alpha == 0.0 {
                continue;
            }
            let mut combined = 0.0;
            for ((spec, &w), &norm) in
                self.bank.iter().zip(&self.kernel_weights).zip(&self.trace_norms)
            {
                if w == 0.0 {
                    continue;
                }
                combined += w * kernel_eval(spec, row, z)? / norm;
            }
            acc += alpha * y * combined;
        }
        Ok(acc + self.bias)
    }
}

fn lp_norm(d: &[f64], p: f64) -> f64 {
    math::powf(d.iter().map(|&v| math::powf(math::abs(v), p)).sum(), 1.0 / p)
}

/// Train a binary classifier on +1/-1 labels by alternating SVM solves
/// with closed-form kernel-weight updates.
pub fn mkl_train(rows: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<MklModel> {
    cfg.validate()?;
    let n = rows.len();
    if n < 2 {
        return Err(Error::Shape(format!("need at least 2 samples, got {n}")));
    }
    if y.len() != n {
        return Err(Error::Shape(format!(
            "{n} rows but {} labels",
            y.len()
        )));
    }
    let m = cfg.kernel_bank.len();

    // Normalized Grams and their normalizers, computed once.
    let mut grams = Vec::with_capacity(m);
    let mut trace_norms = Vec::with_capacity(m);
    for spec in &cfg.kernel_bank {
        let g = gram(spec, rows)?;
        trace_norms.push(g.trace_norm);
        grams.push(g.values);
    }

    let mut d = vec![math::powf(m as f64, -1.0 / cfg.p); m];
    let mut weight_trajectory = vec![d.clone()];
    let mut objective_trajectory = Vec::new();
    let mut combined = vec![vec![0.0; n]; n];
    let mut warm: Option<Vec<f64>> = None;
    let mut solution: Option<SvmSolution> = None;

    for _outer in 0..cfg.max_outer_iters {
        for i in 0..n {
            for j in 0..n {
                combined[i][j] = grams
                    .iter()
                    .zip(&d)
                    .map(|(g, &w)| w * g[i][j])
                    .sum();
            }
        }
        let sol = solve_binary_svm_warm(&combined, y, cfg.c, warm.as_deref())?;

        // q_m = alpha' Y K_m Y alpha; ||w_m||^2 = d_m^2 q_m.
        let ay: Vec<f64> = sol.alpha.iter().zip(y).map(|(a, yi)| a * yi).collect();
        let q: Vec<f64> = grams
            .iter()
            .map(|g| {
                (0..n)
                    .map(|i| ay[i] * (0..n).map(|j| ay[j] * g[j][i]).sum::<f64>())
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect();

        // Primal objective at (d, alpha): the regularizer telescopes to
        // 1/2 sum_m d_m q_m because ||w_m||^2 / d_m = d_m q_m.
        let slack: f64 = (0..n)
            .map(|i| (1.0 - y[i] * (sol.scores[i] + sol.bias)).max(0.0))
            .sum();
        let objective =
            0.5 * d.iter().zip(&q).map(|(&w, &qm)| w * qm).sum::<f64>() + cfg.c * slack;
        objective_trajectory.push(objective);

        let wnorm2: Vec<f64> = d.iter().zip(&q).map(|(&w, &qm)| w * w * qm).collect();
        let total: f64 = wnorm2
            .iter()
            .map(|&v| math::powf(v, cfg.p / (cfg.p + 1.0)))
            .sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate(
                "every kernel carries zero decision weight; nothing to combine".into(),
            ));
        }
        let mut d_new: Vec<f64> = wnorm2
            .iter()
            .map(|&v| math::powf(v, 1.0 / (cfg.p + 1.0)) / math::powf(total, 1.0 / cfg.p))
            .collect();
        // Renormalize so roundoff in the powers cannot accumulate.
        let norm = lp_norm(&d_new, cfg.p);
        for w in d_new.iter_mut() {
            *w /= norm;
        }

        let step = d
            .iter()
            .zip(&d_new)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0f64, f64::max);
        weight_trajectory.push(d_new.clone());
        warm = Some(sol.alpha.clone());
        solution = Some(sol);
        if step < cfg.d_tol {
            // Keep the weights the final duals were solved against.
            break;
        }
        d = d_new;
    }

    let sol = solution.expect("max_outer_iters >= 1 guarantees one solve");
    Ok(MklModel {
        rows: rows.to_vec(),
        labels: y.to_vec(),
        alphas: sol.alpha,
        kernel_weights: d,
        bias: sol.bias,
        bank: cfg.kernel_bank.clone(),
        trace_norms,
        objective_trajectory,
        weight_trajectory,
    })
}

/// One binary model per class, in the fixed class order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MulticlassModel {
    pub per_class: Vec<(Label, MklModel)>,
}

impl MulticlassModel {
    /// Decision value of every class model at `z`, in training class order.
    pub fn decision_values(&self, z: &[f64]) -> Result<Vec<(Label, f64)>> {
        self.per_class
            .iter()
            .map(|(label, model)| Ok((*label, model.decision_value(z)?)))
            .collect()
    }

    /// Argmax of the per-class decision values; ties go to the class that
    /// comes first in the fixed order.
    pub fn predict(&self, z: &[f64]) -> Result<Label> {
        let values = self.decision_values(z)?;
        let mut best = values[0];
        for &cand in &values[1..] {
            if cand.1 > best.1 {
                best = cand;
            }
        }
        Ok(best.0)
    }
}

/// Train one-vs-rest models for every class present in `labels`.
pub fn multiclass_train(
    rows: &[Vec<f64>],
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<MulticlassModel> {
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let present: Vec<Label> = Label::ALL
        .iter()
        .copied()
        .filter(|c| labels.contains(c))
        .collect();
    if present.len() < 2 {
        return Err(Error::Label(format!(
            "one-vs-rest needs at least 2 classes, found {}",
            present.len()
        )));
    }
    let per_class = present
        .into_iter()
        .map(|class| {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            Ok((class, mkl_train(rows, &y, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel { per_class })
}
