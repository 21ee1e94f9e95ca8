//! Kernel functions and trace-normalized Gram matrices.
//!
//! Every Gram matrix is divided by trace/N before use, so each kernel
//! contributes on the same scale no matter its raw magnitude. Without
//! this, combination weights would track kernel scale instead of kernel
//! information, and a polynomial kernel would swamp an RBF one for free.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// A kernel function with its constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum KernelSpec {
    /// `x . y + c`
    Linear { c: f64 },
    /// `(x . y + c)^degree`
    Polynomial { c: f64, degree: u32 },
    /// `exp(-gamma ||x - y||^2)`
    Rbf { gamma: f64 },
}

impl KernelSpec {
    /// Offsets must be nonnegative and gamma positive, else the Gram matrix
    /// loses positive semidefiniteness (or diverges).
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear { c } => {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::Config(format!(
                        "linear kernel offset must be nonnegative, got {c}"
                    )));
                }
            }
            KernelSpec::Polynomial { c, degree } => {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::Config(format!(
                        "polynomial kernel offset must be nonnegative, got {c}"
                    )));
                }
                if degree < 1 {
                    return Err(Error::Config("polynomial degree must be at least 1".into()));
                }
            }
            KernelSpec::Rbf { gamma } => {
                if !(gamma.is_finite() && gamma > 0.0) {
                    return Err(Error::Config(format!(
                        "rbf gamma must be positive, got {gamma}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl core::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            KernelSpec::Linear { c } => write!(f, "linear(c={c})"),
            KernelSpec::Polynomial { c, degree } => write!(f, "poly(c={c}, d={degree})"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
        }
    }
}

/// Evaluate one kernel on a pair of vectors.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "kernel arguments have {} vs {} dims",
            x.len(),
            y.len()
        )));
    }
    Ok(match *spec {
        KernelSpec::Linear { c } => dot(x, y) + c,
        KernelSpec::Polynomial { c, degree } => math::powi(dot(x, y) + c, degree as i32),
        KernelSpec::Rbf { gamma } => {
            let d2: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            math::exp(-gamma * d2)
        }
    })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// A trace-normalized Gram matrix together with the factor that was divided
/// out, which test-time kernel evaluations must divide by as well.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GramMatrix {
    /// Symmetric N x N values with trace N.
    pub values: Vec<Vec<f64>>,
    /// Raw trace divided by N; always positive.
    pub trace_norm: f64,
}

/// Build the trace-normalized Gram matrix of `rows` under `spec`.
pub fn gram(spec: &KernelSpec, rows: &[Vec<f64>]) -> Result<GramMatrix> {
    spec.validate()?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Shape("gram needs at least one row".into()));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("gram rows differ in dimension".into()));
    }
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = kernel_eval(spec, &rows[i], &rows[j])?;
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "kernel {spec} produced a non-finite entry at ({i}, {j})"
                )));
            }
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    let trace: f64 = (0..n).map(|i| values[i][i]).sum();
    let trace_norm = trace / n as f64;
    if !(trace_norm > 0.0) {
        return Err(Error::Degenerate(format!(
            "gram of {spec} has nonpositive trace and cannot be normalized"
        )));
    }
    for row in values.iter_mut() {
        for v in row.iter_mut() {
            *v /= trace_norm;
        }
    }
    Ok(GramMatrix { values, trace_norm })
}

/// Median squared pairwise distance of the rows; 1.0 when there are no
/// informative pairs. The usual bandwidth heuristic for RBF kernels.
pub fn median_squared_distance(rows: &[Vec<f64>]) -> f64 {
    let mut d2s = Vec::new();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let d2: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2.is_finite() {
                d2s.push(d2);
            }
        }
    }
    if d2s.is_empty() {
        return 1.0;
    }
    d2s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = d2s.len() / 2;
    let median = if d2s.len() % 2 == 1 {
        d2s[mid]
    } else {
        (d2s[mid - 1] + d2s[mid]) / 2.0
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Default kernel bank: linear, quadratic, and three RBF widths around the
/// median-distance bandwidth of the given training rows.
pub fn default_kernel_bank(rows: &[Vec<f64>]) -> Vec<KernelSpec> {
    let sigma2 = median_squared_distance(rows);
    vec![
        KernelSpec::Linear { c: 1.0 },
        KernelSpec::Polynomial { c: 1.0, degree: 2 },
        KernelSpec::Rbf { gamma: 0.1 / sigma2 },
        KernelSpec::Rbf { gamma: 1.0 / sigma2 },
        KernelSpec::Rbf { gamma: 10.0 / sigma2 },
    ]
}
