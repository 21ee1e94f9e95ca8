//! Principal component analysis for trial feature vectors.
//!
//! Feature vectors here are much wider than the trial count (a few thousand
//! dimensions, a few dozen trials), so the fit works on the n x n Gram
//! matrix of the centered rows instead of the d x d covariance whenever
//! n <= d: both share nonzero eigenvalues up to the 1/n variance divisor,
//! and each Gram eigenvector u maps to a covariance eigenvector
//! X_c^T u / ||X_c^T u||. Narrow data takes the direct covariance route.
//!
//! Eigendecomposition is cyclic Jacobi: dimensions stay small (at most the
//! trial count or the feature count, whichever is smaller), and Jacobi's
//! orthogonality guarantees carry straight into the component invariants.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Fitted projection onto the leading principal components.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaModel {
    /// Per-dimension mean of the training rows.
    pub mean: Vec<f64>,
    /// One unit-norm component per row, descending variance. In each
    /// component the entry of largest magnitude is positive, which pins the
    /// otherwise arbitrary sign.
    pub components: Vec<Vec<f64>>,
    /// Variance along each kept component (population divisor), descending.
    pub eigenvalues: Vec<f64>,
    /// Fraction of total variance the kept components carry.
    pub explained_fraction: f64,
    /// Total variance of the training rows (trace of their covariance).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dims(&self) -> usize {
        self.mean.len()
    }

    /// Project one row: `components * (row - mean)`.
    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::Shape(format!(
                "row has {} dims, model expects {}",
                row.len(),
                self.mean.len()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|comp| {
                comp.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(c, (x, m))| c * (x - m))
                    .sum()
            })
            .collect())
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }

    /// Map a projected row back into the input space.
    pub fn reconstruct(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.components.len() {
            return Err(Error::Shape(format!(
                "reduced row has {} coords, model has {} components",
                reduced.len(),
                self.components.len()
            )));
        }
        let mut out = self.mean.clone();
        for (z, comp) in reduced.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += z * c;
            }
        }
        Ok(out)
    }
}

/// Eigenvalues below this fraction of the largest are treated as zero
/// variance; their directions are numerical noise and never kept.
const EIG_FLOOR: f64 = 1e-12;

/// Fit a PCA keeping the smallest component count whose cumulative variance
/// fraction reaches `target_fraction`.
pub fn pca_fit(rows: &[Vec<f64>], target_fraction: f64) -> Result<PcaModel> {
    if rows.len() < 2 {
        return Err(Error::Degenerate(format!(
            "PCA needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::Shape("rows have zero dimensions".into()));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("rows differ in dimension".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Integrity("non-finite value in PCA input".into()));
    }
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "target variance fraction must be in (0, 1], got {target_fraction}"
        )));
    }
    let n = rows.len();
    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    // (variance, unit component) pairs in arbitrary order.
    let mut pairs: Vec<(f64, Vec<f64>)>;
    let total_variance;
    if n <= d {
        // Gram route: G[i][j] = <xc_i, xc_j>.
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let dot = centered[i]
                    .iter()
                    .zip(&centered[j])
                    .map(|(a, b)| a * b)
                    .sum();
                gram[i][j] = dot;
                gram[j][i] = dot;
            }
        }
        total_variance = (0..n).map(|i| gram[i][i]).sum::<f64>() / n as f64;
        let (eigvals, eigvecs) = jacobi_eigen(gram)?;
        let floor = eigvals.iter().fold(0.0f64, |m, &v| m.max(v)) * EIG_FLOOR;
        pairs = Vec::new();
        for (idx, &mu) in eigvals.iter().enumerate() {
            if mu <= floor || mu <= 0.0 {
                continue;
            }
            // Columns of the Jacobi basis are the Gram eigenvectors.
            let mut comp = vec![0.0; d];
            for (i, xc) in centered.iter().enumerate() {
                let w = eigvecs[i][idx];
                for (c, v) in comp.iter_mut().zip(xc) {
                    *c += w * v;
                }
            }
            let norm = math::sqrt(comp.iter().map(|v| v * v).sum());
            for c in comp.iter_mut() {
                *c /= norm;
            }
            pairs.push((mu / n as f64, comp));
        }
    } else {
        // Direct route: covariance with the population divisor.
        let mut cov = vec![vec![0.0; d]; d];
        for xc in &centered {
            for i in 0..d {
                for j in i..d {
                    cov[i][j] += xc[i] * xc[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[i][j] /= n as f64;
                cov[j][i] = cov[i][j];
            }
        }
        total_variance = (0..d).map(|i| cov[i][i]).sum();
        let (eigvals, eigvecs) = jacobi_eigen(cov)?;
        let floor = eigvals.iter().fold(0.0f64, |m, &v| m.max(v)) * EIG_FLOOR;
        pairs = Vec::new();
        for (idx, &lam) in eigvals.iter().enumerate() {
            if lam <= floor || lam <= 0.0 {
                continue;
            }
            let comp: Vec<f64> = (0..d).map(|i| eigvecs[i][idx]).collect();
            pairs.push((lam, comp));
        }
    }
    if !(total_variance > 0.0) || pairs.is_empty() {
        return Err(Error::Degenerate(
            "training rows carry no variance; PCA has nothing to keep".into(),
        ));
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    // Smallest k whose cumulative fraction reaches the target; roundoff in
    // the discarded tail must not push k past the available components.
    let mut k = pairs.len();
    let mut cum = 0.0;
    for (i, (lam, _)) in pairs.iter().enumerate() {
        cum += lam;
        if cum / total_variance >= target_fraction - 1e-12 {
            k = i + 1;
            break;
        }
    }
    pairs.truncate(k);

    let mut eigenvalues = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k);
    let mut kept = 0.0;
    for (lam, mut comp) in pairs {
        // Sign convention: largest-magnitude entry positive.
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| math::abs(*a.1).partial_cmp(&math::abs(*b.1)).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if comp[lead] < 0.0 {
            for c in comp.iter_mut() {
                *c = -*c;
            }
        }
        kept += lam;
        eigenvalues.push(lam);
        components.push(comp);
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        explained_fraction: kept / total_variance,
        total_variance,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, basis)` where column `j` of `basis` is the unit
/// eigenvector for `eigenvalues[j]`, in no particular order.
pub(crate) fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    let mut basis = vec![vec![0.0; n]; n];
    for (i, row) in basis.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if n == 1 {
        return Ok((vec![a[0][0]], basis));
    }
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(math::abs(v)))
        .max(1.0);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(math::abs(a[p][q]));
            }
        }
        if off <= tol {
            let eigvals = (0..n).map(|i| a[i][i]).collect();
            return Ok((eigvals, basis));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if math::abs(a[p][q]) <= tol * 1e-2 {
                    continue;
                }
                let apq = a[p][q];
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in basis.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    Err(Error::Numeric(
        "Jacobi eigendecomposition did not converge in 100 sweeps".into(),
    ))
}
