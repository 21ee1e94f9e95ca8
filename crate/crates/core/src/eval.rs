//! Leave-one-out cross-validation and result tables.
//!
//! The fold loop is generic over a training closure so the same machinery
//! evaluates anything from a constant baseline to the full
//! feature-reduction-plus-classifier stack. The closure sees only the
//! training fold and the held-out row, which keeps every fit leakage-free
//! by construction.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::recording::Label;
use crate::{Error, Result};

pub const N_CLASSES: usize = 5;

/// The chance rate for five balanced classes, reported alongside every
/// accuracy so tables are self-describing.
pub const CHANCE_RATE_PCT: f64 = 20.0;

/// Prediction counts; rows are ground truth, columns are predictions, both
/// in the fixed class order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> ConfusionMatrix {
        ConfusionMatrix::default()
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> [u64; N_CLASSES] {
        let mut out = [0; N_CLASSES];
        for (i, row) in self.counts.iter().enumerate() {
            out[i] = row.iter().sum();
        }
        out
    }

    pub fn accuracy_pct(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        100.0 * self.trace() as f64 / total as f64
    }
}

/// Row-normalize counts to percentages in [0, 100].
pub fn confusion_normalize(cm: &ConfusionMatrix) -> Result<[[f64; N_CLASSES]; N_CLASSES]> {
    let mut out = [[0.0; N_CLASSES]; N_CLASSES];
    for (i, row) in cm.counts.iter().enumerate() {
        let sum: u64 = row.iter().sum();
        if sum == 0 {
            return Err(Error::Degenerate(format!(
                "class {} has no trials; its confusion row cannot be normalized",
                Label::ALL[i]
            )));
        }
        for (o, &v) in out[i].iter_mut().zip(row) {
            *o = 100.0 * v as f64 / sum as f64;
        }
    }
    Ok(out)
}

/// Accuracy of one bipolar pair in the 3 x 3 sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairAccuracy {
    /// Left-side bipolar channel index, 0..3.
    pub left: usize,
    /// Right-side bipolar channel index, 0..3.
    pub right: usize,
    pub accuracy_pct: f64,
}

/// Accuracies of all nine left/right pairings plus their mean and the pair
/// the synchronization measure picked.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerPairReport {
    /// Nine entries, left-major order.
    pub entries: Vec<PairAccuracy>,
    pub mean_accuracy_pct: f64,
    /// The pair the synchronization matrix selected.
    pub selected: (usize, usize),
    pub selected_accuracy_pct: f64,
}

/// Evaluation summary around one confusion matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub accuracy_pct: f64,
    pub confusion: ConfusionMatrix,
    /// Row-normalized confusion in [0, 100].
    pub confusion_normalized: [[f64; N_CLASSES]; N_CLASSES],
    pub per_pair: Option<PerPairReport>,
    pub chance_rate_pct: f64,
}

impl EvalReport {
    /// Build a report; fails when some class has no trials, since its
    /// normalized confusion row would be undefined.
    pub fn new(confusion: ConfusionMatrix) -> Result<EvalReport> {
        Ok(EvalReport {
            accuracy_pct: confusion.accuracy_pct(),
            confusion_normalized: confusion_normalize(&confusion)?,
            confusion,
            per_pair: None,
            chance_rate_pct: CHANCE_RATE_PCT,
        })
    }

    pub fn with_per_pair(mut self, per_pair: PerPairReport) -> EvalReport {
        self.per_pair = Some(per_pair);
        self
    }
}

fn check_fold_feasibility(labels: &[Label]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::Degenerate(format!(
            "leave-one-out needs at least 2 trials, got {}",
            labels.len()
        )));
    }
    let mut counts = [0u64; N_CLASSES];
    for l in labels {
        counts[l.index()] += 1;
    }
    for (i, &count) in counts.iter().enumerate() {
        if count == 1 {
            return Err(Error::Degenerate(format!(
                "class {} has a single trial; its fold would train without it",
                Label::ALL[i]
            )));
        }
    }
    Ok(())
}

/// Leave-one-out cross-validation.
///
/// For each trial, `train_predict` receives every other trial and the
/// held-out feature row, and returns the predicted class. Each trial is
/// predicted exactly once; the counts land in a confusion matrix.
pub fn loocv<F>(rows: &[Vec<f64>], labels: &[Label], mut train_predict: F) -> Result<ConfusionMatrix>
where
    F: FnMut(&[Vec<f64>], &[Label], &[f64]) -> Result<Label>,
{
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    check_fold_feasibility(labels)?;
    let n = rows.len();
    let mut cm = ConfusionMatrix::new();
    let mut train_rows: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut train_labels: Vec<Label> = Vec::with_capacity(n - 1);
    for held in 0..n {
        train_rows.clear();
        train_labels.clear();
        for i in 0..n {
            if i != held {
                train_rows.push(rows[i].clone());
                train_labels.push(labels[i]);
            }
        }
        let predicted = train_predict(&train_rows, &train_labels, &rows[held])?;
        cm.record(labels[held], predicted);
    }
    Ok(cm)
}

/// Run an accuracy evaluation for each of the nine left/right bipolar
/// pairings and aggregate them around the synchronization-selected pair.
///
/// `eval_pair(left, right)` must return the pair's LOOCV accuracy percent;
/// the heavy lifting (feature extraction, training) stays with the caller.
pub fn per_pair_sweep<F>(selected: (usize, usize), mut eval_pair: F) -> Result<PerPairReport>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    if selected.0 >= 3 || selected.1 >= 3 {
        return Err(Error::Config(format!(
            "selected pair ({}, {}) is out of the 3 x 3 range",
            selected.0, selected.1
        )));
    }
    let mut entries = Vec::with_capacity(9);
    for left in 0..3 {
        for right in 0..3 {
            let accuracy_pct = eval_pair(left, right)?;
            entries.push(PairAccuracy {
                left,
                right,
                accuracy_pct,
            });
        }
    }
    let mean_accuracy_pct =
        entries.iter().map(|e| e.accuracy_pct).sum::<f64>() / entries.len() as f64;
    let selected_accuracy_pct = entries
        .iter()
        .find(|e| (e.left, e.right) == selected)
        .map(|e| e.accuracy_pct)
        .expect("selected pair is within the swept range");
    Ok(PerPairReport {
        entries,
        mean_accuracy_pct,
        selected,
        selected_accuracy_pct,
    })
}

/// Human-readable one-line summary, handy for logs.
pub fn summary_line(report: &EvalReport) -> String {
    format!(
        "accuracy {:.2}% over {} trials (chance {:.0}%)",
        report.accuracy_pct,
        report.confusion.total(),
        report.chance_rate_pct
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::math;
    use crate::mkl::{multiclass_train, TrainConfig};
    use crate::rng;

    fn balanced_dataset(per_class: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (ci, &class) in Label::ALL.iter().enumerate() {
            for k in 0..per_class {
                rows.push(vec![ci as f64, k as f64]);
                labels.push(class);
            }
        }
        (rows, labels)
    }

    #[test]
    fn constant_predictor_scores_the_chance_rate_on_balanced_data() {
        let (rows, labels) = balanced_dataset(2);
        let cm = loocv(&rows, &labels, |_, _, _| Ok(Label::ButtonPress)).unwrap();
        assert_eq!(cm.total(), 10);
        assert!((cm.accuracy_pct() - 20.0).abs() < 1e-12);
        // Everything lands in the first predicted column.
        for (i, row) in cm.counts.iter().enumerate() {
            assert_eq!(row[0], 2, "row {i}");
            assert!(row[1..].iter().all(|&v| v == 0));
        }
    }

    fn five_clusters(seed: u64, per_class: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (ci, &class) in Label::ALL.iter().enumerate() {
            let angle = math::TAU * ci as f64 / 5.0;
            for k in 0..per_class {
                let mut noise = [0.0; 2];
                rng::fill_normal(seed, (ci * per_class + k) as u64, 0, &mut noise);
                rows.push(vec![
                    6.0 * math::cos(angle) + 0.4 * noise[0],
                    6.0 * math::sin(angle) + 0.4 * noise[1],
                ]);
                labels.push(class);
            }
        }
        (rows, labels)
    }

    #[test]
    fn separable_clusters_give_a_diagonal_confusion_matrix() {
        let (rows, labels) = five_clusters(19, 4);
        let cfg = TrainConfig::with_bank(vec![KernelSpec::Rbf { gamma: 0.1 }]);
        let cm = loocv(&rows, &labels, |train_rows, train_labels, test| {
            multiclass_train(train_rows, train_labels, &cfg)?.predict(test)
        })
        .unwrap();
        assert_eq!(cm.accuracy_pct(), 100.0);
        for i in 0..N_CLASSES {
            for j in 0..N_CLASSES {
                assert_eq!(cm.counts[i][j], if i == j { 4 } else { 0 });
            }
        }
        let report = EvalReport::new(cm).unwrap();
        assert_eq!(report.accuracy_pct, 100.0);
        assert_eq!(report.chance_rate_pct, 20.0);
        for i in 0..N_CLASSES {
            assert_eq!(report.confusion_normalized[i][i], 100.0);
        }
    }

    #[test]
    fn every_trial_is_predicted_exactly_once() {
        let (rows, labels) = balanced_dataset(3);
        let mut calls = 0;
        let cm = loocv(&rows, &labels, |train_rows, _, _| {
            calls += 1;
            assert_eq!(train_rows.len(), rows.len() - 1);
            Ok(Label::Rest)
        })
        .unwrap();
        assert_eq!(calls, rows.len());
        assert_eq!(cm.total(), rows.len() as u64);
        assert_eq!(cm.row_sums(), [3, 3, 3, 3, 3]);
    }

    #[test]
    fn accuracy_equals_the_mean_correctness_indicator() {
        let (rows, labels) = balanced_dataset(2);
        // Alternate right and wrong predictions deterministically.
        let mut flip = false;
        let truth = labels.clone();
        let mut held = 0;
        let cm = loocv(&rows, &labels, |_, _, _| {
            let t = truth[held];
            held += 1;
            flip = !flip;
            Ok(if flip { t } else { Label::ALL[(t.index() + 1) % 5] })
        })
        .unwrap();
        assert_eq!(cm.trace(), 5);
        assert_eq!(cm.accuracy_pct(), 100.0 * 5.0 / 10.0);
    }

    /// Nearest-centroid prediction commutes with class renaming, so
    /// permuting the labels must permute the confusion matrix and leave
    /// accuracy untouched.
    #[test]
    fn label_permutation_permutes_the_confusion_matrix() {
        let (rows, labels) = five_clusters(47, 3);
        let centroid_predict = |train_rows: &[Vec<f64>],
                                train_labels: &[Label],
                                test: &[f64]|
         -> Result<Label> {
            let mut best = (f64::INFINITY, Label::ButtonPress);
            for &class in &Label::ALL {
                let members: Vec<&Vec<f64>> = train_rows
                    .iter()
                    .zip(train_labels)
                    .filter(|(_, l)| **l == class)
                    .map(|(r, _)| r)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let mut center = vec![0.0; test.len()];
                for m in &members {
                    for (c, v) in center.iter_mut().zip(m.iter()) {
                        *c += v;
                    }
                }
                let d2: f64 = center
                    .iter()
                    .zip(test)
                    .map(|(c, t)| {
                        let diff = c / members.len() as f64 - t;
                        diff * diff
                    })
                    .sum();
                if d2 < best.0 {
                    best = (d2, class);
                }
            }
            Ok(best.1)
        };
        let base = loocv(&rows, &labels, centroid_predict).unwrap();
        // Cyclic rename: class i becomes class i+1.
        let perm = |l: Label| Label::ALL[(l.index() + 1) % 5];
        let renamed: Vec<Label> = labels.iter().map(|&l| perm(l)).collect();
        let moved = loocv(&rows, &renamed, centroid_predict).unwrap();
        assert_eq!(base.accuracy_pct(), moved.accuracy_pct());
        for i in 0..N_CLASSES {
            for j in 0..N_CLASSES {
                let pi = (i + 1) % 5;
                let pj = (j + 1) % 5;
                assert_eq!(base.counts[i][j], moved.counts[pi][pj]);
            }
        }
    }

    #[test]
    fn loocv_results_are_deterministic() {
        let (rows, labels) = five_clusters(3, 2);
        let cfg = TrainConfig::with_bank(vec![KernelSpec::Rbf { gamma: 0.2 }]);
        let run = || {
            loocv(&rows, &labels, |tr, tl, test| {
                multiclass_train(tr, tl, &cfg)?.predict(test)
            })
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn normalization_handles_the_standard_rows() {
        let mut cm = ConfusionMatrix::new();
        for i in 0..N_CLASSES {
            cm.counts[i][i] = 2;
        }
        let norm = confusion_normalize(&cm).unwrap();
        for i in 0..N_CLASSES {
            for j in 0..N_CLASSES {
                assert_eq!(norm[i][j], if i == j { 100.0 } else { 0.0 });
            }
        }
        cm.counts[0] = [1, 1, 1, 1, 1];
        let norm = confusion_normalize(&cm).unwrap();
        assert_eq!(norm[0], [20.0; 5]);
        cm.counts[3] = [10, 1, 3, 80, 6];
        let norm = confusion_normalize(&cm).unwrap();
        assert_eq!(norm[3], [10.0, 1.0, 3.0, 80.0, 6.0]);
        for row in &norm {
            assert!((row.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rows_are_named_in_the_error() {
        let mut cm = ConfusionMatrix::new();
        cm.counts[0][0] = 3;
        let err = confusion_normalize(&cm).unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("S"), "unexpected message: {msg}");
    }

    #[test]
    fn single_trial_classes_are_rejected_before_folding() {
        let rows = vec![vec![0.0]; 3];
        let labels = vec![Label::ButtonPress, Label::ButtonPress, Label::Speech];
        let err = loocv(&rows, &labels, |_, _, _| Ok(Label::Speech)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        let msg = alloc::format!("{err}");
        assert!(msg.contains("S"), "unexpected message: {msg}");
        assert!(matches!(
            loocv(&rows[..1], &labels[..1], |_, _, _| Ok(Label::Rest)),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            loocv(&rows, &labels[..2], |_, _, _| Ok(Label::Rest)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn pair_sweep_aggregates_and_marks_the_selected_pair() {
        let accuracy = |l: usize, r: usize| 10.0 * l as f64 + r as f64;
        let report = per_pair_sweep((2, 1), |l, r| Ok(accuracy(l, r))).unwrap();
        assert_eq!(report.entries.len(), 9);
        assert_eq!(report.entries[0], PairAccuracy { left: 0, right: 0, accuracy_pct: 0.0 });
        assert_eq!(report.entries[7].left, 2);
        assert_eq!(report.entries[7].right, 1);
        assert_eq!(report.selected_accuracy_pct, 21.0);
        let mean = (0..3)
            .flat_map(|l| (0..3).map(move |r| accuracy(l, r)))
            .sum::<f64>()
            / 9.0;
        assert!((report.mean_accuracy_pct - mean).abs() < 1e-12);
    }

    #[test]
    fn identical_pairs_make_a_flat_sweep() {
        let report = per_pair_sweep((0, 0), |_, _| Ok(42.0)).unwrap();
        assert!(report.entries.iter().all(|e| e.accuracy_pct == 42.0));
        assert_eq!(report.mean_accuracy_pct, 42.0);
        assert!(per_pair_sweep((3, 0), |_, _| Ok(0.0)).is_err());
    }
}
