//! End-to-end composition: recording in, cross-validated report out.
//!
//! The stages run in a fixed order:
//!
//! 1. bipolar re-referencing and zero-phase band-pass filtering,
//! 2. phase-synchronization scoring of the nine left/right channel pairs,
//! 3. Morlet spectrograms of each trial epoch, block-averaged in time and
//!    flattened into one feature vector per trial,
//! 4. PCA projection followed by a kernel classifier,
//! 5. leave-one-out cross-validation aggregated into a confusion matrix.
//!
//! PCA and the classifier are refit inside every fold so no statistic of
//! the held-out trial leaks into training. The `global_pca` switch
//! deliberately breaks that isolation (one projection fitted on all trials
//! up front) for comparison runs.
//!
//! Spectrograms are computed once per channel and reused across pairings,
//! so sweeping all nine pairs costs six channel passes, not eighteen.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::eval::{loocv, per_pair_sweep, ConfusionMatrix, EvalReport};
use crate::features::{assemble_pair_features, downsample_time, MorletPlan, SpectrogramConfig};
use crate::kernel::{default_kernel_bank, median_squared_distance, KernelSpec};
use crate::math;
use crate::mkl::{multiclass_train, TrainConfig};
use crate::pca::{pca_fit, PcaModel};
use crate::preprocess::{bipolar_rereference, extract_epochs, BandpassFilter, BipolarSet};
use crate::recording::{EventMarker, Label, Recording};
use crate::sync::{sync_matrix, SyncReport};
use crate::{Error, Result};

/// Which kernel machine scores the reduced features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ClassifierKind {
    /// Single linear kernel.
    SvmLinear,
    /// Single inhomogeneous quadratic kernel.
    SvmPoly,
    /// Single Gaussian kernel, width set by the median heuristic.
    SvmRbf,
    /// Learned combination of the default five-kernel bank.
    Mkl,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmPoly,
        ClassifierKind::SvmRbf,
        ClassifierKind::Mkl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::SvmLinear => "svm-linear",
            ClassifierKind::SvmPoly => "svm-poly",
            ClassifierKind::SvmRbf => "svm-rbf",
            ClassifierKind::Mkl => "mkl",
        }
    }

    /// Concrete kernel bank for the given (already reduced) training rows.
    ///
    /// Data enters only through the median heuristic for Gaussian widths,
    /// so the bank depends on the training fold alone.
    pub fn kernel_bank(&self, rows: &[Vec<f64>]) -> Vec<KernelSpec> {
        match self {
            ClassifierKind::SvmLinear => vec![KernelSpec::Linear { c: 0.0 }],
            ClassifierKind::SvmPoly => vec![KernelSpec::Polynomial { c: 1.0, degree: 2 }],
            ClassifierKind::SvmRbf => vec![KernelSpec::Rbf {
                gamma: 1.0 / median_squared_distance(rows),
            }],
            ClassifierKind::Mkl => default_kernel_bank(rows),
        }
    }
}

impl core::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which left/right channel pairing feeds the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum PairMode {
    /// The pair the synchronization matrix scores highest.
    Auto,
    /// Evaluate every pair; the report carries all nine accuracies and the
    /// main confusion matrix still belongs to the synchronization pick.
    All,
    /// A caller-chosen pair of bipolar channel indices, each in 0..3.
    Fixed { left: usize, right: usize },
}

/// Every knob of the pipeline in one serializable bundle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PipelineConfig {
    /// Band-pass corners in Hz applied before anything else.
    pub band_hz: (f64, f64),
    /// Seconds of signal kept before each event onset.
    pub epoch_pre_s: f64,
    /// Seconds kept after each onset.
    pub epoch_post_s: f64,
    pub spectrogram: SpectrogramConfig,
    /// Block length for time-axis averaging of each spectrogram.
    pub downsample_factor: usize,
    /// Fraction of variance the PCA projection must retain, in (0, 1].
    pub pca_fraction: f64,
    /// Soft-margin penalty C.
    pub c: f64,
    /// Norm exponent for the kernel-weight constraint.
    pub p: f64,
    /// Acceptable KKT violation in each trained model.
    pub kkt_tol: f64,
    /// Stop threshold on kernel-weight movement.
    pub d_tol: f64,
    /// Cap on kernel-weight update rounds.
    pub max_outer_iters: usize,
    pub classifier: ClassifierKind,
    pub pair: PairMode,
    /// Fit PCA once on all trials instead of per fold. This leaks held-out
    /// statistics into training and exists only as a comparison point.
    pub global_pca: bool,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            band_hz: (1.0, 100.0),
            epoch_pre_s: 1.0,
            epoch_post_s: 1.0,
            spectrogram: SpectrogramConfig::default(),
            downsample_factor: 100,
            pca_fraction: 0.95,
            c: 100.0,
            p: 1.5,
            kkt_tol: 1e-3,
            d_tol: 1e-4,
            max_outer_iters: 100,
            classifier: ClassifierKind::Mkl,
            pair: PairMode::Auto,
            global_pca: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band_hz;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::Config(format!(
                "band corners must satisfy 0 < lo < hi, got ({lo}, {hi}) Hz"
            )));
        }
        if !(self.epoch_pre_s.is_finite()
            && self.epoch_post_s.is_finite()
            && self.epoch_pre_s >= 0.0
            && self.epoch_post_s >= 0.0
            && self.epoch_pre_s + self.epoch_post_s > 0.0)
        {
            return Err(Error::Config(format!(
                "epoch window must be non-negative with positive total length, got ({}, {}) s",
                self.epoch_pre_s, self.epoch_post_s
            )));
        }
        self.spectrogram.validate()?;
        if self.downsample_factor == 0 {
            return Err(Error::Config("downsample factor must be at least 1".into()));
        }
        if !(self.pca_fraction.is_finite() && 0.0 < self.pca_fraction && self.pca_fraction <= 1.0)
        {
            return Err(Error::Config(format!(
                "PCA variance fraction must lie in (0, 1], got {}",
                self.pca_fraction
            )));
        }
        // The classifier settings share the trainer's own validation; the
        // placeholder kernel stands in for the per-fold bank.
        TrainConfig {
            c: self.c,
            p: self.p,
            kernel_bank: vec![KernelSpec::Linear { c: 0.0 }],
            kkt_tol: self.kkt_tol,
            d_tol: self.d_tol,
            max_outer_iters: self.max_outer_iters,
        }
        .validate()?;
        if let PairMode::Fixed { left, right } = self.pair {
            if left >= 3 || right >= 3 {
                return Err(Error::Config(format!(
                    "fixed pair indices must be below 3, got ({left}, {right})"
                )));
            }
        }
        Ok(())
    }

    /// FNV-1a over every field, for tagging outputs with their settings.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |word: u64| {
            for byte in word.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.band_hz.0.to_bits());
        eat(self.band_hz.1.to_bits());
        eat(self.epoch_pre_s.to_bits());
        eat(self.epoch_post_s.to_bits());
        eat(self.spectrogram.freqs_hz.len() as u64);
        for &f in &self.spectrogram.freqs_hz {
            eat(f.to_bits());
        }
        eat(self.spectrogram.wavelet_cycles.to_bits());
        eat(u64::from(self.spectrogram.use_magnitude));
        eat(self.downsample_factor as u64);
        eat(self.pca_fraction.to_bits());
        eat(self.c.to_bits());
        eat(self.p.to_bits());
        eat(self.kkt_tol.to_bits());
        eat(self.d_tol.to_bits());
        eat(self.max_outer_iters as u64);
        eat(match self.classifier {
            ClassifierKind::SvmLinear => 0,
            ClassifierKind::SvmPoly => 1,
            ClassifierKind::SvmRbf => 2,
            ClassifierKind::Mkl => 3,
        });
        match self.pair {
            PairMode::Auto => eat(4),
            PairMode::All => eat(5),
            PairMode::Fixed { left, right } => {
                eat(6);
                eat(left as u64);
                eat(right as u64);
            }
        }
        eat(u64::from(self.global_pca));
        h
    }
}

/// Filtered channels plus the pair scores, ready for feature extraction.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Band-passed bipolar channels.
    pub bipolar: BipolarSet,
    pub sync: SyncReport,
}

/// Re-reference, filter, and score all nine pairings of a recording.
pub fn prepare(rec: &Recording, cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate()?;
    let raw = bipolar_rereference(rec)?;
    let filter = BandpassFilter::design(cfg.band_hz.0, cfg.band_hz.1, rec.sample_rate_hz)?;
    let left = three(filter.apply_many(&raw.left)?)?;
    let right = three(filter.apply_many(&raw.right)?)?;
    let sync = sync_matrix(&left, &right, cfg.band_hz, rec.sample_rate_hz)?;
    Ok(Prepared {
        bipolar: BipolarSet {
            sample_rate_hz: raw.sample_rate_hz,
            left,
            right,
            left_names: raw.left_names,
            right_names: raw.right_names,
        },
        sync,
    })
}

fn three(v: Vec<Vec<f64>>) -> Result<[Vec<f64>; 3]> {
    v.try_into()
        .map_err(|_| Error::Shape("expected exactly three channels per side".into()))
}

/// Per-channel spectrogram cache keyed by (side, channel index).
///
/// Each channel's epochs are transformed at most once no matter how many
/// pairings ask for them.
struct PairFeatures<'a> {
    bipolar: &'a BipolarSet,
    events: &'a [EventMarker],
    pre_s: f64,
    post_s: f64,
    factor: usize,
    plan: MorletPlan,
    cache: [[Option<Vec<Vec<Vec<f64>>>>; 3]; 2],
    labels: Vec<Label>,
}

impl<'a> PairFeatures<'a> {
    fn new(bipolar: &'a BipolarSet, events: &'a [EventMarker], cfg: &PipelineConfig) -> Result<Self> {
        let fs = bipolar.sample_rate_hz;
        let epoch_len = math::round(cfg.epoch_pre_s * fs) as usize
            + math::round(cfg.epoch_post_s * fs) as usize;
        let plan = MorletPlan::new(epoch_len, &cfg.spectrogram, fs)?;
        Ok(PairFeatures {
            bipolar,
            events,
            pre_s: cfg.epoch_pre_s,
            post_s: cfg.epoch_post_s,
            factor: cfg.downsample_factor,
            plan,
            cache: [[None, None, None], [None, None, None]],
            labels: events.iter().map(|e| e.label).collect(),
        })
    }

    /// Compute (once) the downsampled spectrogram of every epoch of one channel.
    fn ensure(&mut self, side: usize, idx: usize) -> Result<()> {
        if self.cache[side][idx].is_some() {
            return Ok(());
        }
        let signal = if side == 0 {
            &self.bipolar.left[idx]
        } else {
            &self.bipolar.right[idx]
        };
        let epochs = extract_epochs(
            signal,
            self.events,
            self.pre_s,
            self.post_s,
            self.bipolar.sample_rate_hz,
        )?;
        let mut trials = Vec::with_capacity(epochs.len());
        for epoch in &epochs {
            let spec = self.plan.spectrogram(&epoch.samples)?;
            trials.push(downsample_time(&spec, self.factor)?.rows);
        }
        self.cache[side][idx] = Some(trials);
        Ok(())
    }

    /// One feature row per trial for the given left/right pairing.
    fn rows(&mut self, pair: (usize, usize)) -> Result<Vec<Vec<f64>>> {
        if pair.0 >= 3 || pair.1 >= 3 {
            return Err(Error::Config(format!(
                "pair indices must be below 3, got ({}, {})",
                pair.0, pair.1
            )));
        }
        self.ensure(0, pair.0)?;
        self.ensure(1, pair.1)?;
        let left = self.cache[0][pair.0].as_ref().expect("just computed");
        let right = self.cache[1][pair.1].as_ref().expect("just computed");
        let mut rows = Vec::with_capacity(left.len());
        for (l, r) in left.iter().zip(right.iter()) {
            rows.push(assemble_pair_features(l, r)?);
        }
        Ok(rows)
    }
}

/// Train on the given fold and classify one held-out row.
fn train_predict(
    cfg: &PipelineConfig,
    global: Option<&PcaModel>,
    train_rows: &[Vec<f64>],
    train_labels: &[Label],
    test_row: &[f64],
) -> Result<Label> {
    let fitted;
    let projection = match global {
        Some(model) => model,
        None => {
            fitted = pca_fit(train_rows, cfg.pca_fraction)?;
            &fitted
        }
    };
    let reduced = projection.transform_rows(train_rows)?;
    let test = projection.transform(test_row)?;
    let train_cfg = TrainConfig {
        c: cfg.c,
        p: cfg.p,
        kernel_bank: cfg.classifier.kernel_bank(&reduced),
        kkt_tol: cfg.kkt_tol,
        d_tol: cfg.d_tol,
        max_outer_iters: cfg.max_outer_iters,
    };
    let model = multiclass_train(&reduced, train_labels, &train_cfg)?;
    model.predict(&test)
}

/// Leave-one-out over the given feature rows with per-fold refitting.
fn evaluate_rows(
    rows: &[Vec<f64>],
    labels: &[Label],
    cfg: &PipelineConfig,
) -> Result<ConfusionMatrix> {
    let global = if cfg.global_pca {
        Some(pca_fit(rows, cfg.pca_fraction)?)
    } else {
        None
    };
    loocv(rows, labels, |train_rows, train_labels, test_row| {
        train_predict(cfg, global.as_ref(), train_rows, train_labels, test_row)
    })
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineOutput {
    pub report: EvalReport,
    pub sync: SyncReport,
    /// The pair the confusion matrix belongs to.
    pub pair: (usize, usize),
    /// Derived-channel names of that pair, e.g. `("L1-L2", "R0-R1")`.
    pub pair_names: (String, String),
    pub n_trials: usize,
    /// Length of one raw feature row before PCA.
    pub feature_dims: usize,
    /// Digest of the settings that produced this output.
    pub config_digest: u64,
}

/// Run the full pipeline on one recording.
pub fn run(rec: &Recording, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let Prepared { bipolar, sync } = prepare(rec, cfg)?;
    let mut feats = PairFeatures::new(&bipolar, &rec.events, cfg)?;
    let pair = match cfg.pair {
        PairMode::Auto | PairMode::All => sync.selected,
        PairMode::Fixed { left, right } => (left, right),
    };
    let rows = feats.rows(pair)?;
    let labels = feats.labels.clone();
    let feature_dims = rows.first().map_or(0, Vec::len);
    let mut report = EvalReport::new(evaluate_rows(&rows, &labels, cfg)?)?;
    if cfg.pair == PairMode::All {
        let main_accuracy = report.accuracy_pct;
        let per_pair = per_pair_sweep(sync.selected, |l, r| {
            if (l, r) == pair {
                return Ok(main_accuracy);
            }
            let rows = feats.rows((l, r))?;
            Ok(evaluate_rows(&rows, &labels, cfg)?.accuracy_pct())
        })?;
        report = report.with_per_pair(per_pair);
    }
    Ok(PipelineOutput {
        report,
        pair_names: (
            bipolar.left_names[pair.0].clone(),
            bipolar.right_names[pair.1].clone(),
        ),
        sync,
        pair,
        n_trials: labels.len(),
        feature_dims,
        config_digest: cfg.digest(),
    })
}
