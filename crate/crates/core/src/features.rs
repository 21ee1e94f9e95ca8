//! Beta-band Morlet spectrograms and trial feature vectors.
//!
//! Each epoch of the selected pair is convolved with a bank of complex
//! Morlet wavelets (one per beta-band frequency, 13-30 Hz by default),
//! magnitudes are taken, the time axis is block-averaged down by a factor
//! of 100, and the left and right spectrograms are flattened and
//! concatenated into one vector per trial.
//!
//! The wavelet at center frequency `f` has Gaussian time spread
//! `sigma_t = cycles / (2 pi f)`, support truncated at 4 sigma, and unit
//! discrete energy, so magnitudes are comparable across frequencies.
//! Convolution runs in the frequency domain over a buffer reflect-padded by
//! the widest kernel's half-width; because reflect padding only has to be
//! valid where a kernel can reach, padding once by the maximum half-width
//! produces exactly the per-frequency padded result.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

use crate::fft::{next_pow2, Complex64, Fft};
use crate::math;
use crate::preprocess::Epoch;
use crate::recording::Label;
use crate::{Error, Result};

/// Spectrogram parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrogramConfig {
    /// Analysis frequencies in Hz, ascending, inside the 13-30 Hz beta band.
    pub freqs_hz: Vec<f64>,
    /// Wavelet width in carrier cycles; larger trades time resolution for
    /// frequency resolution.
    pub wavelet_cycles: f64,
    /// Fixed true: features are coefficient magnitudes.
    pub use_magnitude: bool,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        SpectrogramConfig {
            freqs_hz: (13..=30).map(|f| f as f64).collect(),
            wavelet_cycles: 6.0,
            use_magnitude: true,
        }
    }
}

impl SpectrogramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.freqs_hz.is_empty() {
            return Err(Error::Config("frequency grid is empty".into()));
        }
        for w in self.freqs_hz.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Config("frequency grid must be strictly ascending".into()));
            }
        }
        for &f in &self.freqs_hz {
            if !(f.is_finite() && (13.0..=30.0).contains(&f)) {
                return Err(Error::Config(format!(
                    "analysis frequency {f} Hz is outside the 13-30 Hz beta band"
                )));
            }
        }
        if !(self.wavelet_cycles.is_finite() && self.wavelet_cycles >= 3.0) {
            return Err(Error::Config(format!(
                "wavelet_cycles must be at least 3, got {}",
                self.wavelet_cycles
            )));
        }
        if !self.use_magnitude {
            return Err(Error::Config(
                "only magnitude spectrograms are supported (use_magnitude must stay true)".into(),
            ));
        }
        Ok(())
    }
}

/// Precomputed wavelet bank for epochs of one fixed length.
///
/// Holds the FFT plan, the padded-buffer layout, and each wavelet's
/// spectrum, so successive epochs cost one forward and `n_freqs` inverse
/// transforms and nothing else.
pub struct MorletPlan {
    epoch_len: usize,
    sample_rate_hz: f64,
    freqs_hz: Vec<f64>,
    half_widths: Vec<usize>,
    max_half_width: usize,
    fft: Fft,
    kernel_spectra: Vec<Vec<Complex64>>,
    signal_spec: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl MorletPlan {
    pub fn new(epoch_len: usize, cfg: &SpectrogramConfig, sample_rate_hz: f64) -> Result<MorletPlan> {
        cfg.validate()?;
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(&f) = cfg.freqs_hz.iter().find(|&&f| f >= sample_rate_hz / 2.0) {
            return Err(Error::Config(format!(
                "analysis frequency {f} Hz is at or above Nyquist ({} Hz)",
                sample_rate_hz / 2.0
            )));
        }
        // Build each unit-energy wavelet: Gaussian envelope of width sigma_t
        // truncated at 4 sigma, complex carrier at the center frequency.
        let mut kernels: Vec<Vec<Complex64>> = Vec::with_capacity(cfg.freqs_hz.len());
        let mut half_widths = Vec::with_capacity(cfg.freqs_hz.len());
        for &f in &cfg.freqs_hz {
            let sigma_t = cfg.wavelet_cycles / (math::TAU * f);
            let hw = math::ceil(4.0 * sigma_t * sample_rate_hz) as usize;
            let mut kernel = Vec::with_capacity(2 * hw + 1);
            let mut energy = 0.0;
            for k in -(hw as isize)..=(hw as isize) {
                let t = k as f64 / sample_rate_hz;
                let env = math::exp(-t * t / (2.0 * sigma_t * sigma_t));
                let angle = math::TAU * f * t;
                kernel.push(Complex::new(env * math::cos(angle), env * math::sin(angle)));
                energy += env * env;
            }
            let scale = 1.0 / math::sqrt(energy);
            for v in kernel.iter_mut() {
                *v *= scale;
            }
            half_widths.push(hw);
            kernels.push(kernel);
        }
        let max_half_width = *half_widths.iter().max().unwrap();
        if max_half_width >= epoch_len {
            return Err(Error::Shape(format!(
                "epoch of {epoch_len} samples is shorter than the widest wavelet support \
                 ({} samples half-width)",
                max_half_width
            )));
        }
        let padded_len = epoch_len + 2 * max_half_width;
        let widest = 2 * max_half_width + 1;
        let fft_len = next_pow2(padded_len + widest - 1);
        let mut fft = Fft::new(fft_len);
        let kernel_spectra = kernels
            .into_iter()
            .map(|kernel| {
                let mut spec = vec![Complex::new(0.0, 0.0); fft_len];
                for (i, v) in kernel.into_iter().enumerate() {
                    spec[i] = v;
                }
                fft.forward(&mut spec);
                spec
            })
            .collect();
        Ok(MorletPlan {
            epoch_len,
            sample_rate_hz,
            freqs_hz: cfg.freqs_hz.clone(),
            half_widths,
            max_half_width,
            fft,
            kernel_spectra,
            signal_spec: vec![Complex::new(0.0, 0.0); fft_len],
            work: vec![Complex::new(0.0, 0.0); fft_len],
        })
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Magnitude spectrogram of one epoch: rows follow the frequency grid,
    /// columns are the epoch's samples.
    pub fn spectrogram(&mut self, samples: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.epoch_len;
        if samples.len() != n {
            return Err(Error::Shape(format!(
                "epoch has {} samples but the plan was built for {n}",
                samples.len()
            )));
        }
        let pad = self.max_half_width;
        self.signal_spec.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        for i in 0..pad {
            self.signal_spec[i] = Complex::new(samples[pad - i], 0.0);
        }
        for (i, &v) in samples.iter().enumerate() {
            self.signal_spec[pad + i] = Complex::new(v, 0.0);
        }
        for j in 0..pad {
            self.signal_spec[pad + n + j] = Complex::new(samples[n - 2 - j], 0.0);
        }
        self.fft.forward(&mut self.signal_spec);

        let mut rows = Vec::with_capacity(self.freqs_hz.len());
        for (kernel_spec, &hw) in self.kernel_spectra.iter().zip(&self.half_widths) {
            for ((w, s), k) in self.work.iter_mut().zip(&self.signal_spec).zip(kernel_spec) {
                *w = s * k;
            }
            self.fft.inverse(&mut self.work);
            // Sample t of the centered convolution sits at full-convolution
            // index t + pad + hw (kernel center offset plus padding offset).
            let offset = pad + hw;
            let row: Vec<f64> = (0..n)
                .map(|t| {
                    let c = self.work[t + offset];
                    math::hypot(c.re, c.im)
                })
                .collect();
            rows.push(row);
        }
        Ok(rows)
    }
}

/// One-shot [`MorletPlan::spectrogram`] for a single epoch.
pub fn morlet_spectrogram(
    epoch: &Epoch,
    cfg: &SpectrogramConfig,
    sample_rate_hz: f64,
) -> Result<Vec<Vec<f64>>> {
    MorletPlan::new(epoch.samples.len(), cfg, sample_rate_hz)?.spectrogram(&epoch.samples)
}

/// Result of time-axis block averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct Downsampled {
    pub rows: Vec<Vec<f64>>,
    /// Trailing samples per row that did not fill a block and were dropped;
    /// zero when the factor divides the time length.
    pub dropped_samples: usize,
}

/// Collapse each row's time axis by averaging blocks of `factor` cells.
///
/// A trailing partial block is dropped (reported in
/// [`Downsampled::dropped_samples`] so callers can warn).
pub fn downsample_time(rows: &[Vec<f64>], factor: usize) -> Result<Downsampled> {
    if factor < 1 {
        return Err(Error::Config("downsampling factor must be at least 1".into()));
    }
    let Some(first) = rows.first() else {
        return Ok(Downsampled { rows: Vec::new(), dropped_samples: 0 });
    };
    let time_len = first.len();
    if rows.iter().any(|r| r.len() != time_len) {
        return Err(Error::Shape("spectrogram rows differ in length".into()));
    }
    let out_len = time_len / factor;
    if out_len == 0 {
        return Err(Error::Shape(format!(
            "factor {factor} exceeds the time axis ({time_len} samples)"
        )));
    }
    let out_rows = rows
        .iter()
        .map(|row| {
            (0..out_len)
                .map(|b| {
                    let block = &row[b * factor..(b + 1) * factor];
                    block.iter().sum::<f64>() / factor as f64
                })
                .collect()
        })
        .collect();
    Ok(Downsampled {
        rows: out_rows,
        dropped_samples: time_len - out_len * factor,
    })
}

/// Concatenate two equal-shape spectrograms into one trial vector:
/// `[flatten(left), flatten(right)]`, frequency-major within each half.
pub fn assemble_pair_features(left: &[Vec<f64>], right: &[Vec<f64>]) -> Result<Vec<f64>> {
    if left.len() != right.len() {
        return Err(Error::Shape(format!(
            "spectrograms have {} vs {} frequency rows",
            left.len(),
            right.len()
        )));
    }
    for (l, r) in left.iter().zip(right) {
        if l.len() != r.len() {
            return Err(Error::Shape("spectrogram rows differ in length".into()));
        }
    }
    let mut out = Vec::with_capacity(2 * left.len() * left.first().map_or(0, Vec::len));
    for row in left.iter().chain(right) {
        out.extend_from_slice(row);
    }
    Ok(out)
}

/// Classifier-ready trial vectors with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// One vector per trial, all equal length.
    pub rows: Vec<Vec<f64>>,
    /// Class per trial, parallel to `rows`.
    pub labels: Vec<Label>,
    /// (left, right) bipolar channel indices the features came from.
    pub pair: (usize, usize),
    /// Digest of every parameter that shaped these vectors.
    pub config_digest: u64,
    /// Trailing spectrogram samples dropped by downsampling, per epoch row.
    pub dropped_samples: usize,
}

impl FeatureMatrix {
    pub fn n_trials(&self) -> usize {
        self.rows.len()
    }

    pub fn dims(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// FNV-1a over the parameters that define a feature extraction.
fn config_digest(
    cfg: &SpectrogramConfig,
    factor: usize,
    sample_rate_hz: f64,
    pair: (usize, usize),
    epoch_len: usize,
) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |word: u64| {
        for byte in word.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(cfg.freqs_hz.len() as u64);
    for &f in &cfg.freqs_hz {
        eat(f.to_bits());
    }
    eat(cfg.wavelet_cycles.to_bits());
    eat(factor as u64);
    eat(sample_rate_hz.to_bits());
    eat(pair.0 as u64);
    eat(pair.1 as u64);
    eat(epoch_len as u64);
    h
}

/// Build the feature matrix for one left/right epoch pairing.
///
/// `left` and `right` must hold the same events in the same order (same
/// labels, same onsets): they are the two channels of one selected pair.
pub fn build_feature_matrix(
    left: &[Epoch],
    right: &[Epoch],
    cfg: &SpectrogramConfig,
    sample_rate_hz: f64,
    downsample_factor: usize,
    pair: (usize, usize),
) -> Result<FeatureMatrix> {
    if left.len() != right.len() {
        return Err(Error::Shape(format!(
            "left and right carry different trial counts ({} vs {})",
            left.len(),
            right.len()
        )));
    }
    if left.is_empty() {
        return Err(Error::Shape("no epochs to featurize".into()));
    }
    let epoch_len = left[0].samples.len();
    for ep in left.iter().chain(right) {
        if ep.samples.len() != epoch_len {
            return Err(Error::Shape("epochs differ in length".into()));
        }
    }
    for (l, r) in left.iter().zip(right) {
        if l.label != r.label || l.onset_sample != r.onset_sample {
            return Err(Error::Integrity(
                "left/right epochs disagree on events; both sides must come from one event list"
                    .into(),
            ));
        }
    }
    let mut plan = MorletPlan::new(epoch_len, cfg, sample_rate_hz)?;
    let mut rows = Vec::with_capacity(left.len());
    let mut labels = Vec::with_capacity(left.len());
    let mut dropped = 0;
    for (l, r) in left.iter().zip(right) {
        let sl = downsample_time(&plan.spectrogram(&l.samples)?, downsample_factor)?;
        let sr = downsample_time(&plan.spectrogram(&r.samples)?, downsample_factor)?;
        dropped = sl.dropped_samples;
        rows.push(assemble_pair_features(&sl.rows, &sr.rows)?);
        labels.push(l.label);
    }
    Ok(FeatureMatrix {
        rows,
        labels,
        pair,
        config_digest: config_digest(cfg, downsample_factor, sample_rate_hz, pair, epoch_len),
        dropped_samples: dropped,
    })
}
