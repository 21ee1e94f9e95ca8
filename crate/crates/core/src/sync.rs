//! FFT-based phase synchronization between channel pairs.
//!
//! Every signal is expanded into real Fourier coefficients: at bin `n`,
//!
//! ```text
//! a_n = (2/N) sum_t x_t cos(2 pi n t / N)
//! b_n = (2/N) sum_t x_t sin(2 pi n t / N)
//! ```
//!
//! so the bin's phase is `atan2(b_n, a_n)`. For two signals `i` and `j` the
//! per-bin phase lag is computed without any explicit arctangent:
//!
//! ```text
//! PL(n) = | (a_in b_jn - b_in a_jn) / (a_in a_jn + b_in b_jn) |
//! ```
//!
//! which equals `|tan(theta_in - theta_jn)|`. A pair that stays in lockstep
//! across frequencies produces a flat lag profile, so synchronization is
//! scored from the first differences of the lag series over the retained
//! in-band bins, `E(n) = |PL(n) - PL(n+1)|`:
//!
//! ```text
//! sync = 1 / (1 + mean(E) + std(E))
//! ```
//!
//! with the population standard deviation. The score lies in `(0, 1]` and
//! reaches exactly 1 for identical (or constant-phase-shifted) signals.
//!
//! # Bin retention
//!
//! DC and (for even N) the Nyquist bin carry no phase and never participate.
//! Within the analysis band a bin is skipped when either signal has
//! negligible energy there (magnitude below [`MAG_EPS`] times that
//! spectrum's maximum bin magnitude) or when the lag denominator is too
//! small to be trustworthy (below [`DEN_EPS`] times the magnitude of its
//! constituent products, cushioned by [`MAG_EPS`]). Both rules exist so
//! that near-empty or near-quadrature bins cannot inject arbitrarily large
//! tangents into the statistics; at least two bins must survive or the
//! measure is refused as degenerate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

use crate::fft::{Complex64, Fft};
use crate::math;
use crate::{Error, Result};

/// Relative magnitude floor: a bin participates only if both spectra carry
/// at least this fraction of their own peak bin magnitude there.
pub const MAG_EPS: f64 = 1e-8;

/// Relative denominator floor for the phase-lag ratio.
pub const DEN_EPS: f64 = 1e-10;

/// One real-signal Fourier bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBin {
    /// Cosine coefficient a_n.
    pub a: f64,
    /// Sine coefficient b_n.
    pub b: f64,
    pub freq_hz: f64,
}

impl SpectralBin {
    pub fn magnitude(&self) -> f64 {
        math::hypot(self.a, self.b)
    }

    pub fn phase(&self) -> f64 {
        math::atan2(self.b, self.a)
    }
}

/// Real-signal spectrum: bins 0 ..= N/2 of an N-sample signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub bins: Vec<SpectralBin>,
}

impl Spectrum {
    /// Number of stored bins (DC through Nyquist inclusive for even N).
    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    /// Index one past the last phase-carrying bin: the Nyquist bin of an
    /// even-length signal is excluded, everything after DC otherwise.
    pub fn eligible_end(&self) -> usize {
        if self.n_samples % 2 == 0 {
            self.n_bins() - 1
        } else {
            self.n_bins()
        }
    }

    /// Largest bin magnitude among phase-carrying bins.
    pub fn max_eligible_magnitude(&self) -> f64 {
        self.bins[1..self.eligible_end()]
            .iter()
            .map(SpectralBin::magnitude)
            .fold(0.0, f64::max)
    }

    /// Frequency resolution in Hz per bin.
    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.n_samples as f64
    }
}

/// Expand a real signal into cosine/sine coefficients.
///
/// Runs in O(N log N) for any length, including primes.
pub fn dft(signal: &[f64], sample_rate_hz: f64) -> Result<Spectrum> {
    let mut plan = Fft::new(signal.len().max(1));
    dft_with_plan(signal, sample_rate_hz, &mut plan)
}

/// [`dft`] with a caller-owned plan, for transforming many equal-length
/// signals without re-deriving twiddles.
pub fn dft_with_plan(signal: &[f64], sample_rate_hz: f64, plan: &mut Fft) -> Result<Spectrum> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::Shape(format!(
            "spectrum needs at least 2 samples, got {n}"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    if plan.len() != n {
        return Err(Error::Shape(format!(
            "plan length {} does not match signal length {n}",
            plan.len()
        )));
    }
    if let Some(pos) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::Integrity(format!(
            "non-finite sample at index {pos}"
        )));
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    let scale = 2.0 / n as f64;
    let bin_width = sample_rate_hz / n as f64;
    let n_bins = n / 2 + 1;
    let bins = (0..n_bins)
        .map(|k| SpectralBin {
            a: buf[k].re * scale,
            b: -buf[k].im * scale,
            freq_hz: k as f64 * bin_width,
        })
        .collect();
    Ok(Spectrum {
        n_samples: n,
        sample_rate_hz,
        bins,
    })
}

/// Resynthesize the time-domain signal from its coefficients.
///
/// Inverse of [`dft`] up to floating-point rounding:
/// `x_t = a_0/2 + sum_n (a_n cos + b_n sin) + (a_{N/2}/2) cos(pi t)` for
/// even N. Direct O(N * bins) evaluation, intended for tests and small
/// buffers rather than bulk processing.
pub fn reconstruct(spectrum: &Spectrum) -> Vec<f64> {
    let n = spectrum.n_samples;
    let mut out = vec![0.0; n];
    for (k, bin) in spectrum.bins.iter().enumerate() {
        let weight = if k == 0 || (n % 2 == 0 && k == spectrum.n_bins() - 1) {
            0.5
        } else {
            1.0
        };
        let step = math::TAU * k as f64 / n as f64;
        for (t, v) in out.iter_mut().enumerate() {
            let angle = step * t as f64;
            *v += weight * (bin.a * math::cos(angle) + bin.b * math::sin(angle));
        }
    }
    out
}

/// Why a bin was left out of the lag series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SkipReason {
    /// One of the spectra has (relatively) no energy at this bin.
    LowMagnitude,
    /// The lag denominator is too close to zero for a stable tangent.
    UnstableDenominator,
}

/// Outcome of evaluating one bin of a spectrum pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseLagBin {
    Retained(f64),
    Skipped(SkipReason),
}

fn check_compatible(x: &Spectrum, y: &Spectrum) -> Result<()> {
    if x.n_samples != y.n_samples {
        return Err(Error::Shape(format!(
            "spectra cover different lengths ({} vs {} samples)",
            x.n_samples, y.n_samples
        )));
    }
    if x.sample_rate_hz != y.sample_rate_hz {
        return Err(Error::Shape(format!(
            "spectra have different sample rates ({} vs {} Hz)",
            x.sample_rate_hz, y.sample_rate_hz
        )));
    }
    Ok(())
}

fn lag_at_bin(
    xb: &SpectralBin,
    yb: &SpectralBin,
    x_floor: f64,
    y_floor: f64,
) -> PhaseLagBin {
    if xb.magnitude() < x_floor || yb.magnitude() < y_floor {
        return PhaseLagBin::Skipped(SkipReason::LowMagnitude);
    }
    let num = xb.a * yb.b - xb.b * yb.a;
    let den = xb.a * yb.a + xb.b * yb.b;
    let guard = DEN_EPS * (math::abs(xb.a * yb.a) + math::abs(xb.b * yb.b) + MAG_EPS);
    if math::abs(den) < guard {
        return PhaseLagBin::Skipped(SkipReason::UnstableDenominator);
    }
    PhaseLagBin::Retained(math::abs(num / den))
}

/// Phase lag of one bin of a spectrum pair, `|tan(theta_x - theta_y)|`,
/// or the reason the bin is unusable.
///
/// `bin` must be a phase-carrying index: not DC, not the Nyquist bin of an
/// even-length signal, and within range.
pub fn phase_lag(x: &Spectrum, y: &Spectrum, bin: usize) -> Result<PhaseLagBin> {
    check_compatible(x, y)?;
    if bin == 0 || bin >= x.eligible_end() {
        return Err(Error::Shape(format!(
            "bin {bin} does not carry phase (valid range is 1..{})",
            x.eligible_end()
        )));
    }
    Ok(lag_at_bin(
        &x.bins[bin],
        &y.bins[bin],
        MAG_EPS * x.max_eligible_magnitude(),
        MAG_EPS * y.max_eligible_magnitude(),
    ))
}

/// Per-bin lag profile of a spectrum pair over an analysis band.
#[derive(Debug, Clone, PartialEq)]
pub struct LagSeries {
    /// Retained bin indices, ascending.
    pub bins: Vec<usize>,
    /// Center frequency of each retained bin.
    pub freq_hz: Vec<f64>,
    /// `|tan(delta theta)|` per retained bin.
    pub lag: Vec<f64>,
    /// First differences `|lag[k] - lag[k+1]|`; one shorter than `lag`.
    pub delta: Vec<f64>,
    /// In-band bins that were left out, with reasons.
    pub skipped: Vec<(usize, SkipReason)>,
}

/// A synchronization score plus the lag series it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncScore {
    /// `1 / (1 + mean(delta) + std(delta))`, in `(0, 1]`.
    pub score: f64,
    pub lags: LagSeries,
}

fn validate_band(band_hz: (f64, f64)) -> Result<()> {
    let (lo, hi) = band_hz;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(Error::Config(format!(
            "analysis band must satisfy 0 <= lo < hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

/// Synchronization of two already-transformed signals over `band_hz`
/// (inclusive bounds; the band is clamped to the Nyquist frequency).
pub fn sync_from_spectra(x: &Spectrum, y: &Spectrum, band_hz: (f64, f64)) -> Result<SyncScore> {
    check_compatible(x, y)?;
    validate_band(band_hz)?;
    let (lo, hi) = (band_hz.0, band_hz.1.min(x.sample_rate_hz / 2.0));
    let x_floor = MAG_EPS * x.max_eligible_magnitude();
    let y_floor = MAG_EPS * y.max_eligible_magnitude();

    let mut bins = Vec::new();
    let mut freq_hz = Vec::new();
    let mut lag = Vec::new();
    let mut skipped = Vec::new();
    for n in 1..x.eligible_end() {
        let f = x.bins[n].freq_hz;
        if f < lo || f > hi {
            continue;
        }
        match lag_at_bin(&x.bins[n], &y.bins[n], x_floor, y_floor) {
            PhaseLagBin::Retained(pl) => {
                bins.push(n);
                freq_hz.push(f);
                lag.push(pl);
            }
            PhaseLagBin::Skipped(reason) => skipped.push((n, reason)),
        }
    }
    if lag.len() < 2 {
        return Err(Error::DegenerateSpectrum(format!(
            "only {} usable bin(s) in {lo}-{hi} Hz; need at least 2",
            lag.len()
        )));
    }
    let delta: Vec<f64> = lag.windows(2).map(|w| math::abs(w[0] - w[1])).collect();
    let score = 1.0 / (1.0 + math::mean(&delta) + math::population_std(&delta));
    Ok(SyncScore {
        score,
        lags: LagSeries {
            bins,
            freq_hz,
            lag,
            delta,
            skipped,
        },
    })
}

/// Scale a signal to unit peak magnitude.
///
/// The phase-lag ratio is scale-free in exact arithmetic, but floating-point
/// rounding inside the transform is not. Dividing by the peak first maps a
/// gained copy `s * x` (whenever each product `s * x_t` is exact) onto
/// bitwise `+/- x / peak`, and sign flips commute exactly with every
/// operation downstream, so the score comes out bit-identical under channel
/// gain changes instead of merely close. An all-zero signal passes through
/// untouched and is rejected later for having no usable bins.
fn peak_normalized(signal: &[f64]) -> Vec<f64> {
    let mut peak: f64 = 0.0;
    for &v in signal {
        let m = math::abs(v);
        if m > peak {
            peak = m;
        }
    }
    if peak > 0.0 && peak.is_finite() {
        signal.iter().map(|&v| v / peak).collect()
    } else {
        signal.to_vec()
    }
}

/// Synchronization of two time-domain signals over `band_hz`.
///
/// Each signal is normalized to unit peak first, so per-channel gain (sign
/// included) cannot move the score; see [`peak_normalized`].
pub fn sync_measure(
    x: &[f64],
    y: &[f64],
    band_hz: (f64, f64),
    sample_rate_hz: f64,
) -> Result<SyncScore> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "signals differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let mut plan = Fft::new(x.len().max(1));
    let sx = dft_with_plan(&peak_normalized(x), sample_rate_hz, &mut plan)?;
    let sy = dft_with_plan(&peak_normalized(y), sample_rate_hz, &mut plan)?;
    sync_from_spectra(&sx, &sy, band_hz)
}

/// Pairwise synchronization of the three left against the three right
/// bipolar channels, and the selected (most synchronized) pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncReport {
    /// `matrix[l][r]` scores left channel `l` against right channel `r`.
    pub matrix: [[f64; 3]; 3],
    /// Indices of the highest-scoring pair; ties resolve to the smallest
    /// `(left, right)` in lexicographic order.
    pub selected: (usize, usize),
    /// Band actually analyzed (after clamping to Nyquist).
    pub band_hz: (f64, f64),
    /// In-band bins skipped per pair.
    pub skipped_bins: [[usize; 3]; 3],
}

/// Score every left/right bipolar channel pairing over `band_hz`.
///
/// All six channels must share one length and the band must leave at least
/// two usable bins in every pairing. Spectra are computed once per channel.
pub fn sync_matrix(
    left: &[Vec<f64>],
    right: &[Vec<f64>],
    band_hz: (f64, f64),
    sample_rate_hz: f64,
) -> Result<SyncReport> {
    if left.len() != 3 || right.len() != 3 {
        return Err(Error::Shape(format!(
            "expected 3 bipolar channels per side, got {} left and {} right",
            left.len(),
            right.len()
        )));
    }
    let n = left[0].len();
    for ch in left.iter().chain(right.iter()) {
        if ch.len() != n {
            return Err(Error::Shape(format!(
                "bipolar channels differ in length ({} vs {n})",
                ch.len()
            )));
        }
    }
    validate_band(band_hz)?;
    let mut plan = Fft::new(n.max(1));
    let left_spec: Vec<Spectrum> = left
        .iter()
        .map(|ch| dft_with_plan(&peak_normalized(ch), sample_rate_hz, &mut plan))
        .collect::<Result<_>>()?;
    let right_spec: Vec<Spectrum> = right
        .iter()
        .map(|ch| dft_with_plan(&peak_normalized(ch), sample_rate_hz, &mut plan))
        .collect::<Result<_>>()?;

    let mut matrix = [[0.0; 3]; 3];
    let mut skipped_bins = [[0usize; 3]; 3];
    let mut selected = (0, 0);
    let mut best = f64::NEG_INFINITY;
    for l in 0..3 {
        for r in 0..3 {
            let s = sync_from_spectra(&left_spec[l], &right_spec[r], band_hz)?;
            matrix[l][r] = s.score;
            skipped_bins[l][r] = s.lags.skipped.len();
            if s.score > best {
                best = s.score;
                selected = (l, r);
            }
        }
    }
    let hi = band_hz.1.min(sample_rate_hz / 2.0);
    Ok(SyncReport {
        matrix,
        selected,
        band_hz: (band_hz.0, hi),
        skipped_bins,
    })
}
