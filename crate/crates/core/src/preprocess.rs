//! Bipolar re-referencing, zero-phase bandpass filtering, epoching.
//!
//! Recordings arrive as four monopolar contacts per electrode. Subtracting
//! adjacent contacts (0-1, 1-2, 2-3) rejects the shared reference and
//! far-field activity, leaving three bipolar channels per side. Those are
//! bandpass filtered once, full length, before any epoch is cut, so filter
//! transients never land inside an analysis window.
//!
//! The filter is a linear-phase Hamming windowed-sinc FIR applied through
//! FFT convolution over a reflect-padded buffer; cropping at the kernel's
//! group delay makes the overall operation zero-phase, which matters
//! because everything downstream reasons about phase.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

use crate::fft::{next_pow2, Complex64, Fft};
use crate::math;
use crate::recording::{EventMarker, Label, Recording};
use crate::{Error, Result};

/// Three bipolar channels per hemisphere, derived from adjacent contacts.
#[derive(Debug, Clone, PartialEq)]
pub struct BipolarSet {
    pub sample_rate_hz: f64,
    pub left: [Vec<f64>; 3],
    pub right: [Vec<f64>; 3],
    /// Derived-channel names, `"<contact>-<contact>"`.
    pub left_names: [String; 3],
    pub right_names: [String; 3],
}

impl BipolarSet {
    pub fn len_samples(&self) -> usize {
        self.left[0].len()
    }

    /// Channel `idx` (0..3) of the given hemisphere; `left` selects the side.
    pub fn channel(&self, left: bool, idx: usize) -> &[f64] {
        if left {
            &self.left[idx]
        } else {
            &self.right[idx]
        }
    }
}

/// Subtract adjacent contacts of one side: output k = contact[k] - contact[k+1].
pub fn bipolar_channels(contacts: &[&[f64]; 4]) -> Result<[Vec<f64>; 3]> {
    let n = contacts[0].len();
    if contacts.iter().any(|c| c.len() != n) {
        return Err(Error::Shape("contact signals differ in length".into()));
    }
    let derive = |k: usize| {
        contacts[k]
            .iter()
            .zip(contacts[k + 1])
            .map(|(a, b)| a - b)
            .collect::<Vec<f64>>()
    };
    Ok([derive(0), derive(1), derive(2)])
}

/// Re-reference an eight-channel recording (four contacts per hemisphere,
/// left first) into a [`BipolarSet`].
pub fn bipolar_rereference(rec: &Recording) -> Result<BipolarSet> {
    let (left_contacts, right_contacts) = rec.contact_stacks()?;
    let name = |i: usize, k: usize| format!("{}-{}", rec.channel_names[i + k], rec.channel_names[i + k + 1]);
    Ok(BipolarSet {
        sample_rate_hz: rec.sample_rate_hz,
        left: bipolar_channels(&left_contacts)?,
        right: bipolar_channels(&right_contacts)?,
        left_names: [name(0, 0), name(0, 1), name(0, 2)],
        right_names: [name(4, 0), name(4, 1), name(4, 2)],
    })
}

/// A designed linear-phase FIR bandpass kernel.
///
/// The transition band is `lo_hz / 2` wide, centered so the low transition
/// fits entirely inside `[lo_hz/2, lo_hz]`; the Hamming stopband (~53 dB)
/// then guarantees at least 40 dB of attenuation one octave outside the
/// band on both sides. Tap count follows the usual `3.3 / (transition
/// width)` rule, rounded up to odd so the kernel has an exact center.
#[derive(Debug, Clone)]
pub struct BandpassFilter {
    taps: Vec<f64>,
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub sample_rate_hz: f64,
}

impl BandpassFilter {
    pub fn design(lo_hz: f64, hi_hz: f64, sample_rate_hz: f64) -> Result<BandpassFilter> {
        if !(lo_hz.is_finite() && hi_hz.is_finite() && sample_rate_hz.is_finite()) {
            return Err(Error::Config("filter band must be finite".into()));
        }
        if !(0.0 < lo_hz && lo_hz < hi_hz && hi_hz < sample_rate_hz / 2.0) {
            return Err(Error::Config(format!(
                "band ({lo_hz}, {hi_hz}) Hz must satisfy 0 < lo < hi < Nyquist ({} Hz)",
                sample_rate_hz / 2.0
            )));
        }
        let transition = lo_hz / 2.0;
        let lo_cut = lo_hz - transition / 2.0;
        let hi_cut = hi_hz + transition / 2.0;
        if hi_cut >= sample_rate_hz / 2.0 {
            return Err(Error::Config(format!(
                "high cutoff {hi_cut} Hz leaves no room below Nyquist for the transition band"
            )));
        }
        let mut n = math::ceil(3.3 * sample_rate_hz / transition) as usize;
        if n % 2 == 0 {
            n += 1;
        }
        let mid = (n - 1) as f64 / 2.0;
        let sinc = |x: f64| {
            if x == 0.0 {
                1.0
            } else {
                math::sin(math::PI * x) / (math::PI * x)
            }
        };
        // Compute one half and mirror it so the kernel is exactly symmetric
        // (mirrored trig arguments are not bit-identical otherwise).
        let mut taps = vec![0.0; n];
        for k in 0..=(n - 1) / 2 {
            let t = k as f64 - mid;
            let lp_hi = 2.0 * hi_cut / sample_rate_hz * sinc(2.0 * hi_cut * t / sample_rate_hz);
            let lp_lo = 2.0 * lo_cut / sample_rate_hz * sinc(2.0 * lo_cut * t / sample_rate_hz);
            let window = 0.54 - 0.46 * math::cos(math::TAU * k as f64 / (n - 1) as f64);
            let h = (lp_hi - lp_lo) * window;
            taps[k] = h;
            taps[n - 1 - k] = h;
        }
        Ok(BandpassFilter {
            taps,
            lo_hz,
            hi_hz,
            sample_rate_hz,
        })
    }

    /// Kernel length in taps (odd).
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Filter one signal; output has the input's length and zero phase lag.
    pub fn apply(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.apply_many(core::slice::from_ref(&signal))?;
        Ok(out.pop().unwrap())
    }

    /// Filter several equal-length signals, reusing one FFT plan and one
    /// kernel spectrum across all of them.
    ///
    /// Each signal is reflect-padded by half the kernel length, convolved in
    /// the frequency domain, and cropped at the kernel center, so the result
    /// is the zero-phase "same" convolution with reflected edges.
    pub fn apply_many<S: AsRef<[f64]>>(&self, signals: &[S]) -> Result<Vec<Vec<f64>>> {
        let Some(first) = signals.first() else {
            return Ok(Vec::new());
        };
        let n = first.as_ref().len();
        let t = self.taps.len();
        if n <= t {
            return Err(Error::Shape(format!(
                "signal ({n} samples) must be longer than the filter ({t} taps)"
            )));
        }
        let half = (t - 1) / 2;
        let padded_len = n + 2 * half;
        let m = next_pow2(padded_len + t - 1);
        let mut plan = Fft::new(m);

        let mut kernel_spec = vec![Complex::new(0.0, 0.0); m];
        for (k, &h) in self.taps.iter().enumerate() {
            kernel_spec[k] = Complex::new(h, 0.0);
        }
        plan.forward(&mut kernel_spec);

        let mut out = Vec::with_capacity(signals.len());
        let mut buf: Vec<Complex64> = vec![Complex::new(0.0, 0.0); m];
        for signal in signals {
            let x = signal.as_ref();
            if x.len() != n {
                return Err(Error::Shape("signals differ in length".into()));
            }
            buf.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
            for i in 0..half {
                buf[i] = Complex::new(x[half - i], 0.0);
            }
            for (i, &v) in x.iter().enumerate() {
                buf[half + i] = Complex::new(v, 0.0);
            }
            for j in 0..half {
                buf[half + n + j] = Complex::new(x[n - 2 - j], 0.0);
            }
            plan.forward(&mut buf);
            for (v, k) in buf.iter_mut().zip(&kernel_spec) {
                *v *= k;
            }
            plan.inverse(&mut buf);
            // Full convolution index (t-1) aligns the kernel center with
            // sample 0 of the original signal: the group-delay compensation.
            out.push(buf[t - 1..t - 1 + n].iter().map(|c| c.re).collect());
        }
        Ok(out)
    }
}

/// One analysis window cut around an event onset.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub samples: Vec<f64>,
    pub label: Label,
    pub onset_sample: usize,
}

/// Cut `[onset - pre_s*fs, onset + post_s*fs)` windows around each event.
///
/// Windows are half-open so their length is exactly
/// `round(pre_s*fs) + round(post_s*fs)` samples. Event order is preserved
/// and labels are copied through untouched.
pub fn extract_epochs(
    signal: &[f64],
    events: &[EventMarker],
    pre_s: f64,
    post_s: f64,
    sample_rate_hz: f64,
) -> Result<Vec<Epoch>> {
    if !(pre_s.is_finite() && post_s.is_finite() && pre_s >= 0.0 && post_s >= 0.0) {
        return Err(Error::Config(format!(
            "window extents must be non-negative, got ({pre_s}, {post_s}) s"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let n_pre = math::round(pre_s * sample_rate_hz) as usize;
    let n_post = math::round(post_s * sample_rate_hz) as usize;
    if n_pre + n_post == 0 {
        return Err(Error::Config("epoch window is empty".into()));
    }
    let mut epochs = Vec::with_capacity(events.len());
    for (i, ev) in events.iter().enumerate() {
        if ev.onset_sample < n_pre || ev.onset_sample + n_post > signal.len() {
            return Err(Error::Boundary(format!(
                "event {i} ({} at sample {}) needs {n_pre} samples before and {n_post} after, \
                 but the signal holds {}",
                ev.label,
                ev.onset_sample,
                signal.len()
            )));
        }
        epochs.push(Epoch {
            samples: signal[ev.onset_sample - n_pre..ev.onset_sample + n_post].to_vec(),
            label: ev.label,
            onset_sample: ev.onset_sample,
        });
    }
    Ok(epochs)
}
