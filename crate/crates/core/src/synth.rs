//! Synthetic 8-contact recordings with a controllable coupled pair.
//!
//! The generator works backwards from the bipolar derivations the pipeline
//! will compute. It first draws the six bipolar target signals (three per
//! hemisphere), then integrates them into contact stacks: the deepest
//! contact on each side is a reference noise stream and each shallower
//! contact adds one bipolar target, so re-referencing recovers the targets
//! up to floating-point rounding.
//!
//! One left/right target pair is coupled: both carry the same beta-band
//! bursts (one Hann-windowed carrier per event, frequency set by the
//! event's class) and the same broadband waveform spanning 1-13 and
//! 30-100 Hz, scaled by `coupling_snr`, plus independent unit noise. The
//! shared broadband part is what makes the pair detectable by the
//! phase-synchronization measure across the whole band, while the bursts
//! make the classes separable; every other target is independent noise.
//! The broadband band deliberately excludes 13-30 Hz so the only
//! class-dependent energy in the analysis band comes from the bursts.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

use crate::fft::Fft;
use crate::math;
use crate::recording::{EventMarker, Label, Recording};
use crate::rng;
use crate::{Error, Result};

/// Contact-level sampling rate of generated recordings.
pub const SAMPLE_RATE_HZ: f64 = 4800.0;

/// Hard cap on generated length: 8 channels of doubles at this length is
/// about 1.3 GB, the most a test machine should ever be asked for.
const MAX_SAMPLES: usize = 20_000_000;

/// RNG stream layout (documented so other implementations can match):
/// 0 and 1 are the left and right reference contacts, 2-4 the left bipolar
/// target noises, 5-7 the right ones, 8 the broadband spectrum draws,
/// 9 the per-event carrier phases.
const STREAM_REF_LEFT: u64 = 0;
const STREAM_REF_RIGHT: u64 = 1;
const STREAM_TARGET_BASE: u64 = 2;
const STREAM_BROADBAND: u64 = 8;
const STREAM_PHASES: u64 = 9;

/// Recipe for one synthetic recording.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthConfig {
    pub n_trials_per_class: usize,
    pub seed: u64,
    /// (left bipolar index, right bipolar index), each 0..3, that share a
    /// source.
    pub coupled_pair: (usize, usize),
    /// Amplitude of the shared source relative to the unit noise floor.
    pub coupling_snr: f64,
    /// Burst carrier per class, in the 13-30 Hz band, class order
    /// BP, S, RS, AM, MM.
    pub beta_hz_per_class: [f64; 5],
    /// Seconds between consecutive event onsets.
    pub trial_spacing_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_trials_per_class: 10,
            seed: 0,
            coupled_pair: (2, 1),
            coupling_snr: 2.0,
            beta_hz_per_class: [13.5, 17.5, 21.5, 25.5, 29.5],
            trial_spacing_s: 2.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials_per_class == 0 {
            return Err(Error::Config("n_trials_per_class must be positive".into()));
        }
        if self.coupled_pair.0 > 2 || self.coupled_pair.1 > 2 {
            return Err(Error::Config(format!(
                "coupled_pair ({}, {}) must use bipolar indices 0..3",
                self.coupled_pair.0, self.coupled_pair.1
            )));
        }
        if !(self.coupling_snr.is_finite() && self.coupling_snr > 0.0) {
            return Err(Error::Config(format!(
                "coupling_snr must be positive, got {}",
                self.coupling_snr
            )));
        }
        for (i, &f) in self.beta_hz_per_class.iter().enumerate() {
            if !(f.is_finite() && (13.0..=30.0).contains(&f)) {
                return Err(Error::Config(format!(
                    "class {} carrier {f} Hz is outside the 13-30 Hz band",
                    Label::ALL[i]
                )));
            }
        }
        // Bursts span one second either side of an onset, so spacing below
        // two seconds would bleed each trial's carrier into its neighbors.
        if !(self.trial_spacing_s.is_finite() && self.trial_spacing_s >= 2.0) {
            return Err(Error::Config(format!(
                "trial_spacing_s must be at least 2.0, got {}",
                self.trial_spacing_s
            )));
        }
        let n_events = 5 * self.n_trials_per_class;
        let spacing = math::round(self.trial_spacing_s * SAMPLE_RATE_HZ) as usize;
        let total = spacing
            .checked_mul(n_events + 1)
            .filter(|&t| t <= MAX_SAMPLES);
        if total.is_none() {
            return Err(Error::Config(format!(
                "{n_events} events at {} s spacing exceed the {MAX_SAMPLES}-sample cap",
                self.trial_spacing_s
            )));
        }
        Ok(())
    }

    fn spacing_samples(&self) -> usize {
        math::round(self.trial_spacing_s * SAMPLE_RATE_HZ) as usize
    }

    fn n_events(&self) -> usize {
        5 * self.n_trials_per_class
    }

    fn total_samples(&self) -> usize {
        self.spacing_samples() * (self.n_events() + 1)
    }
}

/// Shared broadband waveform: unit-RMS noise whose spectrum covers 1-13
/// and 30-100 Hz, synthesized from seeded per-bin Gaussian draws.
fn broadband_waveform(seed: u64, len: usize) -> Vec<f64> {
    let mut spectrum = vec![Complex::new(0.0, 0.0); len];
    let bin_hz = SAMPLE_RATE_HZ / len as f64;
    for k in 1..len / 2 {
        let f = k as f64 * bin_hz;
        let in_band = (1.0..13.0).contains(&f) || (30.0 + 1e-12 < f && f <= 100.0);
        if !in_band {
            continue;
        }
        let re = rng::normal(seed, STREAM_BROADBAND, 2 * k as u64);
        let im = rng::normal(seed, STREAM_BROADBAND, 2 * k as u64 + 1);
        spectrum[k] = Complex::new(re, im);
        spectrum[len - k] = Complex::new(re, -im);
    }
    let mut fft = Fft::new(len);
    fft.inverse(&mut spectrum);
    let mut wave: Vec<f64> = spectrum.into_iter().map(|c| c.re).collect();
    let rms = math::sqrt(wave.iter().map(|v| v * v).sum::<f64>() / len as f64);
    if rms > 0.0 {
        for v in wave.iter_mut() {
            *v /= rms;
        }
    }
    wave
}

/// Add one Hann-windowed burst around `onset` to `target`.
fn add_burst(target: &mut [f64], onset: usize, carrier_hz: f64, phase: f64, amplitude: f64) {
    let half = SAMPLE_RATE_HZ as isize;
    for tau in -half..=half {
        let t = onset as isize + tau;
        if t < 0 || t as usize >= target.len() {
            continue;
        }
        let window = 0.5 * (1.0 + math::cos(math::PI * tau as f64 / half as f64));
        let angle = math::TAU * carrier_hz * tau as f64 / SAMPLE_RATE_HZ + phase;
        target[t as usize] += amplitude * window * math::cos(angle);
    }
}

/// Generate a contact-level recording per the config; a pure function of
/// the config, so equal configs give identical recordings.
pub fn synth_recording(cfg: &SynthConfig) -> Result<Recording> {
    cfg.validate()?;
    let len = cfg.total_samples();
    let spacing = cfg.spacing_samples();
    let n_events = cfg.n_events();

    let events: Vec<EventMarker> = (0..n_events)
        .map(|i| EventMarker {
            onset_sample: spacing * (i + 1),
            label: Label::ALL[i % 5],
        })
        .collect();

    // Shared source: class-coded bursts plus the broadband waveform.
    let mut shared = broadband_waveform(cfg.seed, len);
    for (i, ev) in events.iter().enumerate() {
        let phase = math::TAU * rng::uniform(cfg.seed, STREAM_PHASES, i as u64);
        let carrier = cfg.beta_hz_per_class[ev.label.index()];
        add_burst(&mut shared, ev.onset_sample, carrier, phase, 1.0);
    }

    // Six bipolar targets: independent unit noise, the coupled two with the
    // scaled shared source on top.
    let mut targets: Vec<Vec<f64>> = Vec::with_capacity(6);
    for side in 0..2 {
        for k in 0..3 {
            let stream = STREAM_TARGET_BASE + (side * 3 + k) as u64;
            let mut t = vec![0.0; len];
            rng::fill_normal(cfg.seed, stream, 0, &mut t);
            let coupled = if side == 0 {
                k == cfg.coupled_pair.0
            } else {
                k == cfg.coupled_pair.1
            };
            if coupled {
                for (v, s) in t.iter_mut().zip(&shared) {
                    *v += cfg.coupling_snr * s;
                }
            }
            targets.push(t);
        }
    }

    // Contacts: the deepest is reference noise, each shallower contact adds
    // one bipolar target so that contact[k] - contact[k+1] = target[k].
    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(8);
    let mut names: Vec<_> = Vec::with_capacity(8);
    for side in 0..2 {
        let prefix = if side == 0 { "L" } else { "R" };
        let ref_stream = if side == 0 { STREAM_REF_LEFT } else { STREAM_REF_RIGHT };
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(4);
        let mut reference = vec![0.0; len];
        rng::fill_normal(cfg.seed, ref_stream, 0, &mut reference);
        stack.push(reference);
        for k in (0..3).rev() {
            let deeper = stack.last().unwrap();
            let target = &targets[side * 3 + k];
            let contact: Vec<f64> = deeper
                .iter()
                .zip(target)
                .map(|(d, t)| d + t)
                .collect();
            stack.push(contact);
        }
        stack.reverse();
        for (k, contact) in stack.into_iter().enumerate() {
            names.push(format!("{prefix}{k}").to_string());
            channels.push(contact);
        }
    }

    Recording::new(SAMPLE_RATE_HZ, names, channels, events)
}
