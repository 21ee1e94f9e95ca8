//! Recording containers, behavior labels, and event markers.
//!
//! A [`Recording`] holds one session: equal-length sample buffers for each
//! electrode contact, the sampling rate, and the labeled event onsets the
//! epoching stage cuts around. Construction validates every structural
//! invariant up front so downstream stages can assume clean data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Behavior classes, in their fixed canonical order.
///
/// The order matters: one-vs-rest models are trained per class in this
/// order, confusion matrix rows/columns follow it, and prediction ties are
/// broken toward the lowest index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Label {
    /// Button press ("BP").
    #[cfg_attr(feature = "serde", serde(rename = "BP"))]
    ButtonPress,
    /// Speech ("S").
    #[cfg_attr(feature = "serde", serde(rename = "S"))]
    Speech,
    /// Rest segment ("RS").
    #[cfg_attr(feature = "serde", serde(rename = "RS"))]
    Rest,
    /// Arm movement ("AM").
    #[cfg_attr(feature = "serde", serde(rename = "AM"))]
    ArmMovement,
    /// Mouth movement ("MM").
    #[cfg_attr(feature = "serde", serde(rename = "MM"))]
    MouthMovement,
}

impl Label {
    /// All classes in canonical order.
    pub const ALL: [Label; 5] = [
        Label::ButtonPress,
        Label::Speech,
        Label::Rest,
        Label::ArmMovement,
        Label::MouthMovement,
    ];

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        match self {
            Label::ButtonPress => 0,
            Label::Speech => 1,
            Label::Rest => 2,
            Label::ArmMovement => 3,
            Label::MouthMovement => 4,
        }
    }

    /// Short code used in file headers and report tables.
    pub fn code(self) -> &'static str {
        match self {
            Label::ButtonPress => "BP",
            Label::Speech => "S",
            Label::Rest => "RS",
            Label::ArmMovement => "AM",
            Label::MouthMovement => "MM",
        }
    }

    /// Parse a short code.
    pub fn from_code(code: &str) -> Result<Label> {
        Label::ALL
            .into_iter()
            .find(|l| l.code() == code)
            .ok_or_else(|| Error::Label(format!("unknown class code {code:?} (expected BP, S, RS, AM, or MM)")))
    }
}

impl core::fmt::Display for Label {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.code())
    }
}

/// A labeled event onset, in samples from the start of the recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventMarker {
    pub onset_sample: usize,
    pub label: Label,
}

/// One recorded session: per-contact sample buffers plus event markers.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub sample_rate_hz: f64,
    /// Channel names, parallel to `channels`. For two-electrode sessions the
    /// expected layout is the four left contacts (deepest first) followed by
    /// the four right contacts.
    pub channel_names: Vec<String>,
    pub channels: Vec<Vec<f64>>,
    /// Sorted ascending by onset.
    pub events: Vec<EventMarker>,
}

impl Recording {
    /// Build a recording, validating every invariant and sorting events by
    /// onset (ties keep their given order).
    pub fn new(
        sample_rate_hz: f64,
        channel_names: Vec<String>,
        channels: Vec<Vec<f64>>,
        mut events: Vec<EventMarker>,
    ) -> Result<Recording> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if channels.is_empty() {
            return Err(Error::Integrity("recording has no channels".into()));
        }
        if channel_names.len() != channels.len() {
            return Err(Error::Integrity(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                channels.len()
            )));
        }
        for (i, name) in channel_names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Integrity(format!("channel {i} has an empty name")));
            }
            if channel_names[..i].contains(name) {
                return Err(Error::Integrity(format!("duplicate channel name {name:?}")));
            }
        }
        let len = channels[0].len();
        if len < 2 {
            return Err(Error::Integrity(format!(
                "channels must hold at least 2 samples, got {len}"
            )));
        }
        for (name, ch) in channel_names.iter().zip(&channels) {
            if ch.len() != len {
                return Err(Error::Integrity(format!(
                    "channel {name:?} has {} samples, expected {len}",
                    ch.len()
                )));
            }
            if let Some(pos) = ch.iter().position(|v| !v.is_finite()) {
                return Err(Error::Integrity(format!(
                    "channel {name:?} contains a non-finite sample at index {pos}"
                )));
            }
        }
        for ev in &events {
            if ev.onset_sample >= len {
                return Err(Error::Integrity(format!(
                    "event onset {} is past the end of the recording ({len} samples)",
                    ev.onset_sample
                )));
            }
        }
        events.sort_by_key(|e| e.onset_sample);
        Ok(Recording {
            sample_rate_hz,
            channel_names,
            channels,
            events,
        })
    }

    /// Samples per channel.
    pub fn len_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.len_samples() as f64 / self.sample_rate_hz
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channel_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.channels[i].as_slice())
    }

    /// Split an eight-channel recording into its left and right contact
    /// stacks (channels 0..4 and 4..8 in header order).
    pub fn contact_stacks(&self) -> Result<([&[f64]; 4], [&[f64]; 4])> {
        if self.n_channels() != 8 {
            return Err(Error::Shape(format!(
                "expected 8 contact channels (4 per hemisphere), got {}",
                self.n_channels()
            )));
        }
        let c = |i: usize| self.channels[i].as_slice();
        Ok(([c(0), c(1), c(2), c(3)], [c(4), c(5), c(6), c(7)]))
    }
}
