//! On-disk dataset layout: a directory holding `header.json` plus one raw
//! little-endian `f64` sample file per channel, named `<channel>.f64`.
//!
//! The header carries the sample rate, the channel names in order, and the
//! labeled event onsets. Samples must be finite; both saving and loading
//! refuse anything else. Channel names double as file names, so they are
//! restricted to ASCII letters, digits, `_`, and `-`.

use std::fs;
use std::path::Path;

use lfpsync::recording::{EventMarker, Recording};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Serialize, Deserialize)]
struct Header {
    sample_rate_hz: f64,
    channels: Vec<String>,
    events: Vec<EventMarker>,
}

fn safe_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Write a recording as a dataset directory, creating it if needed.
pub fn save(dir: &Path, rec: &Recording) -> Result<(), CliError> {
    for name in &rec.channel_names {
        if !safe_name(name) {
            return Err(CliError::Data(format!(
                "channel name {name:?} cannot be used as a file name \
                 (allowed: ASCII letters, digits, '_', '-')"
            )));
        }
    }
    for (name, ch) in rec.channel_names.iter().zip(&rec.channels) {
        if let Some(pos) = ch.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Data(format!(
                "channel {name:?} contains a non-finite sample at index {pos}"
            )));
        }
    }
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;

    let header = Header {
        sample_rate_hz: rec.sample_rate_hz,
        channels: rec.channel_names.clone(),
        events: rec.events.clone(),
    };
    let mut text = serde_json::to_string_pretty(&header)
        .map_err(|e| CliError::Data(format!("cannot encode header: {e}")))?;
    text.push('\n');
    let header_path = dir.join("header.json");
    fs::write(&header_path, text)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", header_path.display())))?;

    for (name, ch) in rec.channel_names.iter().zip(&rec.channels) {
        let mut bytes = Vec::with_capacity(ch.len() * 8);
        for &v in ch {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = dir.join(format!("{name}.f64"));
        fs::write(&path, bytes)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Read a dataset directory back into a validated recording.
pub fn load(dir: &Path) -> Result<Recording, CliError> {
    let header_path = dir.join("header.json");
    let text = fs::read_to_string(&header_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", header_path.display())))?;
    let header: Header = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("corrupt header {}: {e}", header_path.display())))?;

    let mut channels = Vec::with_capacity(header.channels.len());
    for name in &header.channels {
        if !safe_name(name) {
            return Err(CliError::Data(format!(
                "header lists channel name {name:?}, which is not a valid file name"
            )));
        }
        let path = dir.join(format!("{name}.f64"));
        let bytes = fs::read(&path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        if bytes.len() % 8 != 0 {
            return Err(CliError::Data(format!(
                "{} holds {} bytes, not a whole number of 8-byte samples",
                path.display(),
                bytes.len()
            )));
        }
        let samples: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        channels.push(samples);
    }
    // Recording::new re-validates everything, including finiteness. Every
    // failure here is a property of the files, so it maps to a data error
    // even when the library tags it as a configuration problem.
    Recording::new(
        header.sample_rate_hz,
        header.channels,
        channels,
        header.events,
    )
    .map_err(|e| CliError::Data(format!("invalid dataset {}: {e}", dir.display())))
}
