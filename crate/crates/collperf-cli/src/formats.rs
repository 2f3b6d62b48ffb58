//! On-disk formats: pLogP profiles (JSON and whitespace columns), all-to-all
//! measurement CSV, and the simulator trace CSV.
//!
//! Loading and saving are exact inverses for every valid value: floats are
//! written in shortest round-trip form, so `parse(render(x)) == x` down to
//! the bits. Parse errors carry the file path and, for the line-oriented
//! formats, the 1-based line number.

use collperf_core::profile::{NetworkProfile, PLogPSample, ProfileError};
use collperf_core::simulator::{Schedule, SimResult};
use collperf_core::tuning::{MeasurementRecord, MeasurementSet, TuningError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

use crate::record::fmt_f64;

/// Failures while reading or validating a data file.
#[derive(Debug, Error)]
pub enum FormatError {
    /// The file could not be read or written.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: String,
        /// Underlying IO error.
        source: std::io::Error,
    },
    /// JSON syntax or shape error (the message carries line and column).
    #[error("{path}: {source}")]
    Json {
        /// File involved.
        path: String,
        /// Underlying serde_json error.
        source: serde_json::Error,
    },
    /// Line-oriented format error; the message names the offending line.
    #[error("{path}: {message}")]
    Malformed {
        /// File involved.
        path: String,
        /// What went wrong, with a line position where applicable.
        message: String,
    },
    /// The file parsed but the profile violates an invariant.
    #[error("{path}: {source}")]
    Profile {
        /// File involved.
        path: String,
        /// Underlying validation error.
        source: ProfileError,
    },
    /// The file parsed but the measurement set violates an invariant.
    #[error("{path}: {source}")]
    Measurements {
        /// File involved.
        path: String,
        /// Underlying validation error.
        source: TuningError,
    },
}

/// Profile encodings understood by [`load_profile`] and [`save_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFormat {
    /// `{"name", "latency_us", "samples": [{"bytes", "g_us", "os_us", "or_us"}]}`.
    Json,
    /// `# L <µs>` header plus whitespace-separated `bytes g os or` rows.
    Columns,
}

/// Picks the format by file extension: `.json` means JSON, anything else is
/// the columns format.
pub fn detect_profile_format(path: &Path) -> ProfileFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => ProfileFormat::Json,
        _ => ProfileFormat::Columns,
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    name: String,
    latency_us: f64,
    samples: Vec<SampleDoc>,
}

#[derive(Serialize, Deserialize)]
struct SampleDoc {
    bytes: u64,
    g_us: f64,
    os_us: f64,
    or_us: f64,
}

/// Parses the JSON profile encoding. `origin` names the source in errors.
pub fn parse_profile_json(text: &str, origin: &str) -> Result<NetworkProfile, FormatError> {
    let doc: ProfileDoc = serde_json::from_str(text)
        .map_err(|source| FormatError::Json { path: origin.to_string(), source })?;
    let samples = doc
        .samples
        .into_iter()
        .map(|s| PLogPSample { bytes: s.bytes, g_us: s.g_us, os_us: s.os_us, or_us: s.or_us })
        .collect();
    NetworkProfile::new(&doc.name, doc.latency_us, samples)
        .map_err(|source| FormatError::Profile { path: origin.to_string(), source })
}

/// Renders the JSON profile encoding. Floats use shortest round-trip form
/// (via serde_json), so reloading reproduces the profile exactly.
pub fn render_profile_json(profile: &NetworkProfile) -> String {
    let doc = ProfileDoc {
        name: profile.name().to_string(),
        latency_us: profile.latency_us(),
        samples: profile
            .samples()
            .iter()
            .map(|s| SampleDoc { bytes: s.bytes, g_us: s.g_us, os_us: s.os_us, or_us: s.or_us })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("profile docs always serialize");
    text.push('\n');
    text
}

/// Parses the columns profile encoding: `#` lines are comments except for
/// the mandatory `# L <µs>` latency header and the optional
/// `# name <label>` header; data rows are whitespace-separated
/// `bytes g_us os_us or_us`. `fallback_name` applies when no name header is
/// present; `origin` names the source in errors.
pub fn parse_profile_columns(
    text: &str,
    fallback_name: &str,
    origin: &str,
) -> Result<NetworkProfile, FormatError> {
    let malformed = |message: String| FormatError::Malformed { path: origin.to_string(), message };
    let mut name: Option<String> = None;
    let mut latency: Option<f64> = None;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            let mut parts = rest.splitn(2, char::is_whitespace);
            let keyword = parts.next().unwrap_or("");
            let value = parts.next().unwrap_or("").trim();
            match keyword {
                "L" => {
                    if latency.is_some() {
                        return Err(malformed(format!("line {lineno}: second '# L' header")));
                    }
                    let parsed: f64 = value.parse().map_err(|_| {
                        malformed(format!("line {lineno}: invalid latency '{value}'"))
                    })?;
                    latency = Some(parsed);
                }
                "name" => name = Some(value.to_string()),
                // anything else starting with '#' is a comment
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(malformed(format!(
                "line {lineno}: expected 4 columns (bytes g_us os_us or_us), found {}",
                fields.len()
            )));
        }
        let bytes: u64 = fields[0]
            .parse()
            .map_err(|_| malformed(format!("line {lineno}: invalid bytes '{}'", fields[0])))?;
        let mut values = [0.0f64; 3];
        for (slot, (field, label)) in values
            .iter_mut()
            .zip(fields[1..].iter().zip(["g_us", "os_us", "or_us"]))
        {
            *slot = field.parse().map_err(|_| {
                malformed(format!("line {lineno}: invalid {label} '{field}'"))
            })?;
        }
        samples.push(PLogPSample {
            bytes,
            g_us: values[0],
            os_us: values[1],
            or_us: values[2],
        });
    }
    let latency_us =
        latency.ok_or_else(|| malformed("missing latency: no '# L <µs>' header line".into()))?;
    let name = name.unwrap_or_else(|| fallback_name.to_string());
    NetworkProfile::new(&name, latency_us, samples)
        .map_err(|source| FormatError::Profile { path: origin.to_string(), source })
}

/// Renders the columns profile encoding; [`parse_profile_columns`] inverts
/// it exactly.
pub fn render_profile_columns(profile: &NetworkProfile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# name {}", profile.name());
    let _ = writeln!(out, "# L {}", profile.latency_us());
    out.push_str("# bytes g_us os_us or_us\n");
    for s in profile.samples() {
        let _ = writeln!(out, "{} {} {} {}", s.bytes, s.g_us, s.os_us, s.or_us);
    }
    out
}

/// Loads a profile from disk; `format` defaults to
/// [`detect_profile_format`] when `None`. The columns format falls back to
/// the file stem as the profile name.
pub fn load_profile(
    path: &Path,
    format: Option<ProfileFormat>,
) -> Result<NetworkProfile, FormatError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: origin.clone(), source })?;
    match format.unwrap_or_else(|| detect_profile_format(path)) {
        ProfileFormat::Json => parse_profile_json(&text, &origin),
        ProfileFormat::Columns => {
            let fallback = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("unnamed");
            parse_profile_columns(&text, fallback, &origin)
        }
    }
}

/// Saves a profile to disk in the chosen (or extension-detected) format.
pub fn save_profile(
    profile: &NetworkProfile,
    path: &Path,
    format: Option<ProfileFormat>,
) -> Result<(), FormatError> {
    let text = match format.unwrap_or_else(|| detect_profile_format(path)) {
        ProfileFormat::Json => render_profile_json(profile),
        ProfileFormat::Columns => render_profile_columns(profile),
    };
    fs::write(path, text)
        .map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

/// The exact measurement CSV header.
pub const MEASUREMENT_HEADER: &str = "procs,bytes,time_us";

/// Parses measurement CSV: the `procs,bytes,time_us` header, then one
/// record per row. Blank lines and `#` comments are skipped. `name` labels
/// the resulting set (callers typically pass the file stem); `origin` names
/// the source in errors.
pub fn parse_measurements(
    text: &str,
    name: &str,
    origin: &str,
) -> Result<MeasurementSet, FormatError> {
    let malformed = |message: String| FormatError::Malformed { path: origin.to_string(), message };
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != MEASUREMENT_HEADER {
                return Err(malformed(format!(
                    "line {lineno}: expected header '{MEASUREMENT_HEADER}', found '{line}'"
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(malformed(format!(
                "line {lineno}: expected 3 fields (procs,bytes,time_us), found {}",
                fields.len()
            )));
        }
        let procs: u32 = fields[0]
            .parse()
            .map_err(|_| malformed(format!("line {lineno}: invalid procs '{}'", fields[0])))?;
        let message_bytes: u64 = fields[1]
            .parse()
            .map_err(|_| malformed(format!("line {lineno}: invalid bytes '{}'", fields[1])))?;
        let time_us: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("line {lineno}: invalid time_us '{}'", fields[2])))?;
        records.push(MeasurementRecord { procs, message_bytes, time_us });
    }
    if !saw_header {
        return Err(malformed(format!(
            "missing header '{MEASUREMENT_HEADER}' (empty measurement file?)"
        )));
    }
    MeasurementSet::new(name, records)
        .map_err(|source| FormatError::Measurements { path: origin.to_string(), source })
}

/// Renders measurement CSV; [`parse_measurements`] inverts it exactly
/// (the set name travels outside the file, by convention the file stem).
pub fn render_measurements(set: &MeasurementSet) -> String {
    let mut out = String::from(MEASUREMENT_HEADER);
    out.push('\n');
    for r in &set.records {
        let _ = writeln!(out, "{},{},{}", r.procs, r.message_bytes, r.time_us);
    }
    out
}

/// Loads measurement CSV from disk, naming the set after the file stem.
pub fn load_measurements(path: &Path) -> Result<MeasurementSet, FormatError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: origin.clone(), source })?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("measurements");
    parse_measurements(&text, name, &origin)
}

/// Renders a simulation trace as CSV, one row per transfer in schedule
/// order. Times use the same ≥ 9-significant-digit rendering as output
/// records.
pub fn render_trace(schedule: &Schedule, result: &SimResult) -> String {
    let mut out = String::from("transfer,sender,receiver,bytes,send_start_us,recv_end_us\n");
    for (i, (t, timing)) in schedule.transfers().iter().zip(&result.trace).enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            t.sender,
            t.receiver,
            t.bytes,
            fmt_f64(timing.send_start_us),
            fmt_f64(timing.recv_end_us)
        );
    }
    out
}
