//! Parametrized network profiles (pLogP).
//!
//! A profile captures four quantities, all in microseconds, measured per
//! message size `m` in bytes:
//!
//! ```text
//! L      end-to-end latency (size independent)
//! g(m)   gap: minimum interval between consecutive message injections,
//!        i.e. the reciprocal of achievable bandwidth at size m
//! os(m)  send overhead: CPU time the sender is busy with one message
//! or(m)  receive overhead: CPU time the receiver is busy with one message
//! ```
//!
//! Measured curves are stored as samples at increasing byte sizes; values at
//! other sizes come from piecewise-linear interpolation, and sizes above the
//! largest sample extrapolate along the final segment. The 1-byte sample is
//! mandatory — it anchors interpolation at the small end and provides `g(1)`,
//! which the rendezvous cost models need.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// One measured row of a profile: per-size values of the three
/// size-dependent parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PLogPSample {
    /// Message size this row was measured at (≥ 1).
    pub bytes: u64,
    /// Gap g(bytes), µs.
    pub g_us: f64,
    /// Send overhead os(bytes), µs.
    pub os_us: f64,
    /// Receive overhead or(bytes), µs.
    pub or_us: f64,
}

/// Selects one of the size-dependent parameter curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    /// g(m)
    Gap,
    /// os(m)
    SendOverhead,
    /// or(m)
    RecvOverhead,
}

impl Param {
    /// Short column name, as used in file formats and error messages.
    pub fn id(self) -> &'static str {
        match self {
            Param::Gap => "g",
            Param::SendOverhead => "os",
            Param::RecvOverhead => "or",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Validation and lookup failures for profiles and segmentations.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    /// Latency must be a positive, finite number of µs.
    NonPositiveLatency(f64),
    /// A profile needs at least one sample.
    NoSamples,
    /// Sample sizes are message sizes; zero bytes is meaningless.
    ZeroSampleSize,
    /// The mandatory 1-byte sample is absent.
    MissingUnitSample,
    /// Two samples share the same byte size.
    DuplicateSize(u64),
    /// A parameter value is not a positive, finite number of µs.
    NonPositiveValue {
        /// Sample size the bad value belongs to.
        bytes: u64,
        /// Which curve it sits on.
        param: Param,
        /// The offending value.
        value: f64,
    },
    /// `param_at` was asked for a zero-byte message.
    ZeroBytesQuery,
    /// Messages are at least one byte.
    ZeroMessage,
    /// Segments are at least one byte.
    ZeroSegment,
    /// A segment larger than the message it splits makes no sense.
    SegmentExceedsMessage {
        /// Total message size.
        message_bytes: u64,
        /// Requested segment size.
        segment_bytes: u64,
    },
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ProfileError::NonPositiveLatency(v) => {
                write!(f, "latency must be positive and finite, got {v}")
            }
            ProfileError::NoSamples => f.write_str("profile has no samples"),
            ProfileError::ZeroSampleSize => f.write_str("sample size 0 bytes is invalid"),
            ProfileError::MissingUnitSample => {
                f.write_str("profile is missing the mandatory 1-byte sample")
            }
            ProfileError::DuplicateSize(b) => write!(f, "duplicate sample size {b} bytes"),
            ProfileError::NonPositiveValue { bytes, param, value } => {
                write!(f, "{param}({bytes}) = {value} is not positive and finite")
            }
            ProfileError::ZeroBytesQuery => f.write_str("parameter lookup needs at least 1 byte"),
            ProfileError::ZeroMessage => f.write_str("message size must be at least 1 byte"),
            ProfileError::ZeroSegment => f.write_str("segment size must be at least 1 byte"),
            ProfileError::SegmentExceedsMessage { message_bytes, segment_bytes } => write!(
                f,
                "segment of {segment_bytes} bytes exceeds the {message_bytes}-byte message"
            ),
        }
    }
}

/// A validated pLogP profile for one network.
///
/// Constructed through [`NetworkProfile::new`], which sorts the samples by
/// size and enforces the invariants (positive finite values, distinct sizes,
/// 1-byte sample present). Instances are therefore always safe to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkProfile {
    name: String,
    latency_us: f64,
    samples: Vec<PLogPSample>,
}

impl NetworkProfile {
    /// Validates and builds a profile. Samples may arrive in any order; they
    /// are sorted by size here.
    pub fn new(
        name: &str,
        latency_us: f64,
        mut samples: Vec<PLogPSample>,
    ) -> Result<Self, ProfileError> {
        if !(latency_us.is_finite() && latency_us > 0.0) {
            return Err(ProfileError::NonPositiveLatency(latency_us));
        }
        if samples.is_empty() {
            return Err(ProfileError::NoSamples);
        }
        samples.sort_by_key(|s| s.bytes);
        if samples[0].bytes == 0 {
            return Err(ProfileError::ZeroSampleSize);
        }
        if samples[0].bytes != 1 {
            return Err(ProfileError::MissingUnitSample);
        }
        for pair in samples.windows(2) {
            if pair[0].bytes == pair[1].bytes {
                return Err(ProfileError::DuplicateSize(pair[0].bytes));
            }
        }
        for s in &samples {
            for (param, value) in [
                (Param::Gap, s.g_us),
                (Param::SendOverhead, s.os_us),
                (Param::RecvOverhead, s.or_us),
            ] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ProfileError::NonPositiveValue { bytes: s.bytes, param, value });
                }
            }
        }
        Ok(NetworkProfile { name: String::from(name), latency_us, samples })
    }

    /// Label identifying the measured network (e.g. `fast-ethernet`).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// End-to-end latency L in µs.
    pub fn latency_us(&self) -> f64 {
        self.latency_us
    }

    /// Samples, sorted by ascending byte size.
    pub fn samples(&self) -> &[PLogPSample] {
        &self.samples
    }

    /// Evaluates one parameter curve at an arbitrary message size.
    ///
    /// Exact at sample points, piecewise-linear between them, and linear
    /// along the last segment's slope above the largest sample (constant for
    /// single-sample profiles). The result is floored at the smallest
    /// positive f64 so that even a decreasing tail can never extrapolate to
    /// a non-positive time.
    pub fn param_at(&self, param: Param, bytes: u64) -> Result<f64, ProfileError> {
        if bytes == 0 {
            return Err(ProfileError::ZeroBytesQuery);
        }
        let pick = |s: &PLogPSample| match param {
            Param::Gap => s.g_us,
            Param::SendOverhead => s.os_us,
            Param::RecvOverhead => s.or_us,
        };
        let value = match self.samples.binary_search_by_key(&bytes, |s| s.bytes) {
            Ok(i) => pick(&self.samples[i]),
            Err(i) => {
                // `bytes ≥ 1` and the 1-byte sample exists, so i ≥ 1 here.
                let (lo, hi) = if i < self.samples.len() {
                    (&self.samples[i - 1], &self.samples[i])
                } else if self.samples.len() >= 2 {
                    // beyond the last sample: extend the final segment
                    (&self.samples[i - 2], &self.samples[i - 1])
                } else {
                    return Ok(pick(&self.samples[0]).max(f64::MIN_POSITIVE));
                };
                let (x0, x1) = (lo.bytes as f64, hi.bytes as f64);
                let (v0, v1) = (pick(lo), pick(hi));
                v0 + (v1 - v0) * ((bytes as f64 - x0) / (x1 - x0))
            }
        };
        Ok(value.max(f64::MIN_POSITIVE))
    }
}

/// How a message splits into segments: `segment_count` pieces of
/// `segment_bytes` each (the last piece may be logically shorter, but every
/// piece is charged at the full segment size — senders pace themselves on
/// the segment size they negotiated, not on the trailing remainder).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segmentation {
    /// Size of each segment in bytes (1 ≤ s ≤ message size).
    pub segment_bytes: u64,
    /// Number of segments, ⌈m / s⌉.
    pub segment_count: u64,
}

impl Segmentation {
    /// Splits `message_bytes` into segments of `segment_bytes`.
    pub fn for_message(message_bytes: u64, segment_bytes: u64) -> Result<Self, ProfileError> {
        if message_bytes == 0 {
            return Err(ProfileError::ZeroMessage);
        }
        if segment_bytes == 0 {
            return Err(ProfileError::ZeroSegment);
        }
        if segment_bytes > message_bytes {
            return Err(ProfileError::SegmentExceedsMessage { message_bytes, segment_bytes });
        }
        Ok(Segmentation {
            segment_bytes,
            segment_count: message_bytes.div_ceil(segment_bytes),
        })
    }
}
