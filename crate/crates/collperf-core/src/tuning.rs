//! Decision layer on top of the cost models: pick a segment size, pick a
//! strategy, and fit the all-to-all congestion factor to measurements.
//!
//! Segment optimization evaluates the dyadic ladder s = ⌈m/2ⁱ⌉ (the classic
//! sweep: halve until a single byte) and optionally hill-climbs around the
//! winner in ±12.5% steps. Strategy selection prices every catalog entry —
//! auto-segmenting the segmented ones — and keeps the cheapest, breaking
//! ties in catalog order so results are reproducible. The congestion fit is
//! the least-squares solution of `T ≈ Lo + (Hi − Lo)·γ` over a measurement
//! set; on the networks this model family was built around, fitted values
//! land near γ ≈ 0.2 for switched Fast Ethernet and γ ≈ 1.5 for Myrinet.

use crate::models::{
    alltoall_bounds, predict, CollectiveRequest, ModelError, Operation, Prediction, Strategy,
};
use crate::profile::NetworkProfile;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Failures of the tuning layer.
#[derive(Debug, Clone, PartialEq)]
pub enum TuningError {
    /// Underlying model evaluation failed.
    Model(ModelError),
    /// Segment optimization only applies to segmented strategies.
    NotSegmented {
        /// The strategy that has no segment size to tune.
        strategy: Strategy,
    },
    /// Strategy selection covers the rooted collectives only.
    UnsupportedOperation {
        /// The operation selection was asked for.
        operation: Operation,
    },
    /// A measurement set must contain at least one record.
    EmptyMeasurements,
    /// A measurement record is malformed.
    InvalidMeasurement {
        /// Index of the offending record.
        index: usize,
        /// What is wrong with it.
        reason: &'static str,
    },
    /// The bounds coincide on every measured point, so γ is unidentifiable.
    DegenerateFit {
        /// Number of measurements examined.
        n_points: usize,
    },
}

impl fmt::Display for TuningError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TuningError::Model(ref e) => write!(f, "{e}"),
            TuningError::NotSegmented { strategy } => {
                write!(f, "strategy '{strategy}' takes no segment size; nothing to optimize")
            }
            TuningError::UnsupportedOperation { operation } => write!(
                f,
                "strategy selection covers rooted collectives; '{operation}' has a single \
                 strategy whose cost is tuned through the congestion factor instead"
            ),
            TuningError::EmptyMeasurements => {
                f.write_str("measurement set contains no records")
            }
            TuningError::InvalidMeasurement { index, reason } => {
                write!(f, "measurement record {index}: {reason}")
            }
            TuningError::DegenerateFit { n_points } => write!(
                f,
                "the lower and upper bounds coincide on all {n_points} measured points, \
                 so the congestion factor is unidentifiable; measure at larger process \
                 counts or message sizes"
            ),
        }
    }
}

impl From<ModelError> for TuningError {
    fn from(e: ModelError) -> Self {
        TuningError::Model(e)
    }
}

/// Result of a segment-size search.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChoice {
    /// The winning segment size in bytes.
    pub segment_bytes: u64,
    /// The full prediction at that segment size.
    pub prediction: Prediction,
    /// How many candidate sizes were priced to find it.
    pub candidates_examined: usize,
}

/// Finds the segment size minimizing the predicted time of a segmented
/// strategy.
///
/// Always sweeps the dyadic candidates s = ⌈m/2ⁱ⌉, i = 0..⌊log₂m⌋
/// (duplicates skipped), keeping the first strict minimum — ties go to the
/// larger segment, which means fewer per-segment overheads in practice.
/// With `refine`, a hill climb then nudges the winner by ≈12.5% steps
/// (down first) as long as the prediction strictly improves, staying within
/// [1, m]. Every priced candidate counts toward `candidates_examined`.
pub fn optimize_segment(
    net: &NetworkProfile,
    operation: Operation,
    strategy: Strategy,
    procs: u32,
    message_bytes: u64,
    refine: bool,
) -> Result<SegmentChoice, TuningError> {
    if !strategy.is_segmented() {
        return Err(TuningError::NotSegmented { strategy });
    }
    let eval = |s: u64| -> Result<Prediction, TuningError> {
        let req = CollectiveRequest::new(operation, strategy, procs, message_bytes, Some(s))?;
        Ok(predict(net, &req)?)
    };

    let mut examined = 0usize;
    let mut best: Option<(u64, Prediction)> = None;
    let mut previous = 0u64;
    for i in 0..=message_bytes.ilog2() {
        let s = message_bytes.div_ceil(1u64 << i);
        if s == previous {
            continue;
        }
        previous = s;
        let p = eval(s)?;
        examined += 1;
        if best.as_ref().is_none_or(|(_, b)| p.total_us < b.total_us) {
            best = Some((s, p));
        }
    }
    let (mut best_s, mut best_p) = best.expect("the dyadic ladder is never empty");

    if refine {
        loop {
            let down = (best_s.saturating_mul(7).saturating_add(4) / 8).clamp(1, message_bytes);
            let up = (best_s.saturating_mul(9).saturating_add(4) / 8).clamp(1, message_bytes);
            let mut moved = false;
            for candidate in [down, up] {
                if candidate == best_s {
                    continue;
                }
                let p = eval(candidate)?;
                examined += 1;
                if p.total_us < best_p.total_us {
                    best_s = candidate;
                    best_p = p;
                    moved = true;
                    break;
                }
            }
            if !moved {
                break;
            }
        }
    }

    Ok(SegmentChoice { segment_bytes: best_s, prediction: best_p, candidates_examined: examined })
}

/// Picks the cheapest strategy in the operation's catalog.
///
/// Segmented strategies participate only when `auto_segment` is set, priced
/// at their [`optimize_segment`]-refined best. The argmin keeps the first
/// strict minimum, so ties resolve in catalog order. All-to-all is rejected:
/// its single strategy is tuned through the congestion factor, not selected.
pub fn select_strategy(
    net: &NetworkProfile,
    operation: Operation,
    procs: u32,
    message_bytes: u64,
    auto_segment: bool,
) -> Result<(Strategy, Prediction), TuningError> {
    if operation == Operation::AllToAll {
        return Err(TuningError::UnsupportedOperation { operation });
    }
    let mut best: Option<(Strategy, Prediction)> = None;
    for &strategy in Strategy::catalog(operation) {
        let prediction = if strategy.is_segmented() {
            if !auto_segment {
                continue;
            }
            optimize_segment(net, operation, strategy, procs, message_bytes, true)?.prediction
        } else {
            let req = CollectiveRequest::new(operation, strategy, procs, message_bytes, None)?;
            predict(net, &req)?
        };
        if best
            .as_ref()
            .is_none_or(|(_, b)| prediction.total_us < b.total_us)
        {
            best = Some((strategy, prediction));
        }
    }
    Ok(best.expect("every catalog contains at least one unsegmented strategy"))
}

/// One timed all-to-all execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    /// Number of participating processes.
    pub procs: u32,
    /// Per-destination message size in bytes.
    pub message_bytes: u64,
    /// Measured completion time in µs.
    pub time_us: f64,
}

/// A named, validated batch of measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    /// Label for the batch (e.g. the file it was loaded from).
    pub name: String,
    /// The validated records.
    pub records: Vec<MeasurementRecord>,
}

impl MeasurementSet {
    /// Validates and builds a measurement set: at least one record, each
    /// with a positive process count, message size and finite positive time.
    pub fn new(name: &str, records: Vec<MeasurementRecord>) -> Result<Self, TuningError> {
        if records.is_empty() {
            return Err(TuningError::EmptyMeasurements);
        }
        for (index, r) in records.iter().enumerate() {
            if r.procs == 0 {
                return Err(TuningError::InvalidMeasurement {
                    index,
                    reason: "process count must be at least 1",
                });
            }
            if r.message_bytes == 0 {
                return Err(TuningError::InvalidMeasurement {
                    index,
                    reason: "message size must be at least 1 byte",
                });
            }
            if !(r.time_us.is_finite() && r.time_us > 0.0) {
                return Err(TuningError::InvalidMeasurement {
                    index,
                    reason: "measured time must be positive and finite",
                });
            }
        }
        Ok(MeasurementSet { name: String::from(name), records })
    }
}

/// A fitted congestion factor and its goodness of fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCongestion {
    /// Least-squares γ in `T ≈ Lo + (Hi − Lo)·γ`.
    pub gamma: f64,
    /// Root-mean-square residual of the fit, µs.
    pub residual_us: f64,
    /// Number of measurements the fit used.
    pub n_points: usize,
    /// Name of the profile the bounds were computed from.
    pub profile_name: String,
}

/// Least-squares fit of the congestion factor γ to measured all-to-all
/// times.
///
/// With per-point bounds (Loᵢ, Hiᵢ) and measurements Tᵢ, the model
/// `Tᵢ = Loᵢ + (Hiᵢ − Loᵢ)·γ` is linear in γ, so the minimizer is
/// `γ = Σ (Hiᵢ−Loᵢ)(Tᵢ−Loᵢ) / Σ (Hiᵢ−Loᵢ)²` in closed form. A negative γ is
/// reported as-is (measurements can beat the optimistic bound) with a
/// warning; if the bounds coincide at every point the fit is degenerate.
pub fn fit_gamma(
    net: &NetworkProfile,
    set: &MeasurementSet,
) -> Result<FittedCongestion, TuningError> {
    let mut numerator = 0.0f64;
    let mut denominator = 0.0f64;
    let mut points = Vec::with_capacity(set.records.len()); // (lo, spread)
    for r in &set.records {
        let b = alltoall_bounds(net, r.procs, r.message_bytes)?;
        let lo = b.lower.total_us;
        let spread = b.upper.total_us - lo;
        numerator += spread * (r.time_us - lo);
        denominator += spread * spread;
        points.push((lo, spread));
    }
    if denominator == 0.0 {
        return Err(TuningError::DegenerateFit { n_points: set.records.len() });
    }
    let gamma = numerator / denominator;
    if gamma < 0.0 {
        log::warn!(
            "fitted congestion factor γ = {gamma} is negative: '{}' measurements sit below \
             the contention-free bound",
            set.name
        );
    }

    let mut squared = 0.0f64;
    for (r, (lo, spread)) in set.records.iter().zip(&points) {
        let residual = r.time_us - (lo + spread * gamma);
        squared += residual * residual;
    }
    let residual_us = libm::sqrt(squared / set.records.len() as f64);

    Ok(FittedCongestion {
        gamma,
        residual_us,
        n_points: set.records.len(),
        profile_name: String::from(net.name()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hill_climb_steps_round_half_up() {
        // the ±12.5% neighbors of s: ⌊(7s+4)/8⌋ and ⌊(9s+4)/8⌋
        let down = |s: u64| (7 * s + 4) / 8;
        let up = |s: u64| (9 * s + 4) / 8;
        assert_eq!(down(100), 88);
        assert_eq!(up(100), 113);
        assert_eq!(down(1), 1); // s = 1 cannot move down
    }

    #[test]
    fn measurement_validation_names_the_bad_record() {
        let bad = MeasurementSet::new(
            "b",
            vec![
                MeasurementRecord { procs: 4, message_bytes: 10, time_us: 1.0 },
                MeasurementRecord { procs: 4, message_bytes: 0, time_us: 1.0 },
            ],
        );
        assert!(matches!(
            bad,
            Err(TuningError::InvalidMeasurement { index: 1, .. })
        ));
    }
}
