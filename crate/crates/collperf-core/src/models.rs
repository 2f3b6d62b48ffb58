//! Closed-form cost models for the rooted collectives and the all-to-all
//! exchange, parametrized by a [`NetworkProfile`].
//!
//! All formulas cost a collective over `P` processes moving `m`-byte
//! messages; segmented variants split `m` into `k = ⌈m/s⌉` segments of `s`
//! bytes. Writing `lg⌊P⌋ = ⌊log₂P⌋` and `lg⌈P⌉ = ⌈log₂P⌉`:
//!
//! ```text
//! broadcast
//!   flat                 (P−1)·g(m) + L
//!   flat-rendezvous      (P−1)·g(m) + 2·g(1) + 3·L
//!   flat-segmented       (P−1)·g(s)·k + L
//!   chain                (P−1)·(g(m) + L)
//!   chain-rendezvous     (P−1)·(g(m) + 2·g(1) + 3·L)
//!   chain-segmented      (P−1)·(g(s) + L) + g(s)·(k−1)
//!   binary               lg⌈P⌉·(2·g(m) + L)          (upper bound)
//!   binomial             lg⌊P⌋·g(m) + lg⌈P⌉·L
//!   binomial-rendezvous  lg⌊P⌋·g(m) + lg⌈P⌉·(2·g(1) + 3·L)
//!   binomial-segmented   lg⌊P⌋·g(s)·k + lg⌈P⌉·L
//!
//! scatter
//!   flat                 (P−1)·g(m) + L
//!   chain                Σ_{j=1..P−1} g(j·m) + (P−1)·L
//!   binomial             Σ_{j=0..lg⌈P⌉−1} g(2ʲ·m) + lg⌈P⌉·L
//!
//! all-to-all (direct-exchange)
//!   lower bound          (P−1)·g(m) + L
//!   upper bound          (P−1)·os(m) + (P−1)·or(m) + L
//!   prediction           lower + (upper − lower)·γ
//! ```
//!
//! The rendezvous constant `2·g(1) + 3·L` models the small-message handshake
//! (request, acknowledgement, then the data with its own latency) that MPI
//! implementations insert ahead of large transfers. The congestion factor γ
//! interpolates the all-to-all prediction between its contention-free lower
//! bound and its fully serialized upper bound; it is fitted from
//! measurements by [`crate::tuning::fit_gamma`].
//!
//! Every prediction carries an additive term breakdown whose values sum to
//! the total, with `procs == 1` flagged as `degenerate` at zero cost, and the
//! `binary` strategy flagged `upper_bound` because its closed form bounds the
//! tree rather than timing it exactly.

use crate::profile::{NetworkProfile, Param, ProfileError, Segmentation};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// The collective operations covered by the models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    /// One root sends the same m bytes to every other process.
    Broadcast,
    /// One root sends a distinct m-byte block to every other process.
    Scatter,
    /// Every process sends a distinct m-byte block to every other process.
    AllToAll,
}

impl Operation {
    /// Stable identifier as used on the command line.
    pub fn id(self) -> &'static str {
        match self {
            Operation::Broadcast => "broadcast",
            Operation::Scatter => "scatter",
            Operation::AllToAll => "alltoall",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Operation {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "broadcast" => Ok(Operation::Broadcast),
            "scatter" => Ok(Operation::Scatter),
            "alltoall" => Ok(Operation::AllToAll),
            other => Err(ModelError::UnknownOperation(String::from(other))),
        }
    }
}

/// Communication strategies, identified by stable string ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Root sends to every rank directly.
    Flat,
    /// Flat tree with a rendezvous handshake per transfer.
    FlatRendezvous,
    /// Flat tree, message split into segments.
    FlatSegmented,
    /// Ranks forward along a line 0 → 1 → … → P−1.
    Chain,
    /// Chain with a rendezvous handshake per hop.
    ChainRendezvous,
    /// Pipelined chain: segments stream hop by hop.
    ChainSegmented,
    /// Balanced binary tree (cost model is an upper bound).
    Binary,
    /// Binomial tree (recursive doubling).
    Binomial,
    /// Binomial tree with a rendezvous handshake per hop.
    BinomialRendezvous,
    /// Binomial tree, message split into segments.
    BinomialSegmented,
    /// All-to-all: each rank sends to all others in rotated order.
    DirectExchange,
}

const BROADCAST_CATALOG: [Strategy; 10] = [
    Strategy::Flat,
    Strategy::FlatRendezvous,
    Strategy::FlatSegmented,
    Strategy::Chain,
    Strategy::ChainRendezvous,
    Strategy::ChainSegmented,
    Strategy::Binary,
    Strategy::Binomial,
    Strategy::BinomialRendezvous,
    Strategy::BinomialSegmented,
];
const SCATTER_CATALOG: [Strategy; 3] = [Strategy::Flat, Strategy::Chain, Strategy::Binomial];
const ALLTOALL_CATALOG: [Strategy; 1] = [Strategy::DirectExchange];

impl Strategy {
    /// Stable identifier as used on the command line and in output records.
    pub fn id(self) -> &'static str {
        match self {
            Strategy::Flat => "flat",
            Strategy::FlatRendezvous => "flat-rendezvous",
            Strategy::FlatSegmented => "flat-segmented",
            Strategy::Chain => "chain",
            Strategy::ChainRendezvous => "chain-rendezvous",
            Strategy::ChainSegmented => "chain-segmented",
            Strategy::Binary => "binary",
            Strategy::Binomial => "binomial",
            Strategy::BinomialRendezvous => "binomial-rendezvous",
            Strategy::BinomialSegmented => "binomial-segmented",
            Strategy::DirectExchange => "direct-exchange",
        }
    }

    /// Whether the strategy splits messages into segments (and therefore
    /// requires a segment size in requests).
    pub fn is_segmented(self) -> bool {
        matches!(
            self,
            Strategy::FlatSegmented | Strategy::ChainSegmented | Strategy::BinomialSegmented
        )
    }

    /// The strategies applicable to `operation`, in catalog order. Catalog
    /// order is the tie-break order for strategy selection.
    pub fn catalog(operation: Operation) -> &'static [Strategy] {
        match operation {
            Operation::Broadcast => &BROADCAST_CATALOG,
            Operation::Scatter => &SCATTER_CATALOG,
            Operation::AllToAll => &ALLTOALL_CATALOG,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Strategy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let all = [
            Strategy::Flat,
            Strategy::FlatRendezvous,
            Strategy::FlatSegmented,
            Strategy::Chain,
            Strategy::ChainRendezvous,
            Strategy::ChainSegmented,
            Strategy::Binary,
            Strategy::Binomial,
            Strategy::BinomialRendezvous,
            Strategy::BinomialSegmented,
            Strategy::DirectExchange,
        ];
        all.into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| ModelError::UnknownStrategy(String::from(s)))
    }
}

/// Failures of request validation or model evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Underlying profile lookup failed.
    Profile(ProfileError),
    /// A collective over zero processes is meaningless.
    ZeroProcs,
    /// Messages are at least one byte.
    ZeroMessage,
    /// The strategy is not in the operation's catalog.
    StrategyMismatch {
        /// Requested operation.
        operation: Operation,
        /// Strategy that does not apply to it.
        strategy: Strategy,
    },
    /// A segmented strategy needs a segment size.
    MissingSegment {
        /// The strategy that required it.
        strategy: Strategy,
    },
    /// A segment size was given for a strategy that never segments.
    UnexpectedSegment {
        /// The strategy in question.
        strategy: Strategy,
    },
    /// γ must be finite, and the blended prediction must stay nonnegative.
    InvalidGamma(f64),
    /// Unrecognized strategy identifier.
    UnknownStrategy(String),
    /// Unrecognized operation identifier.
    UnknownOperation(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Profile(e) => write!(f, "{e}"),
            ModelError::ZeroProcs => f.write_str("process count must be at least 1"),
            ModelError::ZeroMessage => f.write_str("message size must be at least 1 byte"),
            ModelError::StrategyMismatch { operation, strategy } => {
                write!(f, "strategy '{strategy}' does not apply to {operation}")
            }
            ModelError::MissingSegment { strategy } => {
                write!(f, "strategy '{strategy}' requires a segment size (--segment)")
            }
            ModelError::UnexpectedSegment { strategy } => {
                write!(f, "strategy '{strategy}' does not take a segment size")
            }
            ModelError::InvalidGamma(v) => {
                write!(f, "congestion factor {v} does not yield a valid prediction")
            }
            ModelError::UnknownStrategy(s) => write!(f, "unknown strategy '{s}'"),
            ModelError::UnknownOperation(s) => write!(f, "unknown operation '{s}'"),
        }
    }
}

impl From<ProfileError> for ModelError {
    fn from(e: ProfileError) -> Self {
        ModelError::Profile(e)
    }
}

/// A fully specified prediction problem: which collective, how it is routed,
/// over how many processes, at what message (and optional segment) size.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveRequest {
    /// The collective operation.
    pub operation: Operation,
    /// The communication strategy.
    pub strategy: Strategy,
    /// Number of participating processes (≥ 1).
    pub procs: u32,
    /// Per-destination message size in bytes (≥ 1).
    pub message_bytes: u64,
    /// Segment size; present exactly for segmented strategies.
    pub segment_bytes: Option<u64>,
}

impl CollectiveRequest {
    /// Validates the combination and builds the request.
    pub fn new(
        operation: Operation,
        strategy: Strategy,
        procs: u32,
        message_bytes: u64,
        segment_bytes: Option<u64>,
    ) -> Result<Self, ModelError> {
        let req = CollectiveRequest { operation, strategy, procs, message_bytes, segment_bytes };
        req.validate()?;
        Ok(req)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.procs == 0 {
            return Err(ModelError::ZeroProcs);
        }
        if self.message_bytes == 0 {
            return Err(ModelError::ZeroMessage);
        }
        if !Strategy::catalog(self.operation).contains(&self.strategy) {
            return Err(ModelError::StrategyMismatch {
                operation: self.operation,
                strategy: self.strategy,
            });
        }
        match (self.strategy.is_segmented(), self.segment_bytes) {
            (true, None) => return Err(ModelError::MissingSegment { strategy: self.strategy }),
            (false, Some(_)) => {
                return Err(ModelError::UnexpectedSegment { strategy: self.strategy })
            }
            (true, Some(s)) => {
                Segmentation::for_message(self.message_bytes, s)?;
            }
            (false, None) => {}
        }
        Ok(())
    }

    fn segmentation(&self) -> Result<Segmentation, ModelError> {
        match self.segment_bytes {
            Some(s) => Ok(Segmentation::for_message(self.message_bytes, s)?),
            None => Err(ModelError::MissingSegment { strategy: self.strategy }),
        }
    }
}

/// One additive component of a prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    /// What the component pays for: `gap`, `latency`, `rendezvous`,
    /// `pipeline`, `send_overhead`, `recv_overhead`, `lower_bound`,
    /// `congestion` — or the markers `degenerate` / `upper_bound`.
    pub label: &'static str,
    /// Component cost in µs.
    pub value_us: f64,
}

/// A priced request. `total_us` always equals the sum of `terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// The request this prediction answers.
    pub request: CollectiveRequest,
    /// Predicted completion time in µs.
    pub total_us: f64,
    /// Additive breakdown of `total_us`.
    pub terms: Vec<Term>,
}

impl Prediction {
    fn from_terms(request: CollectiveRequest, terms: Vec<Term>) -> Self {
        let total_us = terms.iter().map(|t| t.value_us).sum();
        Prediction { request, total_us, terms }
    }

    fn degenerate(request: CollectiveRequest) -> Self {
        Prediction::from_terms(request, vec![Term { label: "degenerate", value_us: 0.0 }])
    }
}

/// The two all-to-all bounds as full predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct AllToAllBounds {
    /// Contention-free bound: the exchange is gap-limited at each sender.
    pub lower: Prediction,
    /// Fully serialized bound: every send and receive occupies its rank.
    pub upper: Prediction,
}

// ─── parameter shorthands ──────────────────────────────────────────────────

fn gap(net: &NetworkProfile, bytes: u64) -> Result<f64, ModelError> {
    Ok(net.param_at(Param::Gap, bytes)?)
}

/// ⌊log₂ p⌋ for p ≥ 1.
fn floor_log2(p: u32) -> u32 {
    p.ilog2()
}

/// ⌈log₂ p⌉ for p ≥ 1.
fn ceil_log2(p: u32) -> u32 {
    if p.is_power_of_two() {
        p.ilog2()
    } else {
        p.ilog2() + 1
    }
}

/// Handshake cost charged by the rendezvous variants: request and
/// acknowledgement at the 1-byte gap, then the payload's own latency.
fn rendezvous_cost(net: &NetworkProfile) -> Result<f64, ModelError> {
    Ok(2.0 * gap(net, 1)? + 3.0 * net.latency_us())
}

// ─── prediction entry points ───────────────────────────────────────────────

/// Prices `request` against `profile`, dispatching on operation and strategy.
///
/// For [`Operation::AllToAll`] this returns the optimistic (lower-bound)
/// form; use [`alltoall_bounds`] for the bracket or [`predict_alltoall`] for
/// a congestion-blended estimate.
pub fn predict(
    profile: &NetworkProfile,
    request: &CollectiveRequest,
) -> Result<Prediction, ModelError> {
    request.validate()?;
    match request.operation {
        Operation::Broadcast => broadcast_prediction(profile, request.clone()),
        Operation::Scatter => scatter_prediction(profile, request.clone()),
        Operation::AllToAll => Ok(alltoall_bounds_impl(profile, request.clone())?.lower),
    }
}

/// Prices a broadcast; `segment_bytes` is required exactly for the
/// segmented strategies.
pub fn predict_broadcast(
    profile: &NetworkProfile,
    strategy: Strategy,
    procs: u32,
    message_bytes: u64,
    segment_bytes: Option<u64>,
) -> Result<Prediction, ModelError> {
    let request = CollectiveRequest::new(
        Operation::Broadcast,
        strategy,
        procs,
        message_bytes,
        segment_bytes,
    )?;
    broadcast_prediction(profile, request)
}

/// Prices a scatter.
pub fn predict_scatter(
    profile: &NetworkProfile,
    strategy: Strategy,
    procs: u32,
    message_bytes: u64,
) -> Result<Prediction, ModelError> {
    let request =
        CollectiveRequest::new(Operation::Scatter, strategy, procs, message_bytes, None)?;
    scatter_prediction(profile, request)
}

/// Lower and upper bounds for the direct-exchange all-to-all.
///
/// No ordering between the two is asserted: on networks whose overheads are
/// cheap relative to the gap the "upper" bound can sit below the "lower"
/// one — they bracket different contention regimes, and measurements decide
/// where between them an implementation lands (see [`predict_alltoall`]).
pub fn alltoall_bounds(
    profile: &NetworkProfile,
    procs: u32,
    message_bytes: u64,
) -> Result<AllToAllBounds, ModelError> {
    let request = CollectiveRequest::new(
        Operation::AllToAll,
        Strategy::DirectExchange,
        procs,
        message_bytes,
        None,
    )?;
    alltoall_bounds_impl(profile, request)
}

/// All-to-all prediction blended between the bounds by the congestion
/// factor γ: `lower + (upper − lower)·γ`.
///
/// γ must be finite. Negative values are accepted — measurements can fall
/// below the optimistic bound — but logged at warn level; a γ so negative
/// that the blend would go below zero is rejected.
pub fn predict_alltoall(
    profile: &NetworkProfile,
    procs: u32,
    message_bytes: u64,
    gamma: f64,
) -> Result<Prediction, ModelError> {
    if !gamma.is_finite() {
        return Err(ModelError::InvalidGamma(gamma));
    }
    if gamma < 0.0 {
        log::warn!("congestion factor γ = {gamma} is negative; extrapolating below the lower bound");
    }
    let bounds = alltoall_bounds(profile, procs, message_bytes)?;
    if bounds.lower.request.procs == 1 {
        return Ok(bounds.lower); // degenerate already
    }
    let lo = bounds.lower.total_us;
    let spread = bounds.upper.total_us - lo;
    let terms = vec![
        Term { label: "lower_bound", value_us: lo },
        Term { label: "congestion", value_us: spread * gamma },
    ];
    let p = Prediction::from_terms(bounds.lower.request, terms);
    if p.total_us < 0.0 {
        return Err(ModelError::InvalidGamma(gamma));
    }
    Ok(p)
}

fn broadcast_prediction(
    net: &NetworkProfile,
    request: CollectiveRequest,
) -> Result<Prediction, ModelError> {
    if request.procs == 1 {
        return Ok(Prediction::degenerate(request));
    }
    let fanout = (request.procs - 1) as f64; // P − 1
    let lg_floor = floor_log2(request.procs) as f64;
    let lg_ceil = ceil_log2(request.procs) as f64;
    let m = request.message_bytes;
    let latency = net.latency_us();

    let terms = match request.strategy {
        Strategy::Flat => vec![
            Term { label: "gap", value_us: fanout * gap(net, m)? },
            Term { label: "latency", value_us: latency },
        ],
        Strategy::FlatRendezvous => vec![
            Term { label: "gap", value_us: fanout * gap(net, m)? },
            Term { label: "rendezvous", value_us: rendezvous_cost(net)? },
        ],
        Strategy::FlatSegmented => {
            let seg = request.segmentation()?;
            let per_dest = gap(net, seg.segment_bytes)? * seg.segment_count as f64;
            vec![
                Term { label: "gap", value_us: fanout * per_dest },
                Term { label: "latency", value_us: latency },
            ]
        }
        Strategy::Chain => vec![
            Term { label: "gap", value_us: fanout * gap(net, m)? },
            Term { label: "latency", value_us: fanout * latency },
        ],
        Strategy::ChainRendezvous => vec![
            Term { label: "gap", value_us: fanout * gap(net, m)? },
            Term { label: "rendezvous", value_us: fanout * rendezvous_cost(net)? },
        ],
        Strategy::ChainSegmented => {
            let seg = request.segmentation()?;
            let gs = gap(net, seg.segment_bytes)?;
            vec![
                Term { label: "gap", value_us: fanout * gs },
                Term { label: "latency", value_us: fanout * latency },
                Term { label: "pipeline", value_us: gs * (seg.segment_count - 1) as f64 },
            ]
        }
        Strategy::Binary => vec![
            Term { label: "gap", value_us: lg_ceil * 2.0 * gap(net, m)? },
            Term { label: "latency", value_us: lg_ceil * latency },
            Term { label: "upper_bound", value_us: 0.0 },
        ],
        Strategy::Binomial => vec![
            Term { label: "gap", value_us: lg_floor * gap(net, m)? },
            Term { label: "latency", value_us: lg_ceil * latency },
        ],
        Strategy::BinomialRendezvous => vec![
            Term { label: "gap", value_us: lg_floor * gap(net, m)? },
            Term { label: "rendezvous", value_us: lg_ceil * rendezvous_cost(net)? },
        ],
        Strategy::BinomialSegmented => {
            let seg = request.segmentation()?;
            let whole = gap(net, seg.segment_bytes)? * seg.segment_count as f64;
            vec![
                Term { label: "gap", value_us: lg_floor * whole },
                Term { label: "latency", value_us: lg_ceil * latency },
            ]
        }
        // catalog membership was validated above
        _ => unreachable!("non-broadcast strategy slipped through validation"),
    };
    Ok(Prediction::from_terms(request, terms))
}

fn scatter_prediction(
    net: &NetworkProfile,
    request: CollectiveRequest,
) -> Result<Prediction, ModelError> {
    if request.procs == 1 {
        return Ok(Prediction::degenerate(request));
    }
    let fanout = (request.procs - 1) as f64;
    let m = request.message_bytes;
    let latency = net.latency_us();

    let terms = match request.strategy {
        Strategy::Flat => vec![
            Term { label: "gap", value_us: fanout * gap(net, m)? },
            Term { label: "latency", value_us: latency },
        ],
        Strategy::Chain => {
            // hop i forwards the bundle for everyone downstream: j·m bytes
            let mut bundles = 0.0;
            for j in 1..request.procs as u64 {
                bundles += gap(net, j.saturating_mul(m))?;
            }
            vec![
                Term { label: "gap", value_us: bundles },
                Term { label: "latency", value_us: fanout * latency },
            ]
        }
        Strategy::Binomial => {
            // each round hands over half the remaining payload: 2ʲ·m bytes
            let rounds = ceil_log2(request.procs);
            let mut bundles = 0.0;
            for j in 0..rounds {
                bundles += gap(net, (1u64 << j).saturating_mul(m))?;
            }
            vec![
                Term { label: "gap", value_us: bundles },
                Term { label: "latency", value_us: rounds as f64 * latency },
            ]
        }
        _ => unreachable!("non-scatter strategy slipped through validation"),
    };
    Ok(Prediction::from_terms(request, terms))
}

fn alltoall_bounds_impl(
    net: &NetworkProfile,
    request: CollectiveRequest,
) -> Result<AllToAllBounds, ModelError> {
    if request.procs == 1 {
        return Ok(AllToAllBounds {
            lower: Prediction::degenerate(request.clone()),
            upper: Prediction::degenerate(request),
        });
    }
    let fanout = (request.procs - 1) as f64;
    let m = request.message_bytes;
    let latency = net.latency_us();

    let lower = Prediction::from_terms(
        request.clone(),
        vec![
            Term { label: "gap", value_us: fanout * gap(net, m)? },
            Term { label: "latency", value_us: latency },
        ],
    );
    let upper = Prediction::from_terms(
        request,
        vec![
            Term {
                label: "send_overhead",
                value_us: fanout * net.param_at(Param::SendOverhead, m)?,
            },
            Term {
                label: "recv_overhead",
                value_us: fanout * net.param_at(Param::RecvOverhead, m)?,
            },
            Term { label: "latency", value_us: latency },
        ],
    );
    Ok(AllToAllBounds { lower, upper })
}

// ─── tree shapes ───────────────────────────────────────────────────────────

/// An (arity, height) description of a regular distribution tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeShape {
    /// Fan-out d of every interior node (1 ≤ d ≤ P−1).
    pub arity: u32,
    /// Depth h of the tree (1 ≤ h ≤ P−1).
    pub height: u32,
}

/// Whether a regular tree of this shape can reach `procs` processes:
/// both dimensions must lie in [1, P−1] and Σ_{i=0..h} dⁱ ≥ P.
pub fn validate_tree_shape(shape: TreeShape, procs: u32) -> bool {
    if procs < 2 {
        return false;
    }
    let max = procs - 1;
    if shape.arity < 1 || shape.arity > max || shape.height < 1 || shape.height > max {
        return false;
    }
    let target = procs as u64;
    let d = shape.arity as u64;
    let mut level = 1u64; // dⁱ
    let mut reach = 1u64; // Σ dⁱ so far (i = 0)
    for _ in 0..shape.height {
        level = level.saturating_mul(d);
        reach = reach.saturating_add(level);
        if reach >= target {
            return true;
        }
    }
    reach >= target
}
