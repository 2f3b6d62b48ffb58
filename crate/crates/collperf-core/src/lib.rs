//! Performance prediction for MPI-style collective communications under the
//! pLogP network model.
//!
//! The crate is organized as a pipeline:
//!
//! * [`profile`] — validated pLogP parameter sets (latency L plus the
//!   size-dependent gap and overhead curves g, os, or), with
//!   piecewise-linear evaluation at arbitrary message sizes;
//! * [`models`] — closed-form completion-time predictions for broadcast,
//!   scatter and all-to-all under a catalog of communication strategies,
//!   with additive term breakdowns and tree-shape feasibility checks;
//! * [`simulator`] — an event-driven executor for the same strategies,
//!   written independently of the formulas so each cross-validates the
//!   other, under optimistic (port-overlap) or pessimistic (serialized)
//!   semantics;
//! * [`tuning`] — segment-size optimization, cheapest-strategy selection,
//!   and least-squares fitting of the all-to-all congestion factor γ to
//!   measured timings.
//!
//! The library is `no_std` (with `alloc`), so the prediction engine can be
//! embedded in tools, schedulers or firmware; IO lives in the companion CLI
//! crate.
//!
//! ```
//! use collperf_core::models::{predict_broadcast, Strategy};
//! use collperf_core::profile::{NetworkProfile, PLogPSample};
//!
//! let net = NetworkProfile::new(
//!     "lab",
//!     50.0, // L, µs
//!     vec![
//!         PLogPSample { bytes: 1, g_us: 10.01, os_us: 8.0, or_us: 7.0 },
//!         PLogPSample { bytes: 1000, g_us: 20.0, os_us: 14.0, or_us: 13.0 },
//!     ],
//! )
//! .unwrap();
//!
//! // a 4-process flat-tree broadcast of 1000 bytes: (P−1)·g(m) + L
//! let p = predict_broadcast(&net, Strategy::Flat, 4, 1000, None).unwrap();
//! assert!((p.total_us - 110.0).abs() < 1e-9);
//! ```

#![no_std]
#![deny(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod models;
pub mod profile;
pub mod simulator;
pub mod tuning;

impl core::error::Error for profile::ProfileError {}
impl core::error::Error for models::ModelError {}
impl core::error::Error for simulator::SimError {}
impl core::error::Error for tuning::TuningError {}
