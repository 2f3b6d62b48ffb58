//! File formats and output plumbing for the `collperf` command-line tool.
//!
//! The modeling itself lives in [`collperf_core`]; this crate adds what a
//! batch tool needs around it:
//!
//! * [`formats`] — the on-disk encodings: pLogP profiles as JSON or
//!   whitespace columns, all-to-all measurement CSV, and the simulator
//!   trace CSV. Every format round-trips exactly.
//! * [`record`] — flat output records rendered as CSV rows or JSON
//!   objects, with one shared numeric formatting (shortest round-trip,
//!   padded to at least 9 significant digits) so both renderings carry
//!   identical values.
//!
//! The binary (`collperf`) wires these into the `predict`, `compare`,
//! `curve`, `optimize-segment`, `select`, `fit-gamma`, and `simulate`
//! subcommands.

#![deny(unsafe_code)]
#![warn(missing_docs)]

pub mod formats;
pub mod record;
