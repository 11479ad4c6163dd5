//! Companion crate to `stagdist-core`: file ingestion, bootstrap inference,
//! Monte Carlo simulation, and report serialization for the `stagdist`
//! command-line tool.
//!
//! The numerics live in `stagdist-core` (re-exported as [`core`]); this crate
//! adds everything that needs the standard library:
//!
//! * [`io`] — long-format CSV ingestion into validated panels.
//! * [`inference`] — pair-bootstrap uniform confidence bands and
//!   stochastic-dominance p-values.
//! * [`simulate`] — data-generating processes 1–5 with population-quantile
//!   oracles and a parallel Monte Carlo harness.
//! * [`report`] — CSV/JSON serialization of surfaces, bands, and simulation
//!   tables.

#![forbid(unsafe_code)]

pub use stagdist_core as core;

pub mod inference;
pub mod io;
pub mod report;
pub mod simulate;
