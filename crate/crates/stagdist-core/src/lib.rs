//! Core estimation primitives for counterfactual distributions of untreated
//! potential outcomes in staggered difference-in-differences designs.
//!
//! The crate is `no_std` (with `alloc`): everything here is pure, allocation-
//! only numerics. File formats, resampling inference, simulation harnesses,
//! and the command-line interface live in the companion `stagdist` crate.
//!
//! Overview of the pipeline:
//!
//! 1. [`panel::BalancedPanel`] holds a validated unit-by-period outcome
//!    matrix with first-treatment cohort labels and a never-treated group.
//! 2. [`edf::Edf`] provides the right-continuous empirical CDF and its
//!    generalized-inverse quantile function that every estimator composes.
//! 3. [`counterfactual`] estimates the distribution the treated cohort's
//!    untreated outcome would have followed, by four routes: unconditional,
//!    inverse-probability-weighted, conditional on discrete covariates, and
//!    repeated cross sections under rank invariance.
//! 4. [`effects`] turns counterfactual distributions into cohort-time
//!    quantile treatment effects, aggregates them across cohorts and event
//!    times, and computes rank-correlation diagnostics.
//! 5. [`dominance`] computes generalized Kolmogorov-Smirnov statistics for
//!    first- and second-order stochastic dominance.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod counterfactual;
pub mod dominance;
pub mod edf;
pub mod effects;
pub mod panel;
pub mod propensity;
