//! Toolkit for finding common ground in group dialogues.
//!
//! The pipeline takes a bundle of dialogue data (participants split into
//! stipulated groups, candidate statements, and sparse agree/disagree votes)
//! and produces a small set of collective statements together with
//! equal-power vote tallies:
//!
//! 1. [`completion`] fills in unobserved votes with a logistic matrix
//!    factorization so every participant has a stance on every statement.
//! 2. [`bridging`] ranks statements by cross-group support, using both
//!    max-min group agreement and a latent factor model, and selects a
//!    bridging set.
//! 3. [`distill`] condenses the bridging set into distinct ideas and
//!    articulates one collective statement per idea through a pluggable
//!    text-generation backend (a deterministic stub ships for offline use).
//! 4. [`tally`] scores final Likert and ranking votes with equal-power
//!    metrics: max-min Likert agreement, group-averaged Dowdall points, and
//!    instant-runoff ranks computed from group-averaged first-place shares.
//!
//! [`pipeline`] wires the stages together behind persisted JSON artifacts,
//! [`synth`] generates synthetic dialogues with planted structure for
//! benchmarking, and [`model`] holds the shared domain types and bundle I/O.
//!
//! All randomness flows from a single seed through named per-stage
//! sub-seeds, and all emitted JSON is canonical (sorted keys, LF line
//! endings), so every run is reproducible byte for byte.

pub mod bridging;
pub mod canonical;
pub mod completion;
pub mod distill;
pub mod model;
pub mod pipeline;
pub mod seeds;
pub mod synth;
pub mod tally;
