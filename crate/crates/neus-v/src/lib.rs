//! Temporal-logic alignment scoring for generated videos.
//!
//! The pipeline turns a text prompt into per-mode temporal-logic
//! specifications, collects per-window proposition confidences from a
//! perception client, builds a layered discrete-time Markov chain out of
//! them, computes the probability that the chain's traces satisfy each
//! specification, and calibrates those probabilities into a final score
//! through reference score distributions.
//!
//! Modules, in pipeline order:
//! - [`tl`]: formula AST, parser, and finite-trace semantics;
//! - [`puls`]: LLM-backed prompt-to-specification translation;
//! - [`perception`]: proposition confidence clients and threshold calibration;
//! - [`automaton`]: confidence calibration and video automaton construction;
//! - [`checker`]: satisfaction probability;
//! - [`scoring`]: ECDF score calibration and aggregation;
//! - [`formats`]: the JSON/CSV file formats shared with the CLI;
//! - [`pipeline`]: end-to-end evaluation and benchmarking.

pub mod automaton;
pub mod checker;
pub mod formats;
pub mod perception;
pub mod pipeline;
pub mod puls;
pub mod scoring;
pub mod tl;

mod transport;
