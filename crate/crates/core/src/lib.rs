//! News-sentiment and census migration-flow pipeline.
//!
//! Stages, in pipeline order:
//!
//! - [`corpus`]: stream newline-delimited article records.
//! - [`sentiment`]: VADER compound scores per article.
//! - [`tagger`]: which of the 50 states an article mentions.
//! - [`census`]: state-to-state migration flow tables.
//! - [`dataset`]: state-year sentiment grid joined with flows.
//! - [`model`]: logistic baseline and feedforward network, trained from scratch.
//! - [`eval`]: splits, mean absolute error, comparison and loss-curve reports.
//! - [`cli`]: the `pressflow` command line and synthetic fixture generator.

pub mod census;
pub mod cli;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod model;
pub mod sentiment;
pub mod states;
pub mod tagger;
