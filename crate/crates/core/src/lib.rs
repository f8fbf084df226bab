//! Simulation and statistical inference for on-line conversation threads.
//!
//! Users comment with heavy-tailed (upper-truncated Pareto) waiting times,
//! topics stay visible for a site-specific exposure duration, and replies
//! attach to earlier comments by preferential attachment. From those
//! ingredients the crate
//!
//! * simulates single users' renewal processes and whole threads
//!   ([`renewal`], [`conversation`]),
//! * evaluates the closed-form size and in-degree laws the model predicts
//!   ([`conversation`]),
//! * fits waiting-time, exposure and size laws by maximum likelihood
//!   ([`distributions`]),
//! * measures growth curves, tails and in-degree structure of simulated or
//!   ingested corpora ([`analytics`], [`ingestion`]).
//!
//! The [`cli`] module backs the `threadgrowth` binary and [`validation`]
//! holds the Monte Carlo checks that `threadgrowth validate` runs.

pub mod analytics;
pub mod cli;
pub mod conversation;
pub mod distributions;
pub mod error;
pub mod ingestion;
pub mod renewal;
pub mod rng;
pub mod validation;

pub use error::{Error, Result};
