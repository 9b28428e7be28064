//! Benchmark harness for the unbounded-domain learners in `qbound`:
//! synthetic adversaries with known regret floors, a drifting regression
//! stream, experiment configuration, and a runner that writes per-round
//! CSV traces plus a JSON summary with certified regret bounds.

pub mod adversary;
pub mod config;
pub mod regression;
pub mod rng;
pub mod runner;
