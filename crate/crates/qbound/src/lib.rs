//! Online learning on unbounded domains under quadratically bounded losses.
//!
//! The crate provides, in dependency order:
//!
//! - [`core`]: vector helpers, the `(G, L)` gradient-growth certificate and
//!   its per-round checks, and a regret ledger for bookkeeping against fixed
//!   or drifting comparator paths.
//! - [`mirror`]: the centered mirror-descent step for radially symmetric
//!   regularizers, reduced to a scalar link inversion, and the
//!   scaled-entropy argmin on the simplex.
//! - [`qb_learner`]: the comparator-adaptive learner for quadratically
//!   bounded losses, with its anytime regret certificate.
//! - [`experts`]: multi-scale fixed-share experts built on the
//!   scaled-entropy step.
//! - [`dynamic`]: the two-level meta-algorithm for dynamic regret, combining
//!   a grid of clipped gradient-descent experts through [`experts`].
//! - [`saddle`]: reduction of convex-concave saddle points to a single
//!   quadratically bounded online problem, with duality-gap evaluation.

pub mod core;
pub mod dynamic;
pub mod experts;
pub mod mirror;
pub mod qb_learner;
pub mod saddle;
