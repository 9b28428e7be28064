//! Multi-scale fixed-share experts. Each expert i lives at its own loss
//! scale mu_i (it must only promise mu_i |loss_i| <= 1), and the aggregator
//! pays in the bound only the scale of the expert it is compared against,
//! not the worst scale in the pool. The update is one scaled-entropy step
//! against quadratically corrected costs, followed by mixing a fixed share
//! of the initial prior back in.

use crate::mirror::{scaled_entropy_argmin, ScaledEntropyProblem, SolveError};
use crate::qb_learner::ViolationPolicy;
use std::fmt;

/// Fixed-share mixing rate per round.
#[derive(Clone, Debug)]
pub enum BetaSchedule {
    Constant(f64),
    /// beta_t for t = 1, 2, ...; indexing past the end panics.
    PerRound(Vec<f64>),
}

impl BetaSchedule {
    /// Mixing rate used after consuming round t (1-based).
    pub fn at(&self, t: u64) -> f64 {
        match self {
            BetaSchedule::Constant(b) => *b,
            BetaSchedule::PerRound(v) => v[(t - 1) as usize],
        }
    }

    /// Largest constant rate compatible with the regret certificate at
    /// horizon T: beta = 1 - exp(-1/T).
    pub fn for_horizon(t_horizon: u64) -> Self {
        assert!(t_horizon >= 1, "horizon must be at least 1");
        BetaSchedule::Constant(-(-1.0 / t_horizon as f64).exp_m1())
    }
}

#[derive(Clone, Debug)]
pub struct ExpertsConfig {
    /// Per-expert scales mu_i > 0.
    pub mu: Vec<f64>,
    /// Entropy weight.
    pub k: f64,
    /// Initial prior, strictly positive on the simplex.
    pub p1: Vec<f64>,
    pub beta: BetaSchedule,
    pub policy: ViolationPolicy,
}

impl ExpertsConfig {
    /// Defaults: k = 9/2, prior p1_i proportional to mu_i^2, and the
    /// horizon-matched constant mixing rate.
    pub fn with_defaults(mu: Vec<f64>, t_horizon: u64) -> Self {
        let sum_sq: f64 = mu.iter().map(|m| m * m).sum();
        assert!(sum_sq > 0.0, "scales must not all be zero");
        let p1 = mu.iter().map(|m| m * m / sum_sq).collect();
        let cfg = ExpertsConfig {
            mu,
            k: 4.5,
            p1,
            beta: BetaSchedule::for_horizon(t_horizon),
            policy: ViolationPolicy::Warn,
        };
        cfg.validate();
        cfg
    }

    pub fn validate(&self) {
        let n = self.mu.len();
        assert!(n >= 1, "need at least one expert");
        assert_eq!(self.p1.len(), n, "prior length mismatch");
        assert!(
            self.mu.iter().all(|&m| m > 0.0 && m.is_finite()),
            "scales must be positive"
        );
        assert!(self.k > 0.0 && self.k.is_finite(), "k must be positive");
        assert!(
            self.p1.iter().all(|&p| p > 0.0 && p.is_finite()),
            "prior must be strictly positive"
        );
        assert!(
            (self.p1.iter().sum::<f64>() - 1.0).abs() <= 1e-12,
            "prior must sum to 1"
        );
        let beta_ok = |b: f64| (0.0..1.0).contains(&b);
        match &self.beta {
            BetaSchedule::Constant(b) => assert!(beta_ok(*b), "beta out of [0, 1)"),
            BetaSchedule::PerRound(v) => {
                assert!(v.iter().all(|&b| beta_ok(b)), "beta out of [0, 1)")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExpertsState {
    /// Weights to play this round.
    pub p: Vec<f64>,
    /// Last entropy-step solution, before fixed-share mixing.
    pub q: Vec<f64>,
    /// Index of the next round to be consumed (1-based).
    pub t: u64,
    /// Rounds where some expert broke its scale promise (Warn policy only).
    pub scale_violations: u64,
}

pub fn experts_init(cfg: &ExpertsConfig) -> ExpertsState {
    cfg.validate();
    ExpertsState {
        p: cfg.p1.clone(),
        q: cfg.p1.clone(),
        t: 1,
        scale_violations: 0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExpertsError {
    /// Strict policy: expert `index` reported a loss outside its scale.
    ScaleViolation {
        round: u64,
        index: usize,
        product: f64,
    },
    Solve(SolveError),
}

impl fmt::Display for ExpertsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpertsError::ScaleViolation {
                round,
                index,
                product,
            } => write!(
                f,
                "round {round}: expert {index} loss scale product {product} exceeds 1"
            ),
            ExpertsError::Solve(e) => write!(f, "entropy step failed: {e}"),
        }
    }
}

impl std::error::Error for ExpertsError {}

impl From<SolveError> for ExpertsError {
    fn from(e: SolveError) -> Self {
        ExpertsError::Solve(e)
    }
}

/// Consumes one round of expert losses. Costs are the losses plus their
/// scale-weighted squares, c_i = loss_i + mu_i loss_i^2; the next weights
/// are the scaled-entropy step from the current ones, mixed with the
/// initial prior at this round's fixed-share rate.
///
/// Losses are required to satisfy mu_i |loss_i| <= 1. They are never
/// clipped: a violation is counted (Warn) or refused (Strict), because a
/// silently clipped loss would desynchronize the aggregator from the
/// experts it is aggregating.
pub fn experts_update(
    cfg: &ExpertsConfig,
    st: &mut ExpertsState,
    losses: &[f64],
) -> Result<(), ExpertsError> {
    let n = cfg.mu.len();
    assert_eq!(
        losses.len(),
        n,
        "experts_update: loss vector length mismatch"
    );
    assert!(
        losses.iter().all(|l| l.is_finite()),
        "experts_update: non-finite loss"
    );

    for (i, (&l, &m)) in losses.iter().zip(&cfg.mu).enumerate() {
        let product = m * l.abs();
        if product > 1.0 + 1e-12 {
            match cfg.policy {
                ViolationPolicy::Strict => {
                    return Err(ExpertsError::ScaleViolation {
                        round: st.t,
                        index: i,
                        product,
                    });
                }
                ViolationPolicy::Warn => {
                    if st.scale_violations == 0 {
                        eprintln!(
                            "warning: round {}: expert {} loss scale product {} exceeds 1; \
                             regret certificate void for this run",
                            st.t, i, product
                        );
                    }
                    st.scale_violations += 1;
                    break;
                }
            }
        }
    }

    let costs: Vec<f64> = losses
        .iter()
        .zip(&cfg.mu)
        .map(|(&l, &m)| l + m * l * l)
        .collect();
    let q = scaled_entropy_argmin(&ScaledEntropyProblem {
        prior: st.p.clone(),
        costs,
        scales: cfg.mu.clone(),
        k: cfg.k,
    })?;
    let beta = cfg.beta.at(st.t);
    st.p = q
        .iter()
        .zip(&cfg.p1)
        .map(|(&qi, &pi)| (1.0 - beta) * qi + beta * pi)
        .collect();
    st.q = q;
    st.t += 1;
    Ok(())
}

/// Regret certificate against a fixed simplex comparator u after the given
/// loss history: sum_t <loss_t, p_t - u> is at most
///
///   sum_i u_i [ k (ln(u_i / p1_i) + 1) / mu_i + mu_i sum_t loss_{t,i}^2 ]
///     + 2 k sum_i p1_i / mu_i,
///
/// with 0 ln 0 = 0. Requires every round's mixing rate at or below the
/// horizon-matched 1 - exp(-1/T) and every loss within its scale.
pub fn experts_meta_bound(cfg: &ExpertsConfig, u: &[f64], loss_history: &[Vec<f64>]) -> f64 {
    let n = cfg.mu.len();
    assert_eq!(u.len(), n, "comparator length mismatch");
    assert!(
        u.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)),
        "comparator must be componentwise in [0, 1]"
    );
    assert!(
        (u.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
        "comparator must lie on the simplex"
    );
    let t_len = loss_history.len() as u64;
    assert!(t_len >= 1, "empty loss history");
    let beta_cap = -(-1.0 / t_len as f64).exp_m1();
    for t in 1..=t_len {
        assert!(
            cfg.beta.at(t) <= beta_cap + 1e-15,
            "mixing rate at round {t} exceeds the horizon-matched cap"
        );
    }

    let mut bound = 0.0;
    for i in 0..n {
        if u[i] > 0.0 {
            let sum_sq: f64 = loss_history.iter().map(|l| l[i] * l[i]).sum();
            bound +=
                u[i] * (cfg.k * ((u[i] / cfg.p1[i]).ln() + 1.0) / cfg.mu[i] + cfg.mu[i] * sum_sq);
        }
        bound += 2.0 * cfg.k * cfg.p1[i] / cfg.mu[i];
    }
    bound
}
