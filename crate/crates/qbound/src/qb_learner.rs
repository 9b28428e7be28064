//! Comparator-adaptive learner for quadratically bounded losses on all of
//! R^d (or a centered ball). Needs only the growth certificate (G_max,
//! L_max) up front; per-round certificates (G_t, L_t) sharpen the
//! regularizer schedule. The regret certificate [`qb_regret_bound`] holds
//! simultaneously for every comparator norm without tuning.

use crate::core::{add_scaled, all_finite, norm, qb_check, scaled, QuadBound};
use crate::mirror::{cmd_step, psi_prime, CurveParams, SolveError};
use std::fmt;

/// What to do when an observed gradient breaks its declared certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationPolicy {
    /// Count it (and warn once on stderr) but keep going. The regret
    /// certificate is void for the run, which the count makes auditable.
    Warn,
    /// Refuse the step.
    Strict,
}

/// Static configuration of one learner instance.
#[derive(Clone, Copy, Debug)]
pub struct QBConfig {
    /// Regret budget at the origin: the bound at |u| = 0 is 2 eps G_max.
    pub eps: f64,
    /// Certified bound on every G_t.
    pub g_max: f64,
    /// Certified bound on every L_t. Zero turns the composite penalty and
    /// the quadratic regularizer term off entirely.
    pub l_max: f64,
    pub dim: usize,
    /// Log-regularizer weight.
    pub k: f64,
    /// Quadratic-regularizer weight.
    pub kappa: f64,
    /// Inflation of the initial gradient-variance estimate: V_1 = c G_max^2.
    pub c: f64,
    /// Radius of the feasible ball; infinite means unconstrained.
    pub domain_radius: f64,
    pub policy: ViolationPolicy,
}

impl QBConfig {
    /// Defaults: k = 3, kappa = 4, c = 4, unconstrained domain, Warn.
    pub fn new(eps: f64, g_max: f64, l_max: f64, dim: usize) -> Self {
        let cfg = QBConfig {
            eps,
            g_max,
            l_max,
            dim,
            k: 3.0,
            kappa: 4.0,
            c: 4.0,
            domain_radius: f64::INFINITY,
            policy: ViolationPolicy::Warn,
        };
        cfg.validate();
        cfg
    }

    pub fn validate(&self) {
        assert!(
            self.eps > 0.0 && self.eps.is_finite(),
            "eps must be positive"
        );
        assert!(
            self.g_max > 0.0 && self.g_max.is_finite(),
            "g_max must be positive"
        );
        assert!(
            self.l_max >= 0.0 && self.l_max.is_finite(),
            "l_max must be nonnegative"
        );
        assert!(self.dim >= 1, "dim must be at least 1");
        assert!(self.k > 0.0 && self.k.is_finite(), "k must be positive");
        assert!(
            self.kappa >= 0.0 && self.kappa.is_finite(),
            "kappa must be nonnegative"
        );
        // c > 1 keeps ln(V / G_max^2) bounded away from zero at t = 1.
        assert!(self.c > 1.0 && self.c.is_finite(), "c must exceed 1");
        assert!(self.domain_radius > 0.0, "domain_radius must be positive");
    }
}

/// Evolving state. After T completed steps the fields hold the round-(T+1)
/// regularizer: `v`, `alpha`, `rho_inv` are exactly the quantities the
/// anytime regret certificate at horizon T is stated with.
#[derive(Clone, Debug)]
pub struct QBState {
    /// Index of the next round to be played (1-based).
    pub t: u64,
    pub w: Vec<f64>,
    /// Sum of G_s^2 over completed rounds.
    pub sum_g2: f64,
    /// Sum of L_s^2 over completed rounds.
    pub sum_l2: f64,
    /// Variance estimate V_t = c G_max^2 + sum_{s<t} G_s^2.
    pub v: f64,
    /// Log-curve offset alpha_t.
    pub alpha: f64,
    /// Quadratic-curve slope 1/rho_t = sqrt(L_max^2 + sum_{s<t} L_s^2).
    pub rho_inv: f64,
    /// Rounds whose gradient broke its certificate (Warn policy only).
    pub violations: u64,
}

fn alpha_for(cfg: &QBConfig, v: f64) -> f64 {
    let r = v / (cfg.g_max * cfg.g_max);
    cfg.eps * cfg.g_max / (v.sqrt() * r.ln().powi(2))
}

fn curve_of(cfg: &QBConfig, v: f64, alpha: f64, rho_inv: f64) -> CurveParams {
    CurveParams {
        k: cfg.k,
        v,
        alpha,
        g_max: cfg.g_max,
        kappa: cfg.kappa,
        rho_inv,
    }
}

/// Fresh state at the origin with the round-1 regularizer.
pub fn qb_init(cfg: &QBConfig) -> QBState {
    cfg.validate();
    let v = cfg.c * cfg.g_max * cfg.g_max;
    QBState {
        t: 1,
        w: vec![0.0; cfg.dim],
        sum_g2: 0.0,
        sum_l2: 0.0,
        v,
        alpha: alpha_for(cfg, v),
        rho_inv: cfg.l_max,
        violations: 0,
    }
}

/// A step refusal.
#[derive(Clone, Debug, PartialEq)]
pub enum StepError {
    /// Strict policy: the gradient broke its certificate.
    Violation {
        round: u64,
        grad_norm: f64,
        allowed: f64,
    },
    Solve(SolveError),
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::Violation {
                round,
                grad_norm,
                allowed,
            } => write!(
                f,
                "round {round}: gradient norm {grad_norm} exceeds certified {allowed}"
            ),
            StepError::Solve(e) => write!(f, "mirror step failed: {e}"),
        }
    }
}

impl std::error::Error for StepError {}

impl From<SolveError> for StepError {
    fn from(e: SolveError) -> Self {
        StepError::Solve(e)
    }
}

/// Consumes one round: the gradient `g` observed at the current iterate,
/// with its per-round certificate (G_t, L_t). Advances the iterate by one
/// centered mirror-descent step against the composite surrogate
///   g_tilde = g + (L_t^2 / sqrt(sum_{s<=t} L_s^2)) w_t,
/// whose second term prices the curvature the raw linearization discards.
pub fn qb_step(
    cfg: &QBConfig,
    st: &mut QBState,
    g: &[f64],
    g_t: f64,
    l_t: f64,
) -> Result<(), StepError> {
    assert_eq!(g.len(), cfg.dim, "qb_step: gradient dimension mismatch");
    assert!(all_finite(g), "qb_step: non-finite gradient");
    assert!(
        (0.0..=cfg.g_max).contains(&g_t),
        "qb_step: G_t out of [0, g_max]"
    );
    assert!(
        (0.0..=cfg.l_max).contains(&l_t),
        "qb_step: L_t out of [0, l_max]"
    );

    if !qb_check(g, &st.w, QuadBound::new(g_t, l_t)) {
        let grad_norm = norm(g);
        let allowed = g_t + l_t * norm(&st.w);
        match cfg.policy {
            ViolationPolicy::Strict => {
                return Err(StepError::Violation {
                    round: st.t,
                    grad_norm,
                    allowed,
                });
            }
            ViolationPolicy::Warn => {
                if st.violations == 0 {
                    eprintln!(
                        "warning: round {}: gradient norm {} exceeds certified {}; \
                         regret certificate void for this run",
                        st.t, grad_norm, allowed
                    );
                }
                st.violations += 1;
            }
        }
    }

    // Round-t curve, snapshotted before the state rolls forward.
    let cur = curve_of(cfg, st.v, st.alpha, st.rho_inv);
    let w_norm = norm(&st.w);
    let grad_psi = if w_norm == 0.0 {
        vec![0.0; cfg.dim]
    } else {
        scaled(&st.w, psi_prime(&cur, w_norm) / w_norm)
    };

    // The penalty coefficient divides by the running sum including L_t.
    st.sum_l2 += l_t * l_t;
    let coeff = if st.sum_l2 > 0.0 {
        l_t * l_t / st.sum_l2.sqrt()
    } else {
        0.0
    };
    let g_tilde = add_scaled(g, coeff, &st.w);

    st.sum_g2 += g_t * g_t;
    let v_next = cfg.c * cfg.g_max * cfg.g_max + st.sum_g2;
    let alpha_next = alpha_for(cfg, v_next);
    let rho_inv_next = (cfg.l_max * cfg.l_max + st.sum_l2).sqrt();
    let next = curve_of(cfg, v_next, alpha_next, rho_inv_next);

    let w_next = cmd_step(
        &st.w,
        &grad_psi,
        &g_tilde,
        |x| psi_prime(&next, x),
        cfg.domain_radius,
    )?;

    st.w = w_next;
    st.v = v_next;
    st.alpha = alpha_next;
    st.rho_inv = rho_inv_next;
    st.t += 1;
    Ok(())
}

/// Anytime regret certificate after however many steps the state has
/// absorbed: for every comparator u with |u| = `u_norm`, the linearized
/// regret sum_t <g~_t, w_t - u> is at most
///   2 eps G_max + kappa |u|^2 / rho_{T+1}
///     + 2 k |u| max( sqrt(V_{T+1} F), G_max F ),   F = ln(|u|/alpha_{T+1} + 1).
///
/// Valid only when every round's certificate held (state `violations` = 0).
pub fn qb_regret_bound(cfg: &QBConfig, st: &QBState, u_norm: f64) -> f64 {
    assert!(u_norm >= 0.0, "qb_regret_bound: negative comparator norm");
    let f = (u_norm / st.alpha).ln_1p();
    2.0 * cfg.eps * cfg.g_max
        + cfg.kappa * u_norm * u_norm * st.rho_inv
        + 2.0 * cfg.k * u_norm * ((st.v * f).sqrt().max(cfg.g_max * f))
}
