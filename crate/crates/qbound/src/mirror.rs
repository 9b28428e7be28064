//! The two numerical kernels every learner here stands on: the centered
//! mirror-descent step for radially symmetric regularizers, reduced to a
//! one-dimensional link inversion, and the scaled-entropy simplex argmin
//! behind the multi-scale experts update.

use crate::core::{norm, scaled};
use std::fmt;

/// Failure of one of the scalar solvers. Both kernels bracket by doubling
/// and then bisect; running out of doublings or iterations signals a
/// malformed curve or problem rather than a tolerance issue.
#[derive(Clone, Debug, PartialEq)]
pub enum SolveError {
    /// Bracket expansion never enclosed the target.
    NoBracket { target: f64 },
    /// Bisection hit its iteration cap with the residual still too large.
    IterationCap { residual: f64, tol: f64 },
    /// The problem violates a structural invariant (bad simplex, bad scale).
    BadProblem(&'static str),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NoBracket { target } => {
                write!(f, "bracket expansion failed to enclose target {target}")
            }
            SolveError::IterationCap { residual, tol } => {
                write!(
                    f,
                    "bisection stalled at residual {residual:e} (tolerance {tol:e})"
                )
            }
            SolveError::BadProblem(what) => write!(f, "malformed problem: {what}"),
        }
    }
}

impl std::error::Error for SolveError {}

/// Constants of one radially symmetric regularizer
///   psi(w) = Psi(|w|) + (kappa / (2 rho)) |w|^2,
/// held as the scalar derivative's parameters. `rho_inv` is 1/rho; zero
/// disables the quadratic component.
#[derive(Clone, Copy, Debug)]
pub struct CurveParams {
    pub k: f64,
    pub v: f64,
    pub alpha: f64,
    pub g_max: f64,
    pub kappa: f64,
    pub rho_inv: f64,
}

/// Scalar derivative of the regularizer at radius x:
///
///   Psi'(x) = 2 k sqrt(V F(x))        while G_max sqrt(F(x)) <= sqrt(V),
///           = k (G_max F(x) + V/G_max) beyond that,
///
/// plus the quadratic term (kappa / rho) x, where F(x) = ln(x/alpha + 1).
/// The case split is the closed form of the inner minimization; it is never
/// re-minimized numerically. Nondecreasing, and 0 at x = 0.
pub fn psi_prime(p: &CurveParams, x: f64) -> f64 {
    assert!(x >= 0.0, "psi_prime: negative radius");
    let f = (x / p.alpha).ln_1p();
    let log_part = if p.g_max * f.sqrt() <= p.v.sqrt() {
        2.0 * p.k * (p.v * f).sqrt()
    } else {
        p.k * (p.g_max * f + p.v / p.g_max)
    };
    log_part + p.kappa * p.rho_inv * x
}

/// Solves R'(x) = target for a continuous nondecreasing R' with R'(0) = 0,
/// clamped to [0, cap]. Brackets by doubling from 1 (at most 120 doublings),
/// then bisects (at most 200 iterations) until
/// |R'(x) - target| <= 1e-10 (1 + target).
///
/// Returns 0 when target = 0 and `cap` when the curve never reaches the
/// target inside the domain.
pub fn link_inverse(deriv: impl Fn(f64) -> f64, target: f64, cap: f64) -> Result<f64, SolveError> {
    assert!(target >= 0.0, "link_inverse: negative target");
    assert!(cap > 0.0, "link_inverse: cap must be positive");
    if target == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-10 * (1.0 + target);
    if cap.is_finite() && deriv(cap) <= target {
        return Ok(cap);
    }
    // Invariant: deriv(lo) < target <= deriv(hi).
    let mut lo = 0.0;
    let mut hi = if cap.is_finite() { cap.min(1.0) } else { 1.0 };
    let mut doublings = 0;
    while deriv(hi) < target {
        lo = hi;
        hi = if cap.is_finite() {
            (hi * 2.0).min(cap)
        } else {
            hi * 2.0
        };
        doublings += 1;
        if doublings > 120 {
            return Err(SolveError::NoBracket { target });
        }
    }
    let mut mid = 0.5 * (lo + hi);
    let mut residual = deriv(mid) - target;
    for _ in 0..200 {
        if residual.abs() <= tol {
            return Ok(mid);
        }
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        residual = deriv(mid) - target;
    }
    Err(SolveError::IterationCap {
        residual: residual.abs(),
        tol,
    })
}

/// One centered mirror-descent step with adjustment, for radially symmetric
/// regularizers over all of R^d or a centered ball.
///
/// The update argmin_w <g_tilde, w> + D_{psi_t}(w | w_t) + (psi_{t+1} - psi_t)(w)
/// collapses, up to constants, to argmin_w psi_{t+1}(w) - <theta, w> with
/// theta = grad psi_t(w_t) - g_tilde. Radial symmetry forces the minimizer
/// onto the ray through theta, where its radius solves R'_{t+1}(x) = |theta|.
/// A vanishing theta resolves to the regularizer's minimizer, the origin.
pub fn cmd_step(
    w: &[f64],
    grad_psi_at_w: &[f64],
    g_tilde: &[f64],
    next_deriv: impl Fn(f64) -> f64,
    domain_radius: f64,
) -> Result<Vec<f64>, SolveError> {
    assert_eq!(w.len(), grad_psi_at_w.len(), "cmd_step: dimension mismatch");
    assert_eq!(w.len(), g_tilde.len(), "cmd_step: dimension mismatch");
    let theta: Vec<f64> = grad_psi_at_w
        .iter()
        .zip(g_tilde)
        .map(|(a, b)| a - b)
        .collect();
    let tn = norm(&theta);
    if tn == 0.0 {
        return Ok(vec![0.0; w.len()]);
    }
    let x = link_inverse(next_deriv, tn, domain_radius)?;
    Ok(scaled(&theta, x / tn))
}

/// One scaled-entropy step on the simplex: minimize
///   sum_i c_i q_i + D_psi(q | p)  over the simplex,
/// where psi(q) = sum_i (k / mu_i) integral_0^{q_i} ln v dv.
#[derive(Clone, Debug)]
pub struct ScaledEntropyProblem {
    /// Strictly positive prior on the simplex.
    pub prior: Vec<f64>,
    /// Per-coordinate linear costs.
    pub costs: Vec<f64>,
    /// Per-coordinate scales mu_i > 0.
    pub scales: Vec<f64>,
    /// Entropy weight k > 0.
    pub k: f64,
}

impl ScaledEntropyProblem {
    fn validate(&self) -> Result<(), SolveError> {
        let n = self.prior.len();
        if n == 0 || self.costs.len() != n || self.scales.len() != n {
            return Err(SolveError::BadProblem("length mismatch"));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(SolveError::BadProblem("k must be positive and finite"));
        }
        if self.prior.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(SolveError::BadProblem("prior entries must be positive"));
        }
        if (self.prior.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(SolveError::BadProblem("prior must sum to 1"));
        }
        if self.scales.iter().any(|&m| m <= 0.0 || !m.is_finite()) {
            return Err(SolveError::BadProblem("scales must be positive"));
        }
        if self.costs.iter().any(|c| !c.is_finite()) {
            return Err(SolveError::BadProblem("costs must be finite"));
        }
        Ok(())
    }
}

/// Solves the scaled-entropy step. Stationarity gives
///   q_i(lambda) = p_i exp(-mu_i (c_i + lambda) / k)
/// with lambda the unique root of sum_i q_i(lambda) = 1 (strictly decreasing
/// in lambda since every mu_i > 0). The root is bracketed by doubling from
/// lambda = 0 with step 1 and then bisected; all exponentials go through a
/// max-shifted log-sum-exp so widely spread scales cannot overflow. The
/// result is renormalized to unit sum, leaving the KKT residual
///   max_i |(k/mu_i) ln(q_i/p_i) + c_i + lambda|
/// at most 1e-8 (1 + max_i |c_i|).
pub fn scaled_entropy_argmin(problem: &ScaledEntropyProblem) -> Result<Vec<f64>, SolveError> {
    problem.validate()?;
    let n = problem.prior.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let k = problem.k;
    let log_weights = |lambda: f64| -> Vec<f64> {
        (0..n)
            .map(|i| problem.prior[i].ln() - problem.scales[i] * (problem.costs[i] + lambda) / k)
            .collect()
    };
    // ln sum_i q_i(lambda); strictly decreasing in lambda.
    let log_sum = |lambda: f64| -> f64 {
        let e = log_weights(lambda);
        let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + e.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    };

    let max_c = problem.costs.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    let mu_min = problem.scales.iter().cloned().fold(f64::INFINITY, f64::min);
    // After exact renormalization the residual is (k/mu_i) |ln sum q|, so the
    // KKT budget translates into a tolerance on ln sum q at the smallest scale.
    let kkt_tol = 1e-8 * (1.0 + max_c);
    let ls_tol = kkt_tol * mu_min / k;

    let mut lo;
    let mut hi;
    let ls0 = log_sum(0.0);
    if ls0 >= 0.0 {
        lo = 0.0;
        hi = 1.0;
        let mut doublings = 0;
        while log_sum(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 120 {
                return Err(SolveError::NoBracket { target: 0.0 });
            }
        }
    } else {
        hi = 0.0;
        lo = -1.0;
        let mut doublings = 0;
        while log_sum(lo) < 0.0 {
            hi = lo;
            lo *= 2.0;
            doublings += 1;
            if doublings > 120 {
                return Err(SolveError::NoBracket { target: 0.0 });
            }
        }
    }

    let mut lambda = 0.5 * (lo + hi);
    let mut ls = log_sum(lambda);
    let mut iterations = 0;
    while ls.abs() > ls_tol {
        if ls > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        lambda = 0.5 * (lo + hi);
        ls = log_sum(lambda);
        iterations += 1;
        if iterations > 200 {
            return Err(SolveError::IterationCap {
                residual: ls.abs() * k / mu_min,
                tol: kkt_tol,
            });
        }
    }

    let e = log_weights(lambda);
    let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = e.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = shifted.iter().sum();
    let mut q: Vec<f64> = shifted.into_iter().map(|x| x / s).collect();
    let total: f64 = q.iter().sum();
    for qi in &mut q {
        *qi /= total;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(x: f64) -> f64 {
        x
    }

    #[test]
    fn psi_prime_matches_both_cases_and_origin() {
        let p = CurveParams {
            k: 3.0,
            v: 4.0,
            alpha: 0.37,
            g_max: 1.0,
            kappa: 4.0,
            rho_inv: 0.0,
        };
        // x with F(x) = 1 lands in the first case: 2 * 3 * sqrt(4) = 12.
        let x1 = p.alpha * (1f64.exp() - 1.0);
        assert!((psi_prime(&p, x1) - 12.0).abs() < 1e-9);
        // F(x) = 9 crosses into the second case: 3 * (9 + 4) = 39.
        let x9 = p.alpha * (9f64.exp() - 1.0);
        assert!((psi_prime(&p, x9) - 39.0).abs() < 1e-8);
        assert_eq!(psi_prime(&p, 0.0), 0.0);
    }

    #[test]
    fn psi_prime_continuous_at_case_boundary() {
        let p = CurveParams {
            k: 5.0,
            v: 2.5,
            alpha: 0.01,
            g_max: 1.3,
            kappa: 4.0,
            rho_inv: 0.7,
        };
        // The cases meet where F = V / G^2.
        let f_star = p.v / (p.g_max * p.g_max);
        let x_star = p.alpha * (f_star.exp() - 1.0);
        let below = psi_prime(&p, x_star * (1.0 - 1e-9));
        let above = psi_prime(&p, x_star * (1.0 + 1e-9));
        assert!((below - above).abs() < 1e-6 * (1.0 + below.abs()));
    }

    #[test]
    fn link_inverse_trivial_and_analytic() {
        assert_eq!(link_inverse(identity, 0.0, f64::INFINITY).unwrap(), 0.0);
        let x = link_inverse(identity, 2.0, f64::INFINITY).unwrap();
        assert!((x - 2.0).abs() < 1e-9);
        let x = link_inverse(|x: f64| x.ln_1p(), 1.0, f64::INFINITY).unwrap();
        assert!((x - (1f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn link_inverse_respects_cap() {
        let x = link_inverse(identity, 10.0, 3.0).unwrap();
        assert_eq!(x, 3.0);
    }

    #[test]
    fn link_inverse_rejects_flat_curve() {
        let err = link_inverse(|_| 0.5, 2.0, f64::INFINITY).unwrap_err();
        assert!(matches!(err, SolveError::NoBracket { .. }));
    }

    #[test]
    fn cmd_step_zero_theta_returns_origin() {
        let g = vec![1.0, -2.0];
        let out = cmd_step(&[5.0, 5.0], &g, &g, identity, f64::INFINITY).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn cmd_step_identity_link_hand_values() {
        // theta = -g_tilde = (-3, -4), |theta| = 5, identity link: x* = 5.
        let out = cmd_step(
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[3.0, 4.0],
            identity,
            f64::INFINITY,
        )
        .unwrap();
        assert!((out[0] + 3.0).abs() < 1e-9 && (out[1] + 4.0).abs() < 1e-9);
        // Same with the domain capped at radius 1: clamp, then rescale.
        let out = cmd_step(&[0.0, 0.0], &[0.0, 0.0], &[3.0, 4.0], identity, 1.0).unwrap();
        assert!((out[0] + 0.6).abs() < 1e-12 && (out[1] + 0.8).abs() < 1e-12);
    }

    #[test]
    fn entropy_argmin_single_coordinate() {
        let q = scaled_entropy_argmin(&ScaledEntropyProblem {
            prior: vec![1.0],
            costs: vec![3.0],
            scales: vec![2.0],
            k: 4.5,
        })
        .unwrap();
        assert_eq!(q, vec![1.0]);
    }

    #[test]
    fn entropy_argmin_zero_costs_returns_prior() {
        let p = vec![0.2, 0.3, 0.5];
        let q = scaled_entropy_argmin(&ScaledEntropyProblem {
            prior: p.clone(),
            costs: vec![0.0; 3],
            scales: vec![0.5, 2.0, 7.0],
            k: 4.5,
        })
        .unwrap();
        // The stopping rule certifies KKT residuals at 1e-8, not exactness.
        for i in 0..3 {
            assert!((q[i] - p[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn entropy_argmin_equal_scales_closed_form() {
        // Equal scales reduce to exponential weights: with k = 1, mu = 1,
        // p = (1/2, 1/2), c = (0, ln 4) the solution is (0.8, 0.2).
        let q = scaled_entropy_argmin(&ScaledEntropyProblem {
            prior: vec![0.5, 0.5],
            costs: vec![0.0, 4f64.ln()],
            scales: vec![1.0, 1.0],
            k: 1.0,
        })
        .unwrap();
        assert!((q[0] - 0.8).abs() < 1e-10);
        assert!((q[1] - 0.2).abs() < 1e-10);
    }

    #[test]
    fn entropy_argmin_rejects_bad_priors() {
        let err = scaled_entropy_argmin(&ScaledEntropyProblem {
            prior: vec![0.5, 0.0, 0.5],
            costs: vec![0.0; 3],
            scales: vec![1.0; 3],
            k: 1.0,
        })
        .unwrap_err();
        assert!(matches!(err, SolveError::BadProblem(_)));
    }

    #[test]
    fn entropy_argmin_kkt_residual_holds() {
        let prob = ScaledEntropyProblem {
            prior: vec![0.1, 0.2, 0.3, 0.4],
            costs: vec![0.7, -0.2, 0.05, -0.6],
            scales: vec![0.01, 0.4, 3.0, 60.0],
            k: 4.5,
        };
        let q = scaled_entropy_argmin(&prob).unwrap();
        let sum: f64 = q.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!(q.iter().all(|&x| x > 0.0));
        // Recover lambda from the first coordinate's stationarity and check
        // every other coordinate against it.
        let lambda = -(prob.k / prob.scales[0]) * (q[0] / prob.prior[0]).ln() - prob.costs[0];
        let max_c = prob.costs.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        for (i, &qi) in q.iter().enumerate() {
            let r = prob.k / prob.scales[i] * (qi / prob.prior[i]).ln() + prob.costs[i] + lambda;
            assert!(
                r.abs() <= 1e-8 * (1.0 + max_c),
                "coordinate {i}: residual {r:e}"
            );
        }
    }
}
