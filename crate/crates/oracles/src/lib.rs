//! Reference implementations used by the other crates' test suites.
//!
//! Everything here recomputes a quantity through a second, independent route:
//! derivative-free search instead of link inversion, numeric integration
//! instead of closed-form antiderivatives, exhaustive search instead of dual
//! root finding, and plain re-substitution for the explicit bound formulas.
//! The implementations favor transparency over speed; they exist so the main
//! crates can be tested against something that shares no code with them.

/// Relative closeness with an absolute floor: |a - b| <= tol * (1 + |a| + |b|).
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs() + b.abs())
}

/// Golden-section search for the minimizer of a unimodal `f` on [a, b].
/// Shrinks the bracket until its width is below `xtol * (1 + |x|)`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    assert!(b >= a);
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > xtol * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimizer of a convex `f` on [0, cap] with f'(0) <= 0: doubles an upper
/// bracket from 1 until `f` stops decreasing across the last doubling, then
/// runs golden-section inside it.
pub fn convex_min_on_ray(f: impl Fn(f64) -> f64, cap: f64, xtol: f64) -> f64 {
    let mut hi = 1.0_f64.min(cap);
    let mut prev = f(hi / 2.0);
    let mut fhi = f(hi);
    let mut steps = 0;
    while fhi < prev && hi < cap {
        hi = (hi * 2.0).min(cap);
        prev = fhi;
        fhi = f(hi);
        steps += 1;
        assert!(
            steps < 2100,
            "convex_min_on_ray: bracket expansion ran away"
        );
    }
    golden_section_min(f, 0.0, hi, xtol)
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Radially symmetric regularizer family written out directly from its
/// defining cases, used to double-check the production implementation.
///
/// deriv(x) = 2k sqrt(V F(x))            while G sqrt(F(x)) <= sqrt(V)
///          = k (G F(x) + V / G)         afterwards
/// plus kappa * rho_inv * x when the curve carries a quadratic component,
/// where F(x) = ln(x / alpha + 1).
#[derive(Clone, Copy, Debug)]
pub struct CurveRef {
    pub k: f64,
    pub v: f64,
    pub alpha: f64,
    pub g_max: f64,
    pub kappa: f64,
    pub rho_inv: f64,
}

impl CurveRef {
    pub fn deriv(&self, x: f64) -> f64 {
        assert!(x >= 0.0);
        let f = (x / self.alpha).ln_1p();
        let log_part = if self.g_max * f.sqrt() <= self.v.sqrt() {
            2.0 * self.k * (self.v * f).sqrt()
        } else {
            self.k * (self.g_max * f + self.v / self.g_max)
        };
        log_part + self.kappa * self.rho_inv * x
    }

    /// Regularizer value as the numeric integral of `deriv` from 0.
    ///
    /// The integral is split at the branch crossover of `deriv`: a third
    /// derivative jump interior to a panel can land on a blind spot of the
    /// Simpson error estimator and stop the recursion with the error still
    /// far above tolerance. With the kink on a panel boundary each piece is
    /// smooth inside and the estimator is reliable.
    pub fn value(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let rough = x * self.deriv(0.5 * x);
        let tol = 1e-11 * (1.0 + rough.abs());
        let x_cross = self.alpha * (self.v / (self.g_max * self.g_max)).exp_m1();
        if x_cross > 0.0 && x_cross < x {
            adaptive_simpson(&|u| self.deriv(u), 0.0, x_cross, 0.5 * tol)
                + adaptive_simpson(&|u| self.deriv(u), x_cross, x, 0.5 * tol)
        } else {
            adaptive_simpson(&|u| self.deriv(u), 0.0, x, tol)
        }
    }

    /// The mirror-step objective along the ray through theta: value(x) - |theta| x.
    pub fn ray_objective(&self, theta_norm: f64) -> impl Fn(f64) -> f64 + '_ {
        move |x| self.value(x) - theta_norm * x
    }
}

/// x ln x extended by continuity with 0 ln 0 = 0.
fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Objective of the scaled-entropy simplex step:
/// sum_i c_i q_i + (k / mu_i) (q_i ln(q_i / p_i) - q_i + p_i).
pub fn entropy_objective(q: &[f64], p: &[f64], c: &[f64], mu: &[f64], k: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..q.len() {
        total += c[i] * q[i] + k / mu[i] * (xlnx(q[i]) - q[i] * p[i].ln() - q[i] + p[i]);
    }
    total
}

/// Exhaustive minimum of `entropy_objective` over the 3-simplex on a grid of
/// the given step. Quadratic in 1/step; intended for coarse cross-checks only.
pub fn grid_min_simplex3(p: &[f64], c: &[f64], mu: &[f64], k: f64, step: f64) -> f64 {
    assert_eq!(p.len(), 3);
    let n = (1.0 / step).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let qa = i as f64 * step;
        for j in 0..=(n - i) {
            let qb = j as f64 * step;
            let qc = (1.0 - qa - qb).max(0.0);
            let val = entropy_objective(&[qa, qb, qc], p, c, mu, k);
            if val < best {
                best = val;
            }
        }
    }
    best
}

/// Closed-form solution of the scaled-entropy step when every scale is equal:
/// q_i proportional to p_i exp(-mu c_i / k).
pub fn exp_weights_equal_scale(p: &[f64], c: &[f64], mu: f64, k: f64) -> Vec<f64> {
    let logits: Vec<f64> = p
        .iter()
        .zip(c)
        .map(|(&pi, &ci)| pi.ln() - mu * ci / k)
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Explicit comparator-adaptive regret bound, re-substituted from scratch:
/// 2 eps G + kappa u^2 sqrt(L_max^2 + sum L_t^2)
///   + 2 k u max( sqrt(V_final F), G F ),  F = ln(u / alpha_final + 1).
#[allow(clippy::too_many_arguments)]
pub fn qb_bound_ref(
    eps: f64,
    g_max: f64,
    k: f64,
    kappa: f64,
    u_norm: f64,
    v_final: f64,
    alpha_final: f64,
    rho_inv_final: f64,
) -> f64 {
    let f = (u_norm / alpha_final).ln_1p();
    2.0 * eps * g_max
        + kappa * u_norm * u_norm * rho_inv_final
        + 2.0 * k * u_norm * (v_final * f).sqrt().max(g_max * f)
}

/// Explicit multi-scale experts bound, re-substituted from scratch:
/// sum_i u_i [ k (ln(u_i / p1_i) + 1) / mu_i + mu_i sum_t l_ti^2 ] + 2k sum_i p1_i / mu_i
/// with 0 ln 0 = 0.
pub fn experts_bound_ref(u: &[f64], p1: &[f64], mu: &[f64], k: f64, sum_sq: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..u.len() {
        if u[i] > 0.0 {
            total += u[i] * (k * ((u[i] / p1[i]).ln() + 1.0) / mu[i] + mu[i] * sum_sq[i]);
        }
        total += 2.0 * k * p1[i] / mu[i];
    }
    total
}

/// Explicit per-expert dynamic-regret bound, re-substituted from scratch.
/// `sum_lt_gap` is sum_t L_t (l_t(u_t) - l_t(w_t^tau)); `sum_gsq` is
/// sum_t |g_t^tau|^2.
#[allow(clippy::too_many_arguments)]
pub fn untuned_bound_ref(
    mus: &[f64],
    tau: usize,
    d: f64,
    eta: f64,
    g_max: f64,
    k: f64,
    big_k: f64,
    u_last_norm: f64,
    path_len: f64,
    sum_lt_gap: f64,
    sum_gsq: f64,
) -> f64 {
    let sum_mu: f64 = mus.iter().sum();
    let sum_mu2: f64 = mus.iter().map(|m| m * m).sum();
    let c_s = sum_mu / sum_mu2;
    let lambda = (sum_mu2 / (mus[tau] * mus[tau])).ln() + 1.0;
    2.0 * k * c_s
        + 2.0 * k * d * g_max * lambda
        + (u_last_norm * u_last_norm + 2.0 * d * path_len + 4.0 * k * d * d * lambda) / (2.0 * eta)
        + big_k * eta * sum_lt_gap
        + 4.0 * eta * sum_gsq
}

/// Largest singular value by dense evaluation over a sampled unit circle;
/// only sensible for 2x2 matrices, where it cross-checks power iteration.
pub fn opnorm_2x2_sampled(m: &[[f64; 2]; 2], samples: usize) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let t = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
        let (x, y) = (t.cos(), t.sin());
        let r0 = m[0][0] * x + m[0][1] * y;
        let r1 = m[1][0] * x + m[1][1] * y;
        best = best.max((r0 * r0 + r1 * r1).sqrt());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_section_min(|x| (x - 3.0) * (x - 3.0), 0.0, 10.0, 1e-10);
        assert!((x - 3.0).abs() < 1e-8);
    }

    #[test]
    fn convex_ray_search_handles_interior_and_capped_minima() {
        // f(x) = (x - 5)^2 has slope < 0 at the origin and an interior minimum.
        let x = convex_min_on_ray(|x| (x - 5.0) * (x - 5.0), f64::INFINITY, 1e-10);
        assert!((x - 5.0).abs() < 1e-7);
        let x = convex_min_on_ray(|x| (x - 5.0) * (x - 5.0), 2.0, 1e-10);
        assert!((x - 2.0).abs() < 1e-7);
    }

    #[test]
    fn simpson_integrates_polynomials_exactly_enough() {
        let i = adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-12);
        assert!((i - 1.0 / 3.0).abs() < 1e-10);
        let i = adaptive_simpson(&|x: f64| x.exp(), 0.0, 2.0, 1e-12);
        assert!((i - (2f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn curve_value_matches_hand_integral_on_pure_quadratic() {
        // With V tiny and alpha large the log part stays near zero; the
        // quadratic tail dominates and integrates to kappa rho_inv x^2 / 2.
        let c = CurveRef {
            k: 3.0,
            v: 1e-12,
            alpha: 1e6,
            g_max: 1.0,
            kappa: 4.0,
            rho_inv: 2.0,
        };
        let v = c.value(3.0);
        assert!(rel_close(v, 4.0 * 2.0 * 9.0 / 2.0, 1e-4), "got {v}");
    }

    #[test]
    fn equal_scale_weights_recover_softmax() {
        let q = exp_weights_equal_scale(&[0.5, 0.5], &[0.0, 4f64.ln()], 1.0, 1.0);
        assert!((q[0] - 0.8).abs() < 1e-12);
        assert!((q[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn grid_min_agrees_with_closed_form_on_equal_scales() {
        let p = [0.2, 0.3, 0.5];
        let c = [0.4, -0.1, 0.3];
        let mu = [2.0, 2.0, 2.0];
        let k = 4.5;
        let q = exp_weights_equal_scale(&p, &c, 2.0, k);
        let exact = entropy_objective(&q, &p, &c, &mu, k);
        let grid = grid_min_simplex3(&p, &c, &mu, k, 1e-3);
        assert!(exact <= grid + 1e-6);
        assert!(grid <= exact + 1e-4);
    }

    #[test]
    fn sampled_opnorm_matches_diagonal() {
        let m = [[2.0, 0.0], [0.0, 0.5]];
        let n = opnorm_2x2_sampled(&m, 100_000);
        assert!((n - 2.0).abs() < 1e-6);
    }
}
