//! Dynamic regret against drifting comparator paths, without knowing the
//! path length in advance. A two-dimensional grid of clipped
//! gradient-descent experts (one per step size / radius pair) is combined
//! by the multi-scale experts aggregator from [`crate::experts`]; an
//! expert's scale is set by its radius and step size, so paying the grid's
//! worst scale is avoided. The comparison point for expert meta-losses is
//! the origin.

use crate::core::{all_finite, norm, path_length, project_ball, LossOracle, QuadBound};
use crate::experts::{experts_init, experts_update, ExpertsConfig, ExpertsError, ExpertsState};

/// Grid recipe. Smoothness changes both ladders: self-bounded gradients
/// let step sizes grow by a factor sqrt(T) and radii shrink by the same.
#[derive(Clone, Copy, Debug)]
pub struct GridConfig {
    pub eps: f64,
    /// Stability margin for the clipped experts; the certificates require
    /// at least 8.
    pub big_k: f64,
    pub g_max: f64,
    /// Must be strictly positive; the step-size ladder tops out at
    /// 1 / (big_k l_max).
    pub l_max: f64,
    pub horizon: u64,
    pub smooth: bool,
    /// Caps the radius ladder's exponent (the theory's ladder grows with
    /// the horizon; runs at realistic horizons cap it to keep the expert
    /// count manageable).
    pub max_exponent: u32,
}

impl GridConfig {
    pub fn new(eps: f64, g_max: f64, l_max: f64, horizon: u64) -> Self {
        let cfg = GridConfig {
            eps,
            big_k: 8.0,
            g_max,
            l_max,
            horizon,
            smooth: false,
            max_exponent: 40,
        };
        cfg.validate();
        cfg
    }

    pub fn validate(&self) {
        assert!(
            self.eps > 0.0 && self.eps.is_finite(),
            "eps must be positive"
        );
        assert!(self.big_k >= 8.0, "big_k below the stability requirement");
        assert!(
            self.g_max > 0.0 && self.g_max.is_finite(),
            "g_max must be positive"
        );
        assert!(
            self.l_max > 0.0 && self.l_max.is_finite(),
            "l_max must be positive"
        );
        assert!(self.horizon >= 1, "horizon must be at least 1");
    }
}

/// Step-size and radius ladders, in that order. Step sizes double from the
/// base until they hit the stability ceiling 1 / (big_k l_max), which is
/// included exactly once; radii double from the base for
/// min(horizon, max_exponent) + 1 rungs.
pub fn build_grid(cfg: &GridConfig) -> (Vec<f64>, Vec<f64>) {
    cfg.validate();
    let t = cfg.horizon as f64;
    let (eta_base, eta_cap) = if cfg.smooth {
        let b = 1.0 / (cfg.big_k * cfg.l_max * t.sqrt());
        (b, b * t.sqrt())
    } else {
        (
            cfg.eps / (cfg.big_k * (cfg.g_max + cfg.eps * cfg.l_max) * t),
            1.0 / (cfg.big_k * cfg.l_max),
        )
    };
    let mut etas = Vec::new();
    let mut v = eta_base;
    while v < eta_cap {
        etas.push(v);
        v *= 2.0;
    }
    etas.push(eta_cap);

    let d_base = if cfg.smooth {
        cfg.eps / t.sqrt()
    } else {
        cfg.eps / t
    };
    let j_max = cfg.horizon.min(cfg.max_exponent as u64) as u32;
    let ds = (0..=j_max).map(|j| d_base * 2f64.powi(j as i32)).collect();
    (etas, ds)
}

/// Aggregator scale for the expert confined to the radius-`d` ball with
/// step size `eta`.
pub fn grid_mu(d: f64, eta: f64, g_max: f64) -> f64 {
    1.0 / (2.0 * d * (g_max + d / eta))
}

/// One grid expert: projected gradient descent inside its ball, with the
/// step inflated by the curvature it has certified so far.
#[derive(Clone, Debug)]
pub struct ExpertTau {
    pub eta: f64,
    pub d: f64,
    pub mu: f64,
    pub w: Vec<f64>,
}

/// w <- Pi_{|w| <= d} [ w - eta (1 + big_k eta l_t) g ].
pub fn expert_step(tau: &mut ExpertTau, g: &[f64], l_t: f64, big_k: f64) {
    debug_assert!(
        big_k * tau.eta * l_t <= 1.0 + 1e-12,
        "step size breaks the stability condition"
    );
    let step = tau.eta * (1.0 + big_k * tau.eta * l_t);
    let moved: Vec<f64> = tau.w.iter().zip(g).map(|(w, g)| w - step * g).collect();
    tau.w = project_ball(&moved, tau.d);
}

/// Per-round records needed to evaluate the regret certificate after the
/// fact. Indexed [round][expert] where two-dimensional.
#[derive(Clone, Debug, Default)]
pub struct DynLogs {
    /// Curvature certificates L_t.
    pub l_ts: Vec<f64>,
    /// Loss at the origin (the meta-loss reference point).
    pub ref_losses: Vec<f64>,
    /// Absolute expert losses l_t(w_t^tau).
    pub expert_losses: Vec<Vec<f64>>,
    /// Squared gradient norms at the expert iterates.
    pub expert_gsq: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct DynLearner {
    pub cfg: GridConfig,
    pub experts: Vec<ExpertTau>,
    pub weights_cfg: ExpertsConfig,
    pub weights: ExpertsState,
    /// Index of the next round (1-based).
    pub t: u64,
    /// Present only when the learner was initialized with logging on.
    pub logs: Option<DynLogs>,
}

/// Builds the expert grid (step sizes outer, radii inner) and the
/// aggregator over it. `keep_logs` retains what [`untuned_bound`] needs.
pub fn dyn_init(cfg: &GridConfig, dim: usize, keep_logs: bool) -> DynLearner {
    assert!(dim >= 1, "dim must be at least 1");
    let (etas, ds) = build_grid(cfg);
    let mut experts = Vec::with_capacity(etas.len() * ds.len());
    for &eta in &etas {
        for &d in &ds {
            experts.push(ExpertTau {
                eta,
                d,
                mu: grid_mu(d, eta, cfg.g_max),
                w: vec![0.0; dim],
            });
        }
    }
    let mus = experts.iter().map(|e| e.mu).collect();
    let weights_cfg = ExpertsConfig::with_defaults(mus, cfg.horizon);
    let weights = experts_init(&weights_cfg);
    DynLearner {
        cfg: *cfg,
        experts,
        weights_cfg,
        weights,
        t: 1,
        logs: keep_logs.then(DynLogs::default),
    }
}

/// The aggregated play: the weight-averaged expert iterate.
pub fn dyn_play(l: &DynLearner) -> Vec<f64> {
    let dim = l.experts[0].w.len();
    let mut w = vec![0.0; dim];
    for (tau, p) in l.experts.iter().zip(&l.weights.p) {
        for (wi, ti) in w.iter_mut().zip(&tau.w) {
            *wi += p * ti;
        }
    }
    w
}

/// Consumes one round. The oracle must already be fixed on the current
/// round (the adversary has seen the played point); `certs` are that
/// round's growth certificates. Queries the loss at the origin and at
/// every expert iterate, steps each expert, and reweights the aggregator
/// on the origin-relative losses.
pub fn dyn_round(
    l: &mut DynLearner,
    oracle: &impl LossOracle,
    certs: QuadBound,
) -> Result<(), ExpertsError> {
    let dim = l.experts[0].w.len();
    let reference = oracle.query(&vec![0.0; dim]);
    let n = l.experts.len();
    let mut rel = Vec::with_capacity(n);
    let mut abs = Vec::with_capacity(n);
    let mut gsq = Vec::with_capacity(n);
    for tau in &mut l.experts {
        let q = oracle.query(&tau.w);
        debug_assert!(all_finite(&q.grad) && q.value.is_finite());
        rel.push(q.value - reference.value);
        abs.push(q.value);
        gsq.push(q.grad.iter().map(|g| g * g).sum::<f64>());
        expert_step(tau, &q.grad, certs.l, l.cfg.big_k);
    }
    if let Some(logs) = &mut l.logs {
        logs.l_ts.push(certs.l);
        logs.ref_losses.push(reference.value);
        logs.expert_losses.push(abs);
        logs.expert_gsq.push(gsq);
    }
    experts_update(&l.weights_cfg, &mut l.weights, &rel)?;
    l.t += 1;
    Ok(())
}

/// Dynamic regret certificate read off one grid expert tau after a run
/// with logging on: for any comparator path u_1..u_T contained in tau's
/// ball, sum_t [l_t(w_t) - l_t(u_t)] is at most
///
///   2 k C + 2 k D G_max Lambda
///     + (|u_T|^2 + 2 D P + 4 k D^2 Lambda) / (2 eta)
///     + big_k eta sum_t L_t (l_t(u_t) - l_t(w_t^tau))
///     + 4 eta sum_t |g_t(w_t^tau)|^2,
///
/// where (eta, D) are tau's step size and radius, P is the path length,
/// C = sum mu / sum mu^2, and Lambda = ln(sum mu^2 / mu_tau^2) + 1.
/// `u_losses` are the comparator's realized losses, one per round.
pub fn untuned_bound(l: &DynLearner, tau: usize, u_path: &[Vec<f64>], u_losses: &[f64]) -> f64 {
    let logs = l
        .logs
        .as_ref()
        .expect("untuned_bound needs a learner initialized with logging on");
    let t_len = logs.l_ts.len();
    assert!(t_len >= 1, "no completed rounds");
    assert_eq!(u_path.len(), t_len, "comparator path length mismatch");
    assert_eq!(u_losses.len(), t_len, "comparator loss length mismatch");
    let ex = &l.experts[tau];
    let max_u = u_path.iter().map(|u| norm(u)).fold(0.0, f64::max);
    assert!(
        max_u <= ex.d * (1.0 + 1e-12),
        "comparator path leaves the expert's ball"
    );

    let k = l.weights_cfg.k;
    let mus = &l.weights_cfg.mu;
    let sum_mu: f64 = mus.iter().sum();
    let sum_mu2: f64 = mus.iter().map(|m| m * m).sum();
    let c_s = sum_mu / sum_mu2;
    let lambda = (sum_mu2 / (ex.mu * ex.mu)).ln() + 1.0;
    let p_len = path_length(u_path);
    let u_last = norm(u_path.last().unwrap());

    let mut sum_lt_gap = 0.0;
    let mut sum_gsq = 0.0;
    for (t, &l_t) in logs.l_ts.iter().enumerate() {
        sum_lt_gap += l_t * (u_losses[t] - logs.expert_losses[t][tau]);
        sum_gsq += logs.expert_gsq[t][tau];
    }

    2.0 * k * c_s
        + 2.0 * k * ex.d * l.cfg.g_max * lambda
        + (u_last * u_last + 2.0 * ex.d * p_len + 4.0 * k * ex.d * ex.d * lambda) / (2.0 * ex.eta)
        + l.cfg.big_k * ex.eta * sum_lt_gap
        + 4.0 * ex.eta * sum_gsq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::LossQuery;

    #[test]
    fn grid_matches_hand_values() {
        let cfg = GridConfig::new(1.0, 1.0, 1.0, 4);
        let (etas, ds) = build_grid(&cfg);
        let expect_etas = [1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0];
        assert_eq!(etas.len(), 4);
        for (a, b) in etas.iter().zip(expect_etas) {
            assert!((a - b).abs() < 1e-15);
        }
        let expect_ds = [0.25, 0.5, 1.0, 2.0, 4.0];
        assert_eq!(ds.len(), 5);
        for (a, b) in ds.iter().zip(expect_ds) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn smooth_grid_matches_hand_values() {
        let mut cfg = GridConfig::new(1.0, 1.0, 1.0, 16);
        cfg.smooth = true;
        let (etas, ds) = build_grid(&cfg);
        let expect_etas = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0];
        assert_eq!(etas.len(), 3);
        for (a, b) in etas.iter().zip(expect_etas) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(ds.len(), 17);
        assert!((ds[0] - 0.25).abs() < 1e-15);
        assert!((ds[16] - 0.25 * 65536.0).abs() < 1e-10);
    }

    #[test]
    fn exponent_cap_limits_radii() {
        let mut cfg = GridConfig::new(1.0, 1.0, 1.0, 1000);
        cfg.max_exponent = 3;
        let (_, ds) = build_grid(&cfg);
        assert_eq!(ds.len(), 4);
        assert!((ds[3] - 8.0 / 1000.0).abs() < 1e-15);
    }

    #[test]
    fn expert_step_hand_values() {
        let mut tau = ExpertTau {
            eta: 0.1,
            d: 1.0,
            mu: 1.0,
            w: vec![0.0, 0.0],
        };
        expert_step(&mut tau, &[1.0, 0.0], 0.0, 8.0);
        assert!((tau.w[0] + 0.1).abs() < 1e-15);
        // With curvature 1 the step inflates to eta (1 + 8 eta) = 0.18,
        // applied from the moved point.
        let mut tau = ExpertTau {
            eta: 0.1,
            d: 1.0,
            mu: 1.0,
            w: vec![0.0, 0.0],
        };
        expert_step(&mut tau, &[1.0, 0.0], 1.0, 8.0);
        assert!((tau.w[0] + 0.18).abs() < 1e-15);
        // Projection clips to the ball.
        let mut tau = ExpertTau {
            eta: 1.0,
            d: 0.05,
            mu: 1.0,
            w: vec![0.0, 0.0],
        };
        expert_step(&mut tau, &[1.0, 0.0], 0.0, 8.0);
        assert!((tau.w[0] + 0.05).abs() < 1e-15);
    }

    #[test]
    fn mu_formula() {
        assert!((grid_mu(2.0, 0.5, 3.0) - 1.0 / (4.0 * (3.0 + 4.0))).abs() < 1e-15);
    }

    /// Fixed quadratic pull toward a target; certificates (|c|, 1).
    struct QuadLoss {
        c: Vec<f64>,
    }

    impl LossOracle for QuadLoss {
        fn begin_round(&mut self, _played: &[f64]) -> QuadBound {
            QuadBound::new(norm(&self.c), 1.0)
        }

        fn query(&self, w: &[f64]) -> LossQuery {
            let diff: Vec<f64> = w.iter().zip(&self.c).map(|(w, c)| w - c).collect();
            LossQuery {
                value: 0.5 * diff.iter().map(|d| d * d).sum::<f64>(),
                grad: diff,
            }
        }
    }

    #[test]
    fn regret_stays_under_untuned_bound_on_quadratic() {
        let horizon = 50u64;
        let c = vec![0.1, 0.05];
        let g_max = norm(&c);
        let mut cfg = GridConfig::new(1.0, g_max, 1.0, horizon);
        cfg.max_exponent = 3;
        let mut learner = dyn_init(&cfg, 2, true);
        let mut oracle = QuadLoss { c: c.clone() };
        let mut regret_terms = Vec::new();
        for _ in 0..horizon {
            let w = dyn_play(&learner);
            let certs = oracle.begin_round(&w);
            let played = oracle.query(&w).value;
            // Comparator sits at the optimum, loss 0.
            regret_terms.push(played);
            dyn_round(&mut learner, &oracle, certs).unwrap();
        }
        assert_eq!(learner.weights.scale_violations, 0);
        let regret: f64 = regret_terms.iter().sum();
        let u_path = vec![c.clone(); horizon as usize];
        let u_losses = vec![0.0; horizon as usize];
        let mut some_tau_covers = false;
        for tau in 0..learner.experts.len() {
            if learner.experts[tau].d >= g_max {
                some_tau_covers = true;
                let bound = untuned_bound(&learner, tau, &u_path, &u_losses);
                assert!(
                    regret <= bound + 1e-9 * (1.0 + bound.abs()),
                    "tau {tau}: regret {regret} > bound {bound}"
                );
            }
        }
        assert!(some_tau_covers, "grid misses the comparator radius");
    }

    #[test]
    fn play_starts_at_origin_and_logs_fill() {
        let cfg = GridConfig::new(1.0, 1.0, 1.0, 8);
        let mut learner = dyn_init(&cfg, 3, true);
        assert_eq!(dyn_play(&learner), vec![0.0; 3]);
        let mut oracle = QuadLoss {
            c: vec![0.02, 0.0, 0.0],
        };
        let certs = oracle.begin_round(&dyn_play(&learner));
        dyn_round(&mut learner, &oracle, certs).unwrap();
        let logs = learner.logs.as_ref().unwrap();
        assert_eq!(logs.l_ts.len(), 1);
        assert_eq!(logs.expert_losses[0].len(), learner.experts.len());
        assert_eq!(learner.t, 2);
    }
}
