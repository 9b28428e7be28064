//! Adversarial gradient streams realizing the lower-bound constructions:
//! a static-comparator stream driven by random signs, and a drifting
//! construction that keeps its comparator orthogonal to whatever the
//! learner plays.

use crate::rng::{sign, stream_rng, STREAM_SIGNS};
use qbound::core::{dot, norm, LossOracle, LossQuery, QuadBound};
use rand_chacha::ChaCha8Rng;

/// Linear losses g_t = (-G, -eps_t L |w_t|) with Rademacher eps_t. The
/// gradient norm is exactly sqrt(G^2 + L^2 |w_t|^2), so the (G, L)
/// certificate is tight every round. After the run the adversary reveals
/// the comparator u = (U, s U) with U = (G/L) sqrt(2T) and s the sign of
/// the accumulated signed iterate norms.
pub struct StaticLbAdversary {
    pub g: f64,
    pub l: f64,
    pub horizon: u64,
    rng: ChaCha8Rng,
    cur_grad: Vec<f64>,
    sum_signed_norms: f64,
    rounds: u64,
}

impl StaticLbAdversary {
    pub fn new(g: f64, l: f64, horizon: u64, seed: u64) -> Self {
        assert!(g > 0.0 && g.is_finite(), "G must be positive");
        // A Lipschitz-only stream (L = 0) is a different construction and
        // is out of scope here.
        assert!(l > 0.0 && l.is_finite(), "L must be positive");
        assert!(horizon >= 1);
        StaticLbAdversary {
            g,
            l,
            horizon,
            rng: stream_rng(seed, STREAM_SIGNS),
            cur_grad: vec![-g, 0.0],
            sum_signed_norms: 0.0,
            rounds: 0,
        }
    }

    /// U = (G/L) sqrt(2T).
    pub fn u_magnitude(&self) -> f64 {
        self.g / self.l * (2.0 * self.horizon as f64).sqrt()
    }

    /// The constructed comparator (U, s U). Meaningful after the run; the
    /// zero-sum tie resolves to s = +1.
    pub fn comparator(&self) -> Vec<f64> {
        let s = if self.sum_signed_norms < 0.0 {
            -1.0
        } else {
            1.0
        };
        let u = self.u_magnitude();
        vec![u, s * u]
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }
}

impl LossOracle for StaticLbAdversary {
    fn begin_round(&mut self, played: &[f64]) -> QuadBound {
        assert_eq!(played.len(), 2, "static adversary works in two dimensions");
        let eps = sign(&mut self.rng);
        let wn = norm(played);
        self.cur_grad = vec![-self.g, -eps * self.l * wn];
        self.sum_signed_norms += eps * wn;
        self.rounds += 1;
        QuadBound::new(self.g, self.l)
    }

    fn query(&self, w: &[f64]) -> LossQuery {
        LossQuery {
            value: dot(&self.cur_grad, w),
            grad: self.cur_grad.clone(),
        }
    }
}

/// Quadratic losses l_t(w) = -(G/2) <xi_t, w> + (L/4) (sigma - <xi_t, w>)^2
/// whose direction xi_t is chosen orthogonal to the played point (the
/// counterclockwise rotation of its direction; e_1 at the origin), with
/// comparators u_t = sigma xi_t. Orthogonality pins the learner's loss at
/// (L/4) sigma^2 and the comparator's at -(G/2) sigma, making the per-round
/// regret (G/2) sigma + (L/4) sigma^2 an identity rather than a bound.
pub struct DynamicLbAdversary {
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub mu_exp: f64,
    pub sigma: f64,
    pub horizon: u64,
    cur_xi: Vec<f64>,
    path: Vec<Vec<f64>>,
    rounds: u64,
}

impl DynamicLbAdversary {
    pub fn new(g: f64, l: f64, m: f64, mu_exp: f64, horizon: u64) -> Self {
        assert!(g > 0.0 && g.is_finite(), "G must be positive");
        assert!(l > 0.0 && l.is_finite(), "L must be positive");
        assert!(m > 0.0 && m.is_finite(), "M must be positive");
        assert!(g / l <= m, "construction needs G/L <= M");
        assert!(
            (0.0..=0.5).contains(&mu_exp),
            "exponent must lie in [0, 1/2]"
        );
        assert!(horizon >= 1);
        let sigma = m * (horizon as f64).powf(-mu_exp);
        DynamicLbAdversary {
            g,
            l,
            m,
            mu_exp,
            sigma,
            horizon,
            cur_xi: vec![1.0, 0.0],
            path: Vec::new(),
            rounds: 0,
        }
    }

    /// The certificate every round's loss satisfies:
    /// |grad| <= G/2 + sigma L / 2 + L |w|.
    pub fn certs(&self) -> QuadBound {
        QuadBound::new(0.5 * self.g + 0.5 * self.sigma * self.l, self.l)
    }

    /// Comparators u_t = sigma xi_t revealed so far.
    pub fn comparator_path(&self) -> &[Vec<f64>] {
        &self.path
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }
}

impl LossOracle for DynamicLbAdversary {
    fn begin_round(&mut self, played: &[f64]) -> QuadBound {
        assert_eq!(played.len(), 2, "dynamic adversary works in two dimensions");
        let wn = norm(played);
        self.cur_xi = if wn == 0.0 {
            vec![1.0, 0.0]
        } else {
            // 90 degrees counterclockwise.
            vec![-played[1] / wn, played[0] / wn]
        };
        self.path
            .push(self.cur_xi.iter().map(|x| self.sigma * x).collect());
        self.rounds += 1;
        self.certs()
    }

    fn query(&self, w: &[f64]) -> LossQuery {
        let s = dot(&self.cur_xi, w);
        let value = -0.5 * self.g * s + 0.25 * self.l * (self.sigma - s) * (self.sigma - s);
        let coeff = -0.5 * self.g - 0.5 * self.l * (self.sigma - s);
        LossQuery {
            value,
            grad: self.cur_xi.iter().map(|x| coeff * x).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbound::core::qb_check;

    #[test]
    fn static_gradient_hand_values() {
        let mut adv = StaticLbAdversary::new(1.0, 1.0, 8, 0);
        let certs = adv.begin_round(&[0.0, 0.0]);
        let q = adv.query(&[0.0, 0.0]);
        assert_eq!(q.grad[0], -1.0);
        assert_eq!(q.grad[1], 0.0);
        assert!(qb_check(&q.grad, &[0.0, 0.0], certs));
        assert!((adv.u_magnitude() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn static_gradient_norm_is_exactly_the_certificate_curve() {
        let mut adv = StaticLbAdversary::new(1.0, 1.0, 8, 42);
        let w = [3.0, 4.0];
        let certs = adv.begin_round(&w);
        let q = adv.query(&w);
        // (-1, -eps * 5): norm sqrt(26) regardless of the sign.
        assert_eq!(q.grad[0], -1.0);
        assert_eq!(q.grad[1].abs(), 5.0);
        assert!((norm(&q.grad) - 26f64.sqrt()).abs() < 1e-12);
        assert!(qb_check(&q.grad, &w, certs));
    }

    #[test]
    fn static_signs_are_seed_deterministic() {
        let collect = |seed: u64| {
            let mut adv = StaticLbAdversary::new(1.0, 1.0, 16, seed);
            (0..16)
                .map(|_| {
                    adv.begin_round(&[1.0, 1.0]);
                    adv.query(&[1.0, 1.0]).grad[1]
                })
                .collect::<Vec<f64>>()
        };
        assert_eq!(collect(5), collect(5));
        assert_ne!(collect(5), collect(6));
    }

    #[test]
    fn dynamic_sigma_hand_value() {
        let adv = DynamicLbAdversary::new(1.0, 1.0, 2.0, 0.5, 16);
        assert!((adv.sigma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dynamic_xi_is_orthogonal_and_comparator_sits_at_the_kink() {
        let mut adv = DynamicLbAdversary::new(1.0, 2.0, 1.0, 0.25, 81);
        let w = [0.6, 0.8];
        adv.begin_round(&w);
        let u_t = adv.comparator_path()[0].clone();
        // Orthogonal comparator of norm sigma.
        assert!(dot(&u_t, &w).abs() < 1e-12);
        assert!((norm(&u_t) - adv.sigma).abs() < 1e-12);
        // At the comparator the quadratic term vanishes: grad = -(G/2) xi.
        let q = adv.query(&u_t);
        let expected: Vec<f64> = u_t.iter().map(|x| -0.5 * 1.0 * x / adv.sigma).collect();
        for (a, b) in q.grad.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dynamic_losses_pass_sampled_qb_checks() {
        let mut adv = DynamicLbAdversary::new(1.0, 1.0, 2.0, 0.5, 100);
        let certs = adv.certs();
        let mut rng = stream_rng(9, 4);
        for t in 0..50 {
            let w_play = [0.1 * t as f64, -0.05 * t as f64];
            adv.begin_round(&w_play);
            for _ in 0..20 {
                let w = crate::rng::in_ball(&mut rng, 2, 3.0);
                let q = adv.query(&w);
                assert!(qb_check(&q.grad, &w, certs));
            }
        }
    }

    #[test]
    fn dynamic_regret_identity_per_round() {
        let mut adv = DynamicLbAdversary::new(1.5, 2.0, 1.0, 0.0, 10);
        let sigma = adv.sigma;
        let w = [0.3, -0.7];
        adv.begin_round(&w);
        let at_w = adv.query(&w).value;
        let at_u = adv.query(&adv.comparator_path()[0]).value;
        assert!((at_w - 0.25 * 2.0 * sigma * sigma).abs() < 1e-12);
        assert!((at_u + 0.5 * 1.5 * sigma).abs() < 1e-12);
    }
}
