//! Drifting least-squares streams. The ground truth w*_t moves (piecewise
//! jumps or a clamped random walk), features are drawn uniformly from a
//! ball, targets get bounded uniform noise. Square loss is the motivating
//! non-Lipschitz example: its gradient grows linearly in |w|, and the
//! per-round certificates are computable from observables alone.

use crate::rng::{in_ball, stream_rng, unit_vector, STREAM_DRIFT, STREAM_FEATURES, STREAM_NOISE};
use qbound::core::{dot, norm, project_ball, LossOracle, LossQuery, QuadBound};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Ground-truth motion.
#[derive(Clone, Debug)]
pub enum Drift {
    /// Equal-length segments, one target per segment.
    Piecewise { targets: Vec<Vec<f64>> },
    /// w* takes a uniform-direction step of fixed length each round and is
    /// clamped to the max_norm ball (keeping the certificates derivable
    /// up front).
    RandomWalk {
        start: Vec<f64>,
        step: f64,
        max_norm: f64,
    },
}

impl Drift {
    fn dim(&self) -> usize {
        match self {
            Drift::Piecewise { targets } => targets[0].len(),
            Drift::RandomWalk { start, .. } => start.len(),
        }
    }

    /// Largest norm w*_t can ever take.
    pub fn w_max(&self) -> f64 {
        match self {
            Drift::Piecewise { targets } => targets.iter().map(|t| norm(t)).fold(0.0, f64::max),
            Drift::RandomWalk { max_norm, .. } => *max_norm,
        }
    }

    fn validate(&self) {
        match self {
            Drift::Piecewise { targets } => {
                assert!(!targets.is_empty(), "piecewise drift needs targets");
                let d = targets[0].len();
                assert!(d >= 1);
                assert!(targets.iter().all(|t| t.len() == d), "ragged targets");
            }
            Drift::RandomWalk {
                start,
                step,
                max_norm,
            } => {
                assert!(!start.is_empty());
                assert!(*step >= 0.0 && step.is_finite());
                assert!(*max_norm > 0.0 && max_norm.is_finite());
                assert!(
                    norm(start) <= *max_norm * (1.0 + 1e-12),
                    "walk starts outside its ball"
                );
            }
        }
    }
}

pub struct RegressionStream {
    pub dim: usize,
    pub x_scale: f64,
    pub noise_amp: f64,
    pub horizon: u64,
    drift: Drift,
    rng_x: ChaCha8Rng,
    rng_noise: ChaCha8Rng,
    rng_walk: ChaCha8Rng,
    w_star: Vec<f64>,
    cur_x: Vec<f64>,
    cur_y: f64,
    star_path: Vec<Vec<f64>>,
    rounds: u64,
}

impl RegressionStream {
    pub fn new(x_scale: f64, noise_amp: f64, drift: Drift, horizon: u64, seed: u64) -> Self {
        assert!(x_scale > 0.0 && x_scale.is_finite());
        assert!(noise_amp >= 0.0 && noise_amp.is_finite());
        assert!(horizon >= 1);
        drift.validate();
        let dim = drift.dim();
        let w_star = match &drift {
            Drift::Piecewise { targets } => targets[0].clone(),
            Drift::RandomWalk { start, .. } => start.clone(),
        };
        RegressionStream {
            dim,
            x_scale,
            noise_amp,
            horizon,
            drift,
            rng_x: stream_rng(seed, STREAM_FEATURES),
            rng_noise: stream_rng(seed, STREAM_NOISE),
            rng_walk: stream_rng(seed, STREAM_DRIFT),
            w_star,
            cur_x: vec![0.0; dim],
            cur_y: 0.0,
            star_path: Vec::new(),
            rounds: 0,
        }
    }

    /// Worst-case gradient norm at the origin: |y| |x| with
    /// |y| <= x_scale w_max + noise.
    pub fn g_max_bound(&self) -> f64 {
        self.x_scale * (self.x_scale * self.drift.w_max() + self.noise_amp)
    }

    /// Worst-case curvature certificate |x|^2.
    pub fn l_max_bound(&self) -> f64 {
        self.x_scale * self.x_scale
    }

    /// Ground-truth path over the rounds consumed so far.
    pub fn star_path(&self) -> &[Vec<f64>] {
        &self.star_path
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    fn advance_truth(&mut self) {
        match &self.drift {
            Drift::Piecewise { targets } => {
                // Segment index of round (rounds + 1), 1-based rounds.
                let k = targets.len() as u64;
                let seg = (self.rounds * k / self.horizon).min(k - 1) as usize;
                self.w_star = targets[seg].clone();
            }
            Drift::RandomWalk { step, max_norm, .. } => {
                if self.rounds > 0 && *step > 0.0 {
                    let dir = unit_vector(&mut self.rng_walk, self.dim);
                    let moved: Vec<f64> = self
                        .w_star
                        .iter()
                        .zip(&dir)
                        .map(|(w, d)| w + step * d)
                        .collect();
                    self.w_star = project_ball(&moved, *max_norm);
                }
            }
        }
    }
}

impl LossOracle for RegressionStream {
    fn begin_round(&mut self, played: &[f64]) -> QuadBound {
        assert_eq!(played.len(), self.dim, "played point dimension mismatch");
        self.advance_truth();
        self.cur_x = in_ball(&mut self.rng_x, self.dim, self.x_scale);
        let noise = if self.noise_amp > 0.0 {
            self.rng_noise.gen_range(-self.noise_amp..self.noise_amp)
        } else {
            0.0
        };
        self.cur_y = dot(&self.cur_x, &self.w_star) + noise;
        self.star_path.push(self.w_star.clone());
        self.rounds += 1;

        let xn = norm(&self.cur_x);
        let g_t = self.cur_y.abs() * xn;
        let wn = norm(played);
        let l_t = if wn == 0.0 {
            // The direction-projected certificate is undefined at the
            // origin; the smoothness constant covers it.
            xn * xn
        } else {
            (dot(&self.cur_x, played) / wn).abs() * xn
        };
        QuadBound::new(g_t, l_t)
    }

    fn query(&self, w: &[f64]) -> LossQuery {
        let r = self.cur_y - dot(&self.cur_x, w);
        LossQuery {
            value: 0.5 * r * r,
            grad: self.cur_x.iter().map(|x| -r * x).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbound::core::{qb_check, self_bounding_check};

    fn fixed_example() -> RegressionStream {
        // One round with x = (1, 0), y = 2 forced through a noiseless
        // constant drift at w* = (2, 0) and a full-scale feature; instead of
        // relying on the sampler, check the formulas via query on a stream
        // whose current state is set by a real begin_round, then verify the
        // published example by direct construction below.
        RegressionStream::new(
            1.0,
            0.0,
            Drift::Piecewise {
                targets: vec![vec![2.0, 0.0]],
            },
            4,
            0,
        )
    }

    #[test]
    fn certificate_formulas_hand_example() {
        // x = (1, 0), y = 2, w = (3, 0): g = (1, 0), G_t = 2, L_t = 1.
        let mut s = fixed_example();
        s.cur_x = vec![1.0, 0.0];
        s.cur_y = 2.0;
        let w = [3.0, 0.0];
        let q = s.query(&w);
        assert_eq!(q.grad, vec![1.0, 0.0]);
        assert_eq!(q.value, 0.5);
        // Recompute the certificates the way begin_round does.
        let xn = norm(&s.cur_x);
        let g_t = s.cur_y.abs() * xn;
        let l_t = (dot(&s.cur_x, &w) / norm(&w)).abs() * xn;
        assert_eq!(g_t, 2.0);
        assert_eq!(l_t, 1.0);
        assert!(norm(&q.grad) <= g_t + l_t * norm(&w));
    }

    #[test]
    fn interpolation_gives_zero_loss() {
        let mut s = fixed_example();
        s.cur_x = vec![0.5, 0.5];
        s.cur_y = 1.0;
        let q = s.query(&[1.0, 1.0]);
        assert_eq!(q.value, 0.0);
        assert!(q.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn per_round_certificates_hold_on_a_live_stream() {
        let mut s = RegressionStream::new(
            1.5,
            0.3,
            Drift::Piecewise {
                targets: vec![vec![0.4, -0.2], vec![-0.3, 0.5]],
            },
            60,
            12,
        );
        let mut w = vec![0.7, -0.4];
        for t in 0..60 {
            let certs = s.begin_round(&w);
            let q = s.query(&w);
            assert!(qb_check(&q.grad, &w, certs), "round {t}");
            assert!(certs.g <= s.g_max_bound() + 1e-12);
            assert!(certs.l <= s.l_max_bound() + 1e-12);
            // Smooth losses self-bound their gradients (min value 0).
            let l_smooth = norm(&s.cur_x).powi(2);
            assert!(self_bounding_check(&q.grad, q.value, 0.0, l_smooth));
            // Wander a little so the certificates see varied iterates.
            w = vec![0.7 - 0.01 * t as f64, -0.4 + 0.02 * t as f64];
        }
    }

    #[test]
    fn w_zero_uses_smoothness_certificate() {
        let mut s = fixed_example();
        let certs = s.begin_round(&[0.0, 0.0]);
        let xn = norm(&s.cur_x);
        assert!((certs.l - xn * xn).abs() < 1e-15);
    }

    #[test]
    fn piecewise_segments_split_evenly() {
        let mut s = RegressionStream::new(
            1.0,
            0.0,
            Drift::Piecewise {
                targets: vec![vec![1.0], vec![2.0], vec![3.0]],
            },
            9,
            0,
        );
        let mut seen = Vec::new();
        for _ in 0..9 {
            s.begin_round(&[0.0]);
            seen.push(s.star_path().last().unwrap()[0]);
        }
        assert_eq!(seen, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0]);
    }

    #[test]
    fn random_walk_stays_clamped_and_is_deterministic() {
        let run = |seed: u64| {
            let mut s = RegressionStream::new(
                1.0,
                0.1,
                Drift::RandomWalk {
                    start: vec![0.2, 0.0],
                    step: 0.3,
                    max_norm: 0.5,
                },
                40,
                seed,
            );
            let mut path = Vec::new();
            for _ in 0..40 {
                s.begin_round(&[0.0, 0.0]);
                let w = s.star_path().last().unwrap().clone();
                assert!(norm(&w) <= 0.5 + 1e-12);
                path.push(w);
            }
            path
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }
}
