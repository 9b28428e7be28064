//! Vector arithmetic, the loss-oracle interface, quadratic-boundedness
//! certificates, and regret accounting shared by every learner in this crate.
//!
//! Points are plain `Vec<f64>` / `&[f64]` in the Euclidean norm. The
//! reference point of every certificate is the origin; callers with a
//! different center must pre-translate their losses.

/// Euclidean inner product. Panics on dimension mismatch.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// a + s * b, elementwise.
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "add_scaled: dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Euclidean projection onto the centered ball of the given radius.
/// An infinite radius is the identity.
pub fn project_ball(w: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "project_ball: radius must be positive");
    let n = norm(w);
    if n <= radius {
        w.to_vec()
    } else {
        scaled(w, radius / n)
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// A (G, L) certificate: every subgradient of the certified loss satisfies
/// |g| <= G + L |w| at the point w it was taken at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadBound {
    pub g: f64,
    pub l: f64,
}

impl QuadBound {
    pub fn new(g: f64, l: f64) -> Self {
        assert!(
            g >= 0.0 && g.is_finite(),
            "QuadBound: G must be finite and >= 0"
        );
        assert!(
            l >= 0.0 && l.is_finite(),
            "QuadBound: L must be finite and >= 0"
        );
        QuadBound { g, l }
    }
}

/// One full-information answer: loss value and a subgradient at the queried
/// point.
#[derive(Clone, Debug)]
pub struct LossQuery {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Per-round loss interface. A round is opened with the played point (which
/// interactive adversaries are allowed to inspect); afterwards the round's
/// loss answers any number of value/subgradient queries, all against the
/// same function.
pub trait LossOracle {
    /// Fix the round-t loss and return its (G_t, L_t) certificate.
    fn begin_round(&mut self, played: &[f64]) -> QuadBound;
    /// Value and a subgradient of the current round's loss at `w`.
    fn query(&self, w: &[f64]) -> LossQuery;
}

/// Whether |g| <= G + L |w|, with relative slack 1e-12 for float round-off.
pub fn qb_check(g: &[f64], w: &[f64], bound: QuadBound) -> bool {
    assert_eq!(g.len(), w.len(), "qb_check: dimension mismatch");
    let cap = bound.g + bound.l * norm(w);
    norm(g) <= cap + 1e-12 * (1.0 + cap)
}

/// Whether |g|^2 <= 2 L (value - min_value), the self-bounding property of
/// L-smooth losses, with absolute slack 1e-9 (1 + |g|^2).
pub fn self_bounding_check(g: &[f64], value: f64, min_value: f64, l: f64) -> bool {
    assert!(l >= 0.0, "self_bounding_check: L must be >= 0");
    assert!(
        value >= min_value - 1e-12,
        "self_bounding_check: value below stated minimum"
    );
    let gsq = dot(g, g);
    gsq <= 2.0 * l * (value - min_value) + 1e-9 * (1.0 + gsq)
}

/// Total movement of a comparator sequence: sum of consecutive distances.
pub fn path_length(path: &[Vec<f64>]) -> f64 {
    assert!(!path.is_empty(), "path_length: empty path");
    path.windows(2).map(|w| norm(&sub(&w[0], &w[1]))).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    add_scaled(a, -1.0, b)
}

/// Cumulative losses of the played points and of each registered comparator
/// path. Paths are fixed at construction; `record_round` takes one value per
/// path in registration order, so a missing path shows up as a length error.
#[derive(Clone, Debug)]
pub struct RegretLedger {
    ids: Vec<String>,
    played: Vec<f64>,
    comparators: Vec<Vec<f64>>,
}

impl RegretLedger {
    pub fn new(path_ids: &[&str]) -> Self {
        RegretLedger {
            ids: path_ids.iter().map(|s| s.to_string()).collect(),
            played: Vec::new(),
            comparators: vec![Vec::new(); path_ids.len()],
        }
    }

    pub fn record_round(&mut self, played: f64, at_comparators: &[f64]) {
        assert_eq!(
            at_comparators.len(),
            self.ids.len(),
            "record_round: one loss per registered path required"
        );
        self.played.push(played);
        for (series, &v) in self.comparators.iter_mut().zip(at_comparators) {
            series.push(v);
        }
    }

    pub fn rounds(&self) -> usize {
        self.played.len()
    }

    pub fn path_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn played(&self) -> &[f64] {
        &self.played
    }

    pub fn comparator(&self, id: &str) -> &[f64] {
        &self.comparators[self.index_of(id)]
    }

    /// R_T for one path: total played loss minus total comparator loss.
    pub fn regret(&self, id: &str) -> f64 {
        let i = self.index_of(id);
        self.played.iter().sum::<f64>() - self.comparators[i].iter().sum::<f64>()
    }

    /// Cumulative regret after each round, for per-round logging.
    pub fn regret_series(&self, id: &str) -> Vec<f64> {
        let i = self.index_of(id);
        let mut run = 0.0;
        self.played
            .iter()
            .zip(&self.comparators[i])
            .map(|(p, c)| {
                run += p - c;
                run
            })
            .collect()
    }

    fn index_of(&self, id: &str) -> usize {
        self.ids
            .iter()
            .position(|s| s == id)
            .unwrap_or_else(|| panic!("unknown comparator path {id:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qb_check_zero_gradient_always_passes() {
        let b = QuadBound::new(0.0, 0.0);
        assert!(qb_check(&[0.0, 0.0], &[17.0, -4.0], b));
    }

    #[test]
    fn qb_check_boundary_and_violation() {
        // G = 1, L = 1, |w| = 2: gradients of norm 3 sit on the boundary.
        let b = QuadBound::new(1.0, 1.0);
        assert!(qb_check(&[3.0, 0.0], &[0.0, 2.0], b));
        assert!(!qb_check(&[3.1, 0.0], &[0.0, 2.0], b));
    }

    #[test]
    fn path_length_examples() {
        let constant = vec![vec![2.0, -1.0]; 5];
        assert_eq!(path_length(&constant), 0.0);
        let line = vec![vec![0.0], vec![1.0], vec![3.0]];
        assert_eq!(path_length(&line), 3.0);
        let single = vec![vec![4.0, 4.0]];
        assert_eq!(path_length(&single), 0.0);
    }

    #[test]
    fn ledger_basic_regret() {
        let mut led = RegretLedger::new(&["u"]);
        led.record_round(1.0, &[0.0]);
        assert_eq!(led.regret("u"), 1.0);
        let mut led = RegretLedger::new(&["u"]);
        for t in 0..10 {
            let v = t as f64;
            led.record_round(v, &[v]);
        }
        assert_eq!(led.regret("u"), 0.0);
    }

    #[test]
    fn self_bounding_examples() {
        assert!(self_bounding_check(&[0.0], 5.0, 5.0, 2.0));
        // Half-quadratic at w = 2: g = 2, value = 2, minimum 0, L = 1.
        assert!(self_bounding_check(&[2.0], 2.0, 0.0, 1.0));
        assert!(!self_bounding_check(&[2.0], 2.0, 0.0, 0.9));
    }

    #[test]
    fn projection_rescales_radially() {
        let w = project_ball(&[3.0, 4.0], 1.0);
        assert!((norm(&w) - 1.0).abs() < 1e-15);
        assert!((w[0] - 0.6).abs() < 1e-15 && (w[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_ball(&[0.1, 0.0], 1.0), vec![0.1, 0.0]);
    }
}
