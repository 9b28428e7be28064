//! Convex-concave saddle points by reduction to a single quadratically
//! bounded online problem. The joint variable w = (x, y) follows the
//! comparator-adaptive learner against the stacked gradient
//! (grad_x L, grad_y of -L); averaged iterates then certify a duality gap
//! through the learner's linearized regret, with no bounded-domain
//! assumption anywhere.

use crate::core::{dot, norm, LossOracle, LossQuery, QuadBound};
use crate::mirror::SolveError;
use crate::qb_learner::{qb_init, qb_step, QBConfig, QBState, StepError};

/// A convex-concave objective L(x, y), convex in x, concave in y.
pub trait SaddleOracle {
    fn x_dim(&self) -> usize;
    fn y_dim(&self) -> usize;
    /// Returns (L(x, y), a subgradient of L in x, a subgradient of -L
    /// in y). The y-block is the *descent* direction for the maximizing
    /// player, so the stacked vector is a monotone operator's value.
    fn eval(&self, x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>);
}

/// Per-block growth certificates of a saddle objective:
/// |g_x| <= gx + lxx |x| + lxy |y| and |g_y| <= gy + lyx |x| + lyy |y|.
#[derive(Clone, Copy, Debug)]
pub struct QBComposition {
    pub gx: f64,
    pub gy: f64,
    pub lxx: f64,
    pub lxy: f64,
    pub lyx: f64,
    pub lyy: f64,
}

/// Collapses per-block certificates into one (G, L) pair for the stacked
/// variable. Cauchy-Schwarz across the five contributions of each block
/// yields the sqrt(5) factor.
pub fn compose_qb(c: &QBComposition) -> (f64, f64) {
    let g = 5f64.sqrt() * (c.gx * c.gx + c.gy * c.gy).sqrt();
    let l = 5f64.sqrt() * (c.lxx * c.lxx + c.lxy * c.lxy + c.lyx * c.lyx + c.lyy * c.lyy).sqrt();
    (g, l)
}

/// Separable convex building block for the bilinear objective's x and y
/// parts.
#[derive(Clone, Copy, Debug)]
pub enum Component {
    Zero,
    /// (a/2) |v|^2 with a >= 0.
    Quadratic {
        a: f64,
    },
    /// c |v| with c >= 0; the subgradient at the origin is 0.
    Norm {
        c: f64,
    },
}

impl Component {
    pub fn value(&self, v: &[f64]) -> f64 {
        match *self {
            Component::Zero => 0.0,
            Component::Quadratic { a } => 0.5 * a * dot(v, v),
            Component::Norm { c } => c * norm(v),
        }
    }

    pub fn grad(&self, v: &[f64]) -> Vec<f64> {
        match *self {
            Component::Zero => vec![0.0; v.len()],
            Component::Quadratic { a } => v.iter().map(|x| a * x).collect(),
            Component::Norm { c } => {
                let n = norm(v);
                if n == 0.0 {
                    vec![0.0; v.len()]
                } else {
                    v.iter().map(|x| c * x / n).collect()
                }
            }
        }
    }

    /// Growth certificate (G, L) of the block's own gradient.
    pub fn qb(&self) -> (f64, f64) {
        match *self {
            Component::Zero => (0.0, 0.0),
            Component::Quadratic { a } => {
                assert!(a >= 0.0, "quadratic component must be convex");
                (0.0, a)
            }
            Component::Norm { c } => {
                assert!(c >= 0.0, "norm component must be convex");
                (c, 0.0)
            }
        }
    }
}

/// Dense row-major matrix, just enough for the bilinear coupling.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        assert!(cols >= 1, "matrix needs at least one column");
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], v))
            .collect()
    }

    pub fn tmatvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tmatvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (vi, row) in v.iter().zip(self.data.chunks_exact(self.cols)) {
            for (o, &r) in out.iter_mut().zip(row) {
                *o += vi * r;
            }
        }
        out
    }

    pub fn transposed(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

/// Largest singular value by power iteration on M^T M, tracking the
/// singular value as |M v|. The deterministic all-ones seed is replaced by
/// basis vectors if it happens to lie in the kernel. Stops when successive
/// estimates agree to a relative 1e-10; refuses after 1000 iterations.
pub fn operator_norm(m: &Matrix) -> Result<f64, SolveError> {
    if m.data.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let n = m.cols;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    if m.matvec(&v).iter().all(|&x| x == 0.0) {
        let mut found = false;
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            if m.matvec(&e).iter().any(|&x| x != 0.0) {
                v = e;
                found = true;
                break;
            }
        }
        if !found {
            return Err(SolveError::BadProblem(
                "matrix maps every basis vector to zero",
            ));
        }
    }
    let mut sigma = 0.0;
    for _ in 0..1000 {
        let mv = m.matvec(&v);
        let s = norm(&mv);
        let next = m.tmatvec(&mv);
        let nn = norm(&next);
        if nn == 0.0 {
            // v was a maximizer of nothing; s is still a valid singular
            // value estimate only if stationary, so refuse.
            return Err(SolveError::BadProblem(
                "power iteration collapsed to the kernel",
            ));
        }
        v = next.iter().map(|x| x / nn).collect();
        if (s - sigma).abs() <= 1e-10 * s.max(f64::MIN_POSITIVE) {
            return Ok(s);
        }
        sigma = s;
    }
    Err(SolveError::IterationCap {
        residual: f64::NAN,
        tol: 1e-10,
    })
}

/// L(x, y) = Fx(x) + x^T B y - <ux, x> + <uy, y> - Fy(y).
#[derive(Clone, Debug)]
pub struct BilinearProblem {
    pub b: Matrix,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub fx: Component,
    pub fy: Component,
}

impl BilinearProblem {
    pub fn validate(&self) {
        assert_eq!(self.ux.len(), self.b.rows, "ux length must match B's rows");
        assert_eq!(
            self.uy.len(),
            self.b.cols,
            "uy length must match B's columns"
        );
        self.fx.qb();
        self.fy.qb();
    }
}

impl SaddleOracle for BilinearProblem {
    fn x_dim(&self) -> usize {
        self.b.rows
    }

    fn y_dim(&self) -> usize {
        self.b.cols
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let by = self.b.matvec(y);
        let btx = self.b.tmatvec(x);
        let value =
            self.fx.value(x) + dot(x, &by) - dot(&self.ux, x) + dot(&self.uy, y) - self.fy.value(y);
        let gx: Vec<f64> = self
            .fx
            .grad(x)
            .iter()
            .zip(&by)
            .zip(&self.ux)
            .map(|((f, b), u)| f + b - u)
            .collect();
        // Gradient of -L in y: Fy'(y) - B^T x - uy.
        let gy: Vec<f64> = self
            .fy
            .grad(y)
            .iter()
            .zip(&btx)
            .zip(&self.uy)
            .map(|((f, b), u)| f - b - u)
            .collect();
        (value, gx, gy)
    }
}

/// Per-block certificates of a bilinear problem. The coupling contributes
/// its operator norm to each block's sensitivity to the other variable.
pub fn bilinear_qb(p: &BilinearProblem) -> Result<QBComposition, SolveError> {
    p.validate();
    let (gfx, lfx) = p.fx.qb();
    let (gfy, lfy) = p.fy.qb();
    let b_norm = operator_norm(&p.b)?;
    let bt_norm = operator_norm(&p.b.transposed())?;
    Ok(QBComposition {
        gx: gfx + norm(&p.ux),
        gy: gfy + norm(&p.uy),
        lxx: lfx,
        lxy: b_norm,
        lyx: bt_norm,
        lyy: lfy,
    })
}

/// Runs the comparator-adaptive learner on the stacked saddle gradient,
/// accumulating what the gap certificate needs: iterate averages, the
/// realized inner products, and the gradient sum.
pub struct SaddleDriver<O: SaddleOracle> {
    pub oracle: O,
    pub cfg: QBConfig,
    pub certs: QuadBound,
    pub state: QBState,
    sum_x: Vec<f64>,
    sum_y: Vec<f64>,
    sum_inner: f64,
    sum_g: Vec<f64>,
    rounds: u64,
}

impl<O: SaddleOracle> SaddleDriver<O> {
    pub fn new(oracle: O, cfg: QBConfig, certs: QuadBound) -> Self {
        assert_eq!(
            cfg.dim,
            oracle.x_dim() + oracle.y_dim(),
            "learner dimension must be x_dim + y_dim"
        );
        let state = qb_init(&cfg);
        SaddleDriver {
            sum_x: vec![0.0; oracle.x_dim()],
            sum_y: vec![0.0; oracle.y_dim()],
            sum_inner: 0.0,
            sum_g: vec![0.0; cfg.dim],
            rounds: 0,
            oracle,
            cfg,
            certs,
            state,
        }
    }

    pub fn step(&mut self) -> Result<(), StepError> {
        let xd = self.oracle.x_dim();
        let (x, y) = self.state.w.split_at(xd);
        for (s, v) in self.sum_x.iter_mut().zip(x) {
            *s += v;
        }
        for (s, v) in self.sum_y.iter_mut().zip(y) {
            *s += v;
        }
        let (_, gx, gy) = self.oracle.eval(x, y);
        let mut g = gx;
        g.extend_from_slice(&gy);
        self.sum_inner += dot(&g, &self.state.w);
        for (s, v) in self.sum_g.iter_mut().zip(&g) {
            *s += v;
        }
        qb_step(&self.cfg, &mut self.state, &g, self.certs.g, self.certs.l)?;
        self.rounds += 1;
        Ok(())
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Averaged iterates (x_bar, y_bar) over the played rounds.
    pub fn averages(&self) -> (Vec<f64>, Vec<f64>) {
        assert!(self.rounds > 0, "no rounds played");
        let r = self.rounds as f64;
        (
            self.sum_x.iter().map(|s| s / r).collect(),
            self.sum_y.iter().map(|s| s / r).collect(),
        )
    }

    /// Realized linearized regret sum_t <g_t, w_t - w_ref> against a fixed
    /// stacked point. T times the duality gap of the averages against
    /// (x_ref, y_ref) is at most this, which the learner's certificate
    /// bounds in turn.
    pub fn linear_regret_vs(&self, w_ref: &[f64]) -> f64 {
        assert_eq!(w_ref.len(), self.cfg.dim, "reference dimension mismatch");
        self.sum_inner - dot(&self.sum_g, w_ref)
    }
}

/// Adapter: the stacked saddle gradient as a loss oracle (value is L
/// itself, which is only meaningful through gap differences).
pub struct StackedSaddle<O: SaddleOracle> {
    pub oracle: O,
    pub certs: QuadBound,
}

impl<O: SaddleOracle> LossOracle for StackedSaddle<O> {
    fn begin_round(&mut self, _played: &[f64]) -> QuadBound {
        self.certs
    }

    fn query(&self, w: &[f64]) -> LossQuery {
        let (x, y) = w.split_at(self.oracle.x_dim());
        let (value, gx, gy) = self.oracle.eval(x, y);
        let mut grad = gx;
        grad.extend_from_slice(&gy);
        LossQuery { value, grad }
    }
}

/// Runs `rounds` steps from the origin and returns the finished driver.
pub fn saddle_solve<O: SaddleOracle>(
    oracle: O,
    cfg: QBConfig,
    certs: QuadBound,
    rounds: u64,
) -> Result<SaddleDriver<O>, StepError> {
    let mut driver = SaddleDriver::new(oracle, cfg, certs);
    for _ in 0..rounds {
        driver.step()?;
    }
    Ok(driver)
}

/// Duality gap of a candidate pair against a reference pair:
/// L(x_bar, y_ref) - L(x_ref, y_bar). Nonnegative whenever the reference
/// is a saddle point.
pub fn duality_gap(
    oracle: &impl SaddleOracle,
    x_bar: &[f64],
    y_bar: &[f64],
    x_ref: &[f64],
    y_ref: &[f64],
) -> f64 {
    oracle.eval(x_bar, y_ref).0 - oracle.eval(x_ref, y_bar).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qb_learner::qb_regret_bound;

    #[test]
    fn compose_hand_values() {
        let c = QBComposition {
            gx: 3.0,
            gy: 4.0,
            lxx: 0.0,
            lxy: 0.0,
            lyx: 0.0,
            lyy: 0.0,
        };
        let (g, l) = compose_qb(&c);
        assert!((g - 5.0 * 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(l, 0.0);
        let c = QBComposition {
            gx: 0.0,
            gy: 0.0,
            lxx: 1.0,
            lxy: 0.0,
            lyx: 0.0,
            lyy: 1.0,
        };
        let (_, l) = compose_qb(&c);
        assert!((l - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_diagonal_and_rank_one() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0]]);
        assert!((operator_norm(&m).unwrap() - 4.0).abs() < 1e-8);
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!((operator_norm(&m).unwrap() - 1.0).abs() < 1e-10);
        let z = Matrix::from_rows(&[vec![0.0, 0.0]]);
        assert_eq!(operator_norm(&z).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_survives_kernel_seed() {
        // The all-ones seed is exactly in the kernel of [1, -1].
        let m = Matrix::from_rows(&[vec![1.0, -1.0]]);
        assert!((operator_norm(&m).unwrap() - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn bilinear_gradients_and_signs() {
        // L(x, y) = x y: at (1, 1), g_x = 1 and g_y = -1 (descent for the
        // maximizing player is toward larger L).
        let p = BilinearProblem {
            b: Matrix::from_rows(&[vec![1.0]]),
            ux: vec![0.0],
            uy: vec![0.0],
            fx: Component::Zero,
            fy: Component::Zero,
        };
        let (v, gx, gy) = p.eval(&[1.0], &[1.0]);
        assert_eq!(v, 1.0);
        assert_eq!(gx, vec![1.0]);
        assert_eq!(gy, vec![-1.0]);
    }

    #[test]
    fn bilinear_certificates() {
        let p = BilinearProblem {
            b: Matrix::from_rows(&[vec![2.0]]),
            ux: vec![1.0],
            uy: vec![0.0],
            fx: Component::Quadratic { a: 1.0 },
            fy: Component::Quadratic { a: 1.0 },
        };
        let c = bilinear_qb(&p).unwrap();
        assert!((c.gx - 1.0).abs() < 1e-12);
        assert_eq!(c.gy, 0.0);
        assert_eq!(c.lxx, 1.0);
        assert!((c.lxy - 2.0).abs() < 1e-9);
        assert!((c.lyx - 2.0).abs() < 1e-9);
        assert_eq!(c.lyy, 1.0);
    }

    #[test]
    fn strongly_convex_saddle_converges_with_certified_gap() {
        // L(x, y) = x^2/2 + x y - x - y^2/2: saddle at (1/2, 1/2).
        let p = BilinearProblem {
            b: Matrix::from_rows(&[vec![1.0]]),
            ux: vec![1.0],
            uy: vec![0.0],
            fx: Component::Quadratic { a: 1.0 },
            fy: Component::Quadratic { a: 1.0 },
        };
        let comp = bilinear_qb(&p).unwrap();
        let (g, l) = compose_qb(&comp);
        let certs = QuadBound::new(g, l);
        let gap_at = |rounds: u64| {
            let cfg = QBConfig::new(1.0, g, l, 2);
            let driver = saddle_solve(p.clone(), cfg, certs, rounds).unwrap();
            assert_eq!(driver.state.violations, 0);
            let (xb, yb) = driver.averages();
            let gap = duality_gap(&driver.oracle, &xb, &yb, &[0.5], &[0.5]);
            assert!(gap >= -1e-9, "gap {gap} negative at a saddle reference");
            // T gap <= realized linear regret <= certificate.
            let t_gap = rounds as f64 * gap;
            let lin = driver.linear_regret_vs(&[0.5, 0.5]);
            assert!(t_gap <= lin + 1e-9 * (1.0 + lin.abs()));
            let bound = qb_regret_bound(&driver.cfg, &driver.state, 0.5f64.hypot(0.5));
            assert!(lin <= bound + 1e-9 * (1.0 + bound.abs()));
            gap
        };
        // The certified rate is O(1/sqrt(T)); a 16x horizon must shrink
        // the gap decisively.
        let early = gap_at(500);
        let late = gap_at(8000);
        assert!(late <= 0.5 * early, "gap did not shrink: {early} -> {late}");
    }

    #[test]
    fn norm_component_subgradient_at_origin() {
        let c = Component::Norm { c: 2.0 };
        assert_eq!(c.grad(&[0.0, 0.0]), vec![0.0, 0.0]);
        let g = c.grad(&[3.0, 4.0]);
        assert!((g[0] - 1.2).abs() < 1e-12 && (g[1] - 1.6).abs() < 1e-12);
        assert_eq!(c.qb(), (2.0, 0.0));
    }
}
