//! Experiment runner: drives a learner against a scenario for each
//! (horizon, seed) pair, records per-round traces, and writes one CSV per
//! run plus a JSON summary. Independent runs execute in parallel; reruns
//! of the same config are byte-identical.
//!
//! CSV layout (version line `# run-csv/1`, then a header row): columns
//! `t, loss_played, w_norm`, one `regret_<path>` per comparator path, and
//! one `bound_<name>` per certified bound. The comparator-adaptive
//! learner certifies constant paths; the grid learner certifies any path
//! some grid radius covers. For the saddle scenario `loss_played` and the
//! regret columns are the linearized quantities <g_t, w_t> and
//! <g_t, w_t - u>, the scale on which the reduction's guarantee lives.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qbound::core::{
    add_scaled, dot, norm, path_length, project_ball, qb_check, LossOracle, QuadBound,
};
use qbound::dynamic::{dyn_init, dyn_play, dyn_round, DynLearner, GridConfig};
use qbound::qb_learner::{qb_init, qb_regret_bound, qb_step, QBConfig, QBState};
use qbound::saddle::{
    bilinear_qb, compose_qb, duality_gap, BilinearProblem, Component, Matrix, StackedSaddle,
};

use crate::adversary::{DynamicLbAdversary, StaticLbAdversary};
use crate::config::{
    ComponentConfig, DriftConfig, ExperimentConfig, LearnerConfig, ScenarioConfig,
};
use crate::regression::{Drift, RegressionStream};
use crate::rng::PRNG_NAME;

/// Slack for re-checking `regret <= bound` on written series: float sums
/// accumulated in different orders may disagree in the last bits.
fn bound_tol(bound: f64) -> f64 {
    1e-9 * (1.0 + bound.abs())
}

/// One fixed-step gradient-descent update, projected onto the radius-D
/// ball (no projection when `radius` is infinite).
pub fn baseline_ogd_step(w: &[f64], g: &[f64], eta: f64, radius: f64) -> Vec<f64> {
    assert!(eta > 0.0, "baseline_ogd_step: eta must be positive");
    assert!(radius > 0.0, "baseline_ogd_step: radius must be positive");
    project_ball(&add_scaled(w, -eta, g), radius)
}

/// The learner being benchmarked, behind one play/absorb interface.
enum Driver {
    Qb { cfg: QBConfig, st: QBState },
    Dynamic { l: DynLearner },
    Ogd { w: Vec<f64>, eta: f64, radius: f64 },
}

impl Driver {
    fn play(&self) -> Vec<f64> {
        match self {
            Driver::Qb { st, .. } => st.w.clone(),
            Driver::Dynamic { l } => dyn_play(l),
            Driver::Ogd { w, .. } => w.clone(),
        }
    }

    /// Consumes the round. The oracle must already be fixed on the played
    /// point; the grid learner queries it again at its expert iterates.
    fn absorb(&mut self, oracle: &impl LossOracle, certs: QuadBound, g: &[f64]) -> Result<()> {
        match self {
            Driver::Qb { cfg, st } => qb_step(cfg, st, g, certs.g, certs.l)?,
            Driver::Dynamic { l } => dyn_round(l, oracle, certs)?,
            Driver::Ogd { w, eta, radius } => {
                *w = baseline_ogd_step(w, g, *eta, *radius);
            }
        }
        Ok(())
    }

    /// Regularizer snapshot (V, alpha, 1/rho) after the absorbed round;
    /// present only for the comparator-adaptive learner.
    fn qb_prefix(&self) -> Option<[f64; 3]> {
        match self {
            Driver::Qb { st, .. } => Some([st.v, st.alpha, st.rho_inv]),
            _ => None,
        }
    }

    fn violations(&self) -> u64 {
        match self {
            Driver::Qb { st, .. } => st.violations,
            Driver::Dynamic { l } => l.weights.scale_violations,
            Driver::Ogd { .. } => 0,
        }
    }
}

fn make_driver(
    learner: &LearnerConfig,
    dim: usize,
    g_max: f64,
    l_max: f64,
    horizon: u64,
) -> Driver {
    match learner {
        LearnerConfig::Qb { eps } => {
            let cfg = QBConfig::new(*eps, g_max, l_max, dim);
            let st = qb_init(&cfg);
            Driver::Qb { cfg, st }
        }
        LearnerConfig::Dynamic {
            eps,
            smooth,
            max_exponent,
        } => {
            let mut gcfg = GridConfig::new(*eps, g_max, l_max, horizon);
            gcfg.smooth = *smooth;
            if let Some(cap) = max_exponent {
                gcfg.max_exponent = *cap;
            }
            Driver::Dynamic {
                l: dyn_init(&gcfg, dim, true),
            }
        }
        LearnerConfig::BaselineOgd { eta_scale, radius } => Driver::Ogd {
            w: vec![0.0; dim],
            eta: eta_scale / (horizon as f64).sqrt(),
            radius: radius.unwrap_or(f64::INFINITY),
        },
    }
}

/// One comparator path's per-round bookkeeping.
struct PathTrack {
    id: &'static str,
    /// The comparator's realized loss each round (linearized inner
    /// product for the saddle scenario).
    losses: Vec<f64>,
    /// The comparator point charged each round.
    points: Vec<Vec<f64>>,
}

impl PathTrack {
    fn new(id: &'static str) -> Self {
        PathTrack {
            id,
            losses: Vec::new(),
            points: Vec::new(),
        }
    }

    fn push(&mut self, point: Vec<f64>, loss: f64) {
        self.points.push(point);
        self.losses.push(loss);
    }

    fn is_constant(&self) -> bool {
        self.points.windows(2).all(|p| p[0] == p[1])
    }
}

/// Per-round learner-side trace.
struct RoundTrace {
    loss_played: Vec<f64>,
    w_norm: Vec<f64>,
    qb_prefix: Vec<[f64; 3]>,
    qb_check_violations: u64,
}

impl RoundTrace {
    fn new(horizon: u64) -> Self {
        let cap = horizon as usize;
        RoundTrace {
            loss_played: Vec::with_capacity(cap),
            w_norm: Vec::with_capacity(cap),
            qb_prefix: Vec::new(),
            qb_check_violations: 0,
        }
    }

    fn record(&mut self, w: &[f64], loss: f64, grad: &[f64], certs: QuadBound) {
        if !qb_check(grad, w, certs) {
            self.qb_check_violations += 1;
        }
        self.loss_played.push(loss);
        self.w_norm.push(norm(w));
    }

    fn after_absorb(&mut self, driver: &Driver) {
        if let Some(p) = driver.qb_prefix() {
            self.qb_prefix.push(p);
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathStats {
    pub regret: f64,
    pub path_length: f64,
    pub max_norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSummary {
    /// Comparator path the bound certifies.
    pub path: String,
    /// Name of the bound column.
    pub bound: String,
    /// Final realized regret along the path.
    pub regret: f64,
    /// Final bound value.
    pub bound_value: f64,
    /// Whether regret <= bound held at every round.
    pub holds: bool,
}

/// Everything one (horizon, seed) run produced.
pub struct RunOutput {
    pub horizon: u64,
    pub seed: u64,
    pub loss_played: Vec<f64>,
    pub w_norm: Vec<f64>,
    /// Named series in CSV order after the three fixed columns:
    /// regret_<path> per path, then bound_<name> per certified bound.
    pub columns: Vec<(String, Vec<f64>)>,
    pub paths: Vec<(String, PathStats)>,
    pub bounds_final: Vec<(String, f64)>,
    pub checks: Vec<CheckSummary>,
    /// Rounds whose observed gradient broke the round certificate.
    pub qb_check_violations: u64,
    /// Violations the learner itself flagged (certificate or scale).
    pub learner_violations: u64,
    /// (round, check) pairs where regret exceeded its bound.
    pub bound_violations: u64,
    /// Final duality gap (saddle scenario only).
    pub gap: Option<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub prng: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunSummary>,
}

#[derive(Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: u64,
    pub seed: u64,
    pub csv: String,
    pub loss_total: f64,
    pub paths: BTreeMap<String, PathStats>,
    pub bounds: BTreeMap<String, f64>,
    pub checks: Vec<CheckSummary>,
    pub qb_check_violations: u64,
    pub learner_violations: u64,
    pub bound_violations: u64,
    pub gap: Option<f64>,
}

/// Prefix series of the grid learner's dynamic regret certificate along a
/// path: at round t, the tightest bound over experts whose radius covers
/// the path seen so far. None when no radius covers the full path.
fn untuned_series(l: &DynLearner, track: &PathTrack) -> Option<Vec<f64>> {
    let logs = l
        .logs
        .as_ref()
        .expect("runner initializes the grid learner with logs");
    let t_len = logs.l_ts.len();
    let max_u_final = track.points.iter().map(|p| norm(p)).fold(0.0, f64::max);
    if !l.experts.iter().any(|e| max_u_final <= e.d * (1.0 + 1e-12)) {
        return None;
    }

    let k = l.weights_cfg.k;
    let sum_mu: f64 = l.weights_cfg.mu.iter().sum();
    let sum_mu2: f64 = l.weights_cfg.mu.iter().map(|m| m * m).sum();
    let c_s = sum_mu / sum_mu2;
    let lambdas: Vec<f64> = l
        .experts
        .iter()
        .map(|e| (sum_mu2 / (e.mu * e.mu)).ln() + 1.0)
        .collect();

    let n = l.experts.len();
    let mut cum_gap = vec![0.0; n];
    let mut cum_gsq = vec![0.0; n];
    let mut run_max = 0.0f64;
    let mut p_len = 0.0;
    let mut out = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let u = &track.points[t];
        if t > 0 {
            p_len += norm(&add_scaled(u, -1.0, &track.points[t - 1]));
        }
        let u_norm = norm(u);
        run_max = run_max.max(u_norm);
        for i in 0..n {
            cum_gap[i] += logs.l_ts[t] * (track.losses[t] - logs.expert_losses[t][i]);
            cum_gsq[i] += logs.expert_gsq[t][i];
        }
        let mut best = f64::INFINITY;
        for (i, e) in l.experts.iter().enumerate() {
            if run_max > e.d * (1.0 + 1e-12) {
                continue;
            }
            let v = 2.0 * k * c_s
                + 2.0 * k * e.d * l.cfg.g_max * lambdas[i]
                + (u_norm * u_norm + 2.0 * e.d * p_len + 4.0 * k * e.d * e.d * lambdas[i])
                    / (2.0 * e.eta)
                + l.cfg.big_k * e.eta * cum_gap[i]
                + 4.0 * e.eta * cum_gsq[i];
            best = best.min(v);
        }
        out.push(best);
    }
    Some(out)
}

/// Builds the column set, path stats, and bound checks from a finished
/// run's raw trace.
fn finish_run(
    driver: Driver,
    trace: RoundTrace,
    tracks: Vec<PathTrack>,
    gap: Option<f64>,
    horizon: u64,
    seed: u64,
) -> RunOutput {
    let t_len = trace.loss_played.len();
    assert_eq!(t_len as u64, horizon, "trace length mismatch");

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for track in &tracks {
        assert_eq!(track.losses.len(), t_len, "path {} loss length", track.id);
        assert_eq!(track.points.len(), t_len, "path {} point length", track.id);
        let mut cum = 0.0;
        let series: Vec<f64> = (0..t_len)
            .map(|t| {
                cum += trace.loss_played[t] - track.losses[t];
                cum
            })
            .collect();
        columns.push((format!("regret_{}", track.id), series));
    }

    // (track index, bound column index) pairs to check.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match &driver {
        Driver::Qb { cfg, .. } => {
            // The adaptive learner's certificate covers fixed comparators.
            for (i, track) in tracks.iter().enumerate() {
                if !track.is_constant() {
                    continue;
                }
                let u_norm = norm(&track.points[0]);
                let series: Vec<f64> = trace
                    .qb_prefix
                    .iter()
                    .map(|&[v, alpha, rho_inv]| {
                        let st = QBState {
                            t: 0,
                            w: Vec::new(),
                            sum_g2: 0.0,
                            sum_l2: 0.0,
                            v,
                            alpha,
                            rho_inv,
                            violations: 0,
                        };
                        qb_regret_bound(cfg, &st, u_norm)
                    })
                    .collect();
                pairs.push((i, columns.len()));
                columns.push((format!("bound_qb_{}", track.id), series));
            }
        }
        Driver::Dynamic { l } => {
            for (i, track) in tracks.iter().enumerate() {
                if let Some(series) = untuned_series(l, track) {
                    pairs.push((i, columns.len()));
                    columns.push((format!("bound_untuned_{}", track.id), series));
                }
            }
        }
        Driver::Ogd { .. } => {}
    }

    let mut bound_violations = 0u64;
    let mut checks = Vec::new();
    for (ti, bi) in pairs {
        let regret = &columns[ti].1;
        let bound = &columns[bi].1;
        let mut holds = true;
        for t in 0..t_len {
            if regret[t] > bound[t] + bound_tol(bound[t]) {
                holds = false;
                bound_violations += 1;
            }
        }
        checks.push(CheckSummary {
            path: tracks[ti].id.to_string(),
            bound: columns[bi].0.clone(),
            regret: *regret.last().unwrap(),
            bound_value: *bound.last().unwrap(),
            holds,
        });
    }

    let paths: Vec<(String, PathStats)> = tracks
        .iter()
        .enumerate()
        .map(|(i, track)| {
            (
                track.id.to_string(),
                PathStats {
                    regret: *columns[i].1.last().unwrap(),
                    path_length: path_length(&track.points),
                    max_norm: track.points.iter().map(|p| norm(p)).fold(0.0, f64::max),
                },
            )
        })
        .collect();

    let bounds_final: Vec<(String, f64)> = columns
        .iter()
        .filter(|(name, _)| name.starts_with("bound_"))
        .map(|(name, col)| (name.clone(), *col.last().unwrap()))
        .collect();

    RunOutput {
        horizon,
        seed,
        learner_violations: driver.violations(),
        loss_played: trace.loss_played,
        w_norm: trace.w_norm,
        columns,
        paths,
        bounds_final,
        checks,
        qb_check_violations: trace.qb_check_violations,
        bound_violations,
        gap,
    }
}

fn run_static_lb(
    g: f64,
    l: f64,
    learner: &LearnerConfig,
    horizon: u64,
    seed: u64,
) -> Result<RunOutput> {
    let mut adv = StaticLbAdversary::new(g, l, horizon, seed);
    let mut driver = make_driver(learner, 2, g, l, horizon);
    let mut trace = RoundTrace::new(horizon);
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        let w = driver.play();
        let certs = adv.begin_round(&w);
        let q = adv.query(&w);
        trace.record(&w, q.value, &q.grad, certs);
        grads.push(q.grad.clone());
        driver.absorb(&adv, certs, &q.grad)?;
        trace.after_absorb(&driver);
    }
    // The adversary picks its comparator from the full sign history, so
    // both paths are charged after the fact; the losses are linear.
    let u = adv.comparator();
    let mut origin = PathTrack::new("origin");
    let mut comp = PathTrack::new("adversary");
    for gr in &grads {
        origin.push(vec![0.0; 2], 0.0);
        comp.push(u.clone(), dot(gr, &u));
    }
    Ok(finish_run(
        driver,
        trace,
        vec![origin, comp],
        None,
        horizon,
        seed,
    ))
}

fn run_dynamic_lb(
    g: f64,
    l: f64,
    m: f64,
    mu_exp: f64,
    learner: &LearnerConfig,
    horizon: u64,
    seed: u64,
) -> Result<RunOutput> {
    let mut adv = DynamicLbAdversary::new(g, l, m, mu_exp, horizon);
    let certs = adv.certs();
    let mut driver = make_driver(learner, 2, certs.g, certs.l, horizon);
    let mut trace = RoundTrace::new(horizon);
    let mut origin = PathTrack::new("origin");
    let mut path = PathTrack::new("adversary_path");
    let zeros = vec![0.0; 2];
    for _ in 0..horizon {
        let w = driver.play();
        let round_certs = adv.begin_round(&w);
        let q = adv.query(&w);
        trace.record(&w, q.value, &q.grad, round_certs);
        let u_t = adv.comparator_path().last().unwrap().clone();
        origin.push(zeros.clone(), adv.query(&zeros).value);
        path.push(u_t.clone(), adv.query(&u_t).value);
        driver.absorb(&adv, round_certs, &q.grad)?;
        trace.after_absorb(&driver);
    }
    Ok(finish_run(
        driver,
        trace,
        vec![origin, path],
        None,
        horizon,
        seed,
    ))
}

fn drift_dim(d: &DriftConfig) -> usize {
    match d {
        DriftConfig::Piecewise { targets } => targets[0].len(),
        DriftConfig::RandomWalk { start, .. } => start.len(),
    }
}

fn drift_from(d: &DriftConfig) -> Drift {
    match d {
        DriftConfig::Piecewise { targets } => Drift::Piecewise {
            targets: targets.clone(),
        },
        DriftConfig::RandomWalk {
            start,
            step,
            max_norm,
        } => Drift::RandomWalk {
            start: start.clone(),
            step: *step,
            max_norm: *max_norm,
        },
    }
}

fn run_regression(
    x_scale: f64,
    noise: f64,
    drift_cfg: &DriftConfig,
    learner: &LearnerConfig,
    horizon: u64,
    seed: u64,
) -> Result<RunOutput> {
    let dim = drift_dim(drift_cfg);
    let mut stream = RegressionStream::new(x_scale, noise, drift_from(drift_cfg), horizon, seed);
    // Hair of headroom: per-round certificates recompute the same
    // products from realized draws and may round just above the
    // closed-form caps.
    let g_max = stream.g_max_bound() * (1.0 + 1e-9);
    let l_max = stream.l_max_bound() * (1.0 + 1e-9);
    let mut driver = make_driver(learner, dim, g_max, l_max, horizon);
    let mut trace = RoundTrace::new(horizon);
    let mut origin = PathTrack::new("origin");
    let mut drift = PathTrack::new("drift");
    let zeros = vec![0.0; dim];
    for _ in 0..horizon {
        let w = driver.play();
        let certs = stream.begin_round(&w);
        let q = stream.query(&w);
        trace.record(&w, q.value, &q.grad, certs);
        let u_t = stream.star_path().last().unwrap().clone();
        origin.push(zeros.clone(), stream.query(&zeros).value);
        drift.push(u_t.clone(), stream.query(&u_t).value);
        driver.absorb(&stream, certs, &q.grad)?;
        trace.after_absorb(&driver);
    }
    Ok(finish_run(
        driver,
        trace,
        vec![origin, drift],
        None,
        horizon,
        seed,
    ))
}

fn component_from(c: &ComponentConfig) -> Component {
    match *c {
        ComponentConfig::Zero => Component::Zero,
        ComponentConfig::Quadratic { a } => Component::Quadratic { a },
        ComponentConfig::Norm { c } => Component::Norm { c },
    }
}

#[allow(clippy::too_many_arguments)]
fn run_saddle(
    b: &[Vec<f64>],
    ux: &[f64],
    uy: &[f64],
    fx: &ComponentConfig,
    fy: &ComponentConfig,
    x_ref: &[f64],
    y_ref: &[f64],
    learner: &LearnerConfig,
    horizon: u64,
    seed: u64,
) -> Result<RunOutput> {
    let problem = BilinearProblem {
        b: Matrix::from_rows(b),
        ux: ux.to_vec(),
        uy: uy.to_vec(),
        fx: component_from(fx),
        fy: component_from(fy),
    };
    problem.validate();
    let comp = bilinear_qb(&problem)?;
    let (gw, lw) = compose_qb(&comp);
    // A purely bilinear objective from the origin has gw = 0; the learner
    // needs a positive gradient scale, and any upper bound is valid.
    let g_max = if gw > 0.0 { gw } else { 1.0 };
    let x_dim = ux.len();
    let dim = x_dim + uy.len();
    let certs = QuadBound::new(g_max, lw);
    let mut oracle = StackedSaddle {
        oracle: problem,
        certs,
    };
    let mut driver = make_driver(learner, dim, g_max, lw, horizon);

    let mut w_ref = x_ref.to_vec();
    w_ref.extend_from_slice(y_ref);
    let mut trace = RoundTrace::new(horizon);
    let mut origin = PathTrack::new("origin");
    let mut reference = PathTrack::new("reference");
    let zeros = vec![0.0; dim];
    let mut sum_w = vec![0.0; dim];
    for _ in 0..horizon {
        let w = driver.play();
        let round_certs = oracle.begin_round(&w);
        let q = oracle.query(&w);
        for (s, wi) in sum_w.iter_mut().zip(&w) {
            *s += wi;
        }
        trace.record(&w, dot(&q.grad, &w), &q.grad, round_certs);
        origin.push(zeros.clone(), 0.0);
        reference.push(w_ref.clone(), dot(&q.grad, &w_ref));
        driver.absorb(&oracle, round_certs, &q.grad)?;
        trace.after_absorb(&driver);
    }
    let scale = 1.0 / horizon as f64;
    let x_bar: Vec<f64> = sum_w[..x_dim].iter().map(|s| s * scale).collect();
    let y_bar: Vec<f64> = sum_w[x_dim..].iter().map(|s| s * scale).collect();
    let gap = duality_gap(&oracle.oracle, &x_bar, &y_bar, x_ref, y_ref);
    Ok(finish_run(
        driver,
        trace,
        vec![origin, reference],
        Some(gap),
        horizon,
        seed,
    ))
}

/// Runs one (horizon, seed) cell of a config and returns its raw output.
pub fn run_single(cfg: &ExperimentConfig, horizon: u64, seed: u64) -> Result<RunOutput> {
    match &cfg.scenario {
        ScenarioConfig::StaticLb { g, l } => run_static_lb(*g, *l, &cfg.learner, horizon, seed),
        ScenarioConfig::DynamicLb { g, l, m, mu_exp } => {
            run_dynamic_lb(*g, *l, *m, *mu_exp, &cfg.learner, horizon, seed)
        }
        ScenarioConfig::Regression {
            x_scale,
            noise,
            drift,
        } => run_regression(*x_scale, *noise, drift, &cfg.learner, horizon, seed),
        ScenarioConfig::BilinearSaddle {
            b,
            ux,
            uy,
            fx,
            fy,
            x_ref,
            y_ref,
        } => run_saddle(b, ux, uy, fx, fy, x_ref, y_ref, &cfg.learner, horizon, seed),
    }
}

fn csv_name(horizon: u64, seed: u64) -> String {
    format!("run_t{horizon}_seed{seed}.csv")
}

fn render_csv(out: &RunOutput) -> String {
    let t_len = out.loss_played.len();
    let mut s = String::from("# run-csv/1\n");
    s.push_str("t,loss_played,w_norm");
    for (name, col) in &out.columns {
        assert_eq!(col.len(), t_len, "column {name} length mismatch");
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for t in 0..t_len {
        let _ = write!(s, "{},{},{}", t + 1, out.loss_played[t], out.w_norm[t]);
        for (_, col) in &out.columns {
            let _ = write!(s, ",{}", col[t]);
        }
        s.push('\n');
    }
    s
}

fn summarize(out: &RunOutput) -> RunSummary {
    RunSummary {
        horizon: out.horizon,
        seed: out.seed,
        csv: csv_name(out.horizon, out.seed),
        loss_total: out.loss_played.iter().sum(),
        paths: out.paths.iter().cloned().collect(),
        bounds: out.bounds_final.iter().cloned().collect(),
        checks: out.checks.clone(),
        qb_check_violations: out.qb_check_violations,
        learner_violations: out.learner_violations,
        bound_violations: out.bound_violations,
        gap: out.gap,
    }
}

/// Runs every (horizon, seed) cell of the config in parallel and writes
/// the artifacts into `out_dir`. Returns the summary path.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let jobs: Vec<(u64, u64)> = cfg
        .horizons
        .iter()
        .flat_map(|&t| cfg.seeds.iter().map(move |&s| (t, s)))
        .collect();
    let outputs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(t, s)| run_single(cfg, t, s).with_context(|| format!("run t={t} seed={s}")))
        .collect::<Result<Vec<_>>>()?;

    for out in &outputs {
        let name = csv_name(out.horizon, out.seed);
        std::fs::write(out_dir.join(&name), render_csv(out))
            .with_context(|| format!("writing {name}"))?;
    }
    let summary = Summary {
        schema: "summary/1".to_string(),
        prng: PRNG_NAME.to_string(),
        config: cfg.clone(),
        runs: outputs.iter().map(summarize).collect(),
    };
    let mut text = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    text.push('\n');
    let path = out_dir.join("summary.json");
    std::fs::write(&path, text).context("writing summary.json")?;
    Ok(path)
}

fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let version = lines.next().context("empty csv")?;
    if version != "# run-csv/1" {
        bail!("unknown csv version line: {version:?}");
    }
    let header = lines.next().context("missing csv header")?;
    let names: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.parse::<f64>()
                    .with_context(|| format!("row {}: bad float {f:?}", i + 1))
            })
            .collect::<Result<_>>()?;
        if row.len() != names.len() {
            bail!(
                "row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                names.len()
            );
        }
        rows.push(row);
    }
    Ok((names, rows))
}

/// Re-checks every recorded bound assertion in a run directory against
/// the CSV logs, printing one verdict line per check. Returns whether
/// everything passed.
pub fn verify_bounds(run_dir: &Path) -> Result<bool> {
    let summary_path = run_dir.join("summary.json");
    let raw = std::fs::read_to_string(&summary_path)
        .with_context(|| format!("reading {}", summary_path.display()))?;
    let summary: Summary = serde_json::from_str(&raw).context("parsing summary.json")?;
    if summary.schema != "summary/1" {
        bail!("unknown summary schema {:?}", summary.schema);
    }

    let mut all_ok = true;
    let mut fail = |msg: String| {
        println!("FAIL {msg}");
        all_ok = false;
    };
    for run in &summary.runs {
        let text = std::fs::read_to_string(run_dir.join(&run.csv))
            .with_context(|| format!("reading {}", run.csv))?;
        let (names, rows) = parse_csv(&text).with_context(|| run.csv.clone())?;
        let tag = format!("[{}]", run.csv);

        if rows.len() as u64 != run.horizon {
            fail(format!(
                "{tag} expected {} data rows, found {}",
                run.horizon,
                rows.len()
            ));
            continue;
        }
        if rows.iter().enumerate().any(|(i, r)| r[0] != (i + 1) as f64) {
            fail(format!("{tag} round index column is not 1..=T"));
            continue;
        }
        println!("OK   {tag} {} rows, {} columns", rows.len(), names.len());

        let col = |name: &str| names.iter().position(|n| n == name);
        for check in &run.checks {
            let regret_name = format!("regret_{}", check.path);
            let (Some(ri), Some(bi)) = (col(&regret_name), col(&check.bound)) else {
                fail(format!(
                    "{tag} missing column {regret_name} or {}",
                    check.bound
                ));
                continue;
            };
            let mut first_break = None;
            for (t, row) in rows.iter().enumerate() {
                if row[ri] > row[bi] + bound_tol(row[bi]) {
                    first_break = Some(t + 1);
                    break;
                }
            }
            let last = rows.last().unwrap();
            if last[ri] != check.regret || last[bi] != check.bound_value {
                fail(format!(
                    "{tag} final row ({}, {}) disagrees with summary ({}, {})",
                    last[ri], last[bi], check.regret, check.bound_value
                ));
            }
            match first_break {
                None => {
                    println!(
                        "PASS {tag} {} <= {} at every round (final {} <= {})",
                        regret_name, check.bound, last[ri], last[bi]
                    );
                    if !check.holds {
                        fail(format!("{tag} summary marked {} as broken", check.bound));
                    }
                }
                Some(t) => fail(format!(
                    "{tag} {} > {} first at round {t}",
                    regret_name, check.bound
                )),
            }
        }
        for (id, stats) in &run.paths {
            let Some(ri) = col(&format!("regret_{id}")) else {
                fail(format!("{tag} missing column regret_{id}"));
                continue;
            };
            let last = rows.last().unwrap()[ri];
            if last != stats.regret {
                fail(format!(
                    "{tag} regret_{id} final {} disagrees with summary {}",
                    last, stats.regret
                ));
            }
        }
    }
    Ok(all_ok)
}
