//! JSON experiment configuration: scenario, learner, horizons, seeds. The
//! parsed config is echoed verbatim into the run summary so an output
//! directory is self-describing.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub learner: LearnerConfig,
    pub horizons: Vec<u64>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    StaticLb {
        g: f64,
        l: f64,
    },
    DynamicLb {
        g: f64,
        l: f64,
        m: f64,
        mu_exp: f64,
    },
    Regression {
        x_scale: f64,
        noise: f64,
        drift: DriftConfig,
    },
    BilinearSaddle {
        b: Vec<Vec<f64>>,
        ux: Vec<f64>,
        uy: Vec<f64>,
        fx: ComponentConfig,
        fy: ComponentConfig,
        x_ref: Vec<f64>,
        y_ref: Vec<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    Piecewise {
        targets: Vec<Vec<f64>>,
    },
    RandomWalk {
        start: Vec<f64>,
        step: f64,
        max_norm: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentConfig {
    Zero,
    Quadratic { a: f64 },
    Norm { c: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerConfig {
    /// Comparator-adaptive learner; regret budget eps at the origin.
    Qb { eps: f64 },
    /// Grid-of-experts dynamic learner. `max_exponent` caps the radius
    /// ladder (default 40).
    Dynamic {
        eps: f64,
        smooth: bool,
        max_exponent: Option<u32>,
    },
    /// Fixed-step gradient descent, eta = eta_scale / sqrt(T); no
    /// projection unless a radius is given.
    BaselineOgd { eta_scale: f64, radius: Option<f64> },
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&raw).context("parsing config JSON")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            bail!("config needs at least one horizon");
        }
        if self.horizons.contains(&0) {
            bail!("horizons must be positive");
        }
        if self.seeds.is_empty() {
            bail!("config needs at least one seed");
        }
        match &self.scenario {
            ScenarioConfig::StaticLb { g, l } => {
                if !(*g > 0.0 && g.is_finite()) || !(*l > 0.0 && l.is_finite()) {
                    bail!("static_lb needs positive finite g and l");
                }
            }
            ScenarioConfig::DynamicLb { g, l, m, mu_exp } => {
                if !(*g > 0.0 && g.is_finite())
                    || !(*l > 0.0 && l.is_finite())
                    || !(*m > 0.0 && m.is_finite())
                {
                    bail!("dynamic_lb needs positive finite g, l, m");
                }
                if g / l > *m {
                    bail!("dynamic_lb needs g/l <= m");
                }
                if !(0.0..=0.5).contains(mu_exp) {
                    bail!("dynamic_lb exponent must lie in [0, 1/2]");
                }
            }
            ScenarioConfig::Regression {
                x_scale,
                noise,
                drift,
            } => {
                if !(*x_scale > 0.0 && x_scale.is_finite()) {
                    bail!("regression needs positive finite x_scale");
                }
                if !(*noise >= 0.0 && noise.is_finite()) {
                    bail!("regression noise must be nonnegative");
                }
                match drift {
                    DriftConfig::Piecewise { targets } => {
                        if targets.is_empty() || targets[0].is_empty() {
                            bail!("piecewise drift needs nonempty targets");
                        }
                        let d = targets[0].len();
                        if targets.iter().any(|t| t.len() != d) {
                            bail!("piecewise targets have mixed dimensions");
                        }
                    }
                    DriftConfig::RandomWalk {
                        start,
                        step,
                        max_norm,
                    } => {
                        if start.is_empty() {
                            bail!("random walk needs a start point");
                        }
                        if *step < 0.0
                            || !step.is_finite()
                            || *max_norm <= 0.0
                            || !max_norm.is_finite()
                        {
                            bail!("random walk needs finite step >= 0 and max_norm > 0");
                        }
                    }
                }
            }
            ScenarioConfig::BilinearSaddle {
                b,
                ux,
                uy,
                x_ref,
                y_ref,
                ..
            } => {
                if b.is_empty() || b[0].is_empty() {
                    bail!("saddle coupling matrix must be nonempty");
                }
                let cols = b[0].len();
                if b.iter().any(|r| r.len() != cols) {
                    bail!("saddle coupling matrix has ragged rows");
                }
                if ux.len() != b.len() || x_ref.len() != b.len() {
                    bail!("ux and x_ref must match the matrix row count");
                }
                if uy.len() != cols || y_ref.len() != cols {
                    bail!("uy and y_ref must match the matrix column count");
                }
                if !matches!(self.learner, LearnerConfig::Qb { .. }) {
                    bail!("the saddle scenario runs on the qb learner");
                }
            }
        }
        match &self.learner {
            LearnerConfig::Qb { eps } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    bail!("qb learner needs positive finite eps");
                }
            }
            LearnerConfig::Dynamic { eps, .. } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    bail!("dynamic learner needs positive finite eps");
                }
            }
            LearnerConfig::BaselineOgd { eta_scale, radius } => {
                if !(*eta_scale > 0.0 && eta_scale.is_finite()) {
                    bail!("baseline needs positive finite eta_scale");
                }
                if let Some(r) = radius {
                    if *r <= 0.0 || r.is_nan() {
                        bail!("baseline radius must be positive");
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig {
            scenario: ScenarioConfig::Regression {
                x_scale: 1.0,
                noise: 0.1,
                drift: DriftConfig::Piecewise {
                    targets: vec![vec![0.3, 0.0], vec![0.0, 0.3]],
                },
            },
            learner: LearnerConfig::Dynamic {
                eps: 1.0,
                smooth: true,
                max_exponent: Some(3),
            },
            horizons: vec![200],
            seeds: vec![1, 2, 3],
        };
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = r#"{
            "scenario": {"kind": "static_lb", "g": 1.0, "l": 0.0},
            "learner": {"kind": "qb", "eps": 1.0},
            "horizons": [10],
            "seeds": [1]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(bad).unwrap();
        assert!(cfg.validate().is_err());

        let saddle_on_ogd = r#"{
            "scenario": {"kind": "bilinear_saddle", "b": [[1.0]], "ux": [0.0],
                         "uy": [0.0], "fx": {"kind": "zero"}, "fy": {"kind": "zero"},
                         "x_ref": [1.0], "y_ref": [1.0]},
            "learner": {"kind": "baseline_ogd", "eta_scale": 1.0, "radius": null},
            "horizons": [10],
            "seeds": [1]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(saddle_on_ogd).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{
            "scenario": {"kind": "static_lb", "g": 1.0, "l": 1.0, "extra": 2},
            "learner": {"kind": "qb", "eps": 1.0},
            "horizons": [10],
            "seeds": [1]
        }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }
}
