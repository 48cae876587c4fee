//! Experiment configuration files.

use std::path::Path;

use difftransfer_core::baselines::Method;
use difftransfer_core::demo::DemoScript;
use difftransfer_core::diffsim::{make_environment, EnvConfig, EnvKind, Environment};
use difftransfer_core::planner::{PlanSettings, PlannerHyper};
use difftransfer_core::qnet::{QConfig, RewardWeights};
use difftransfer_core::transfer::TransferHyper;
use difftransfer_core::{Error as CoreError, TaskVector};
use serde::{Deserialize, Serialize};

use crate::canonical::canonical_hash;
use crate::error::{BenchError, Result};

/// Where the target task lies relative to the source demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    /// The source task itself.
    Source,
    /// An explicit task vector `(tx, ty, θ)` in metres and radians.
    Change([f64; 3]),
    /// The source change with its translation rotated about the origin by
    /// this many degrees; the orientation change is kept.
    RotateSource(f64),
    /// The source change plus a translation and a rotation in degrees; for
    /// fixtures this offsets the base pose.
    Offset { tx: f64, ty: f64, degrees: f64 },
}

impl TargetSpec {
    pub fn resolve(&self, source: &TaskVector) -> TaskVector {
        let s = source.as_slice();
        match *self {
            TargetSpec::Source => source.clone(),
            TargetSpec::Change(x) => TaskVector::planar(x[0], x[1], x[2]),
            TargetSpec::RotateSource(deg) => {
                let (sin, cos) = deg.to_radians().sin_cos();
                TaskVector::planar(cos * s[0] - sin * s[1], sin * s[0] + cos * s[1], s[2])
            }
            TargetSpec::Offset { tx, ty, degrees } => TaskVector::planar(s[0] + tx, s[1] + ty, s[2] + degrees.to_radians()),
        }
    }
}

/// Reward weights without the metric, which always comes from the
/// environment. `c_t` defaults to the transfer threshold `ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSpec {
    pub lambda_t: f64,
    pub lambda_d: f64,
    pub c_t: Option<f64>,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            lambda_t: 1.0,
            lambda_d: 1.0,
            c_t: None,
        }
    }
}

fn default_polish() -> usize {
    500
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

/// One experiment: an environment, a task pair, a method and its
/// hyper-parameters, run once per seed.
///
/// Omitted sections take their defaults: the preset environment of `kind`,
/// the per-kind transfer defaults and the library defaults elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: EnvKind,
    #[serde(default)]
    pub environment: Option<EnvConfig>,
    #[serde(default)]
    pub demo: DemoScript,
    /// Rollout budget for refining a fixture's scripted demonstration.
    #[serde(default = "default_polish")]
    pub polish_epochs: usize,
    pub target: TargetSpec,
    pub method: Method,
    #[serde(default)]
    pub transfer: Option<TransferHyper>,
    #[serde(default)]
    pub planner: PlannerHyper,
    #[serde(default)]
    pub reward: RewardSpec,
    #[serde(default)]
    pub q: QConfig,
    /// Waypoints of the linear-interpolation baseline; by default the fewest
    /// that keep every hop within `planner.eps_sample`.
    #[serde(default)]
    pub linear_waypoints: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    /// A config with every optional section at its default.
    pub fn new(name: &str, kind: EnvKind, target: TargetSpec, method: Method) -> Self {
        ExperimentConfig {
            name: name.into(),
            kind,
            environment: None,
            demo: DemoScript::default(),
            polish_epochs: default_polish(),
            target,
            method,
            transfer: None,
            planner: PlannerHyper::default(),
            reward: RewardSpec::default(),
            q: QConfig::default(),
            linear_waypoints: None,
            seeds: default_seeds(),
            out_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| BenchError::Parse {
            path: path.into(),
            source,
        })
    }

    pub fn env_config(&self) -> EnvConfig {
        self.environment.clone().unwrap_or_else(|| EnvConfig::default_for(self.kind))
    }

    pub fn environment(&self) -> Result<Environment> {
        Ok(make_environment(self.env_config())?)
    }

    pub fn transfer_hyper(&self) -> TransferHyper {
        self.transfer.unwrap_or_else(|| TransferHyper::default_for(self.kind))
    }

    /// Planner settings for `env` with the planner seeded by `seed`.
    pub fn plan_settings(&self, env: &Environment, seed: u64) -> PlanSettings {
        let transfer = self.transfer_hyper();
        PlanSettings {
            planner: PlannerHyper {
                seed,
                ..self.planner.clone()
            },
            reward: RewardWeights {
                lambda_t: self.reward.lambda_t,
                lambda_d: self.reward.lambda_d,
                c_t: self.reward.c_t.unwrap_or(transfer.eps_t),
                metric: env.metric().clone(),
            },
            transfer,
            q: self.q.clone(),
        }
    }

    /// Checks every nested section; nothing is simulated.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_err("name", "name must be non-empty and usable as a file name"));
        }
        let env_cfg = self.env_config();
        if env_cfg.kind != self.kind {
            return Err(config_err("environment.kind", "environment kind differs from the experiment kind"));
        }
        let env = make_environment(env_cfg)?;
        self.demo.validate()?;
        if self.polish_epochs < 1 {
            return Err(config_err("polish_epochs", "at least one epoch is required"));
        }
        if let TargetSpec::Change(x) = self.target {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(config_err("target", "target must be finite"));
            }
        }
        if let TargetSpec::RotateSource(d) | TargetSpec::Offset { degrees: d, .. } = self.target {
            if !d.is_finite() {
                return Err(config_err("target", "target must be finite"));
            }
        }
        self.plan_settings(&env, 0).validate()?;
        if matches!(self.linear_waypoints, Some(n) if n < 2) {
            return Err(config_err("linear_waypoints", "a waypoint chain needs at least 2 points"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("seeds", "at least one seed is required"));
        }
        Ok(())
    }

    /// Hash of everything that determines a single run. The seed list and
    /// the output directory are left out, and defaults are filled in first,
    /// so spelling a default out or reordering fields keeps the hash.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.environment = Some(self.env_config());
        c.transfer = Some(self.transfer_hyper());
        c.seeds.clear();
        c.out_dir = None;
        canonical_hash(&c)
    }
}

fn config_err(field: &str, message: &str) -> BenchError {
    BenchError::Core(CoreError::Config {
        field: field.into(),
        message: message.into(),
    })
}
