//! Running experiments and persisting their records.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use difftransfer_core::baselines::{
    diff_transfer_lt0, direct_transfer, linear_interpolation_transfer, summarize_path, task_distance, waypoint_count,
    BaselineResult, Method,
};
use difftransfer_core::demo::source_demonstration;
use difftransfer_core::diffsim::{resimulates, task_loss, EnvKind, Environment, Trajectory};
use difftransfer_core::planner::{plan, PathResult, PlanOutcome};
use difftransfer_core::qnet::{QDataset, QModel};
use difftransfer_core::{Error as CoreError, TaskVector};
use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_string;
use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Outcome {
    /// A planner run, with the trained model and its online dataset.
    Plan {
        result: PathResult,
        model: QModel,
        dataset: QDataset,
    },
    Baseline { result: BaselineResult },
    /// The run stopped on a numeric error.
    Error { message: String },
}

/// Everything one (config, seed) run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub task: String,
    pub method: Method,
    pub source: TaskVector,
    pub target: TaskVector,
    pub success: bool,
    /// Rollouts performed (metric `N`).
    pub n: usize,
    /// Final distance to the target: degrees for revolute fixtures, metres
    /// otherwise.
    pub d: Option<f64>,
    /// Final task loss against the target.
    pub loss: Option<f64>,
    /// Excluded from reproducibility comparisons.
    pub wall_time_s: f64,
    pub outcome: Outcome,
}

impl RunRecord {
    /// The record with its wall time zeroed, for comparing reruns.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }

    pub fn model(&self) -> Option<&QModel> {
        match &self.outcome {
            Outcome::Plan { model, .. } => Some(model),
            _ => None,
        }
    }

    pub fn final_trajectory(&self) -> Option<&Trajectory> {
        match &self.outcome {
            Outcome::Plan { result, .. } => result.final_trajectory(),
            Outcome::Baseline { result } => Some(&result.trajectory),
            Outcome::Error { .. } => None,
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}-seed{}.json", self.task, self.seed)
    }

    pub fn to_canonical(&self) -> Result<String> {
        to_canonical_string(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| BenchError::Parse {
            path: path.into(),
            source,
        })
    }
}

/// The environment and source demonstration shared by every seed.
pub struct Prepared {
    pub env: Environment,
    pub source: Trajectory,
    pub target: TaskVector,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let env = config.environment()?;
    let source = source_demonstration(&env, &config.demo, &config.transfer_hyper(), config.polish_epochs)?;
    let target = config.target.resolve(&source.achieved_change);
    Ok(Prepared { env, source, target })
}

fn run_method(config: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<(BaselineResult, Outcome), CoreError> {
    let hyper = config.transfer_hyper();
    let planned = |out: PlanOutcome, method| {
        let summary = summarize_path(&p.env, &p.target, &out.result, method)?;
        let outcome = Outcome::Plan {
            result: out.result,
            model: out.model,
            dataset: out.data,
        };
        Ok((summary, outcome))
    };
    match config.method {
        Method::DiffTransfer => planned(plan(&p.env, &p.source, &p.target, &config.plan_settings(&p.env, seed))?, config.method),
        Method::DiffTransferLt0 => planned(
            diff_transfer_lt0(&p.env, &p.source, &p.target, &config.plan_settings(&p.env, seed))?,
            config.method,
        ),
        Method::Direct => {
            let r = direct_transfer(&p.env, &p.source, &p.target, &hyper)?;
            Ok((r.clone(), Outcome::Baseline { result: r }))
        }
        Method::LinearInterp => {
            let count = config.linear_waypoints.unwrap_or_else(|| {
                waypoint_count(&p.env, &p.source.achieved_change, &p.target, config.planner.eps_sample)
            });
            let r = linear_interpolation_transfer(&p.env, &p.source, &p.target, count, &hyper)?;
            Ok((r.clone(), Outcome::Baseline { result: r }))
        }
    }
}

/// Runs one seed. A numeric failure inside the run yields a failed record;
/// other errors are returned.
pub fn run_seed(config: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<RunRecord> {
    let start = Instant::now();
    let outcome = run_method(config, p, seed);
    let wall_time_s = start.elapsed().as_secs_f64();
    let (summary, outcome) = match outcome {
        Ok(v) => (Some(v.0), v.1),
        Err(CoreError::Numeric(message)) => (None, Outcome::Error { message }),
        Err(e) => return Err(e.into()),
    };
    Ok(RunRecord {
        config_hash: config.hash()?,
        config: config.clone(),
        seed,
        task: config.name.clone(),
        method: config.method,
        source: p.source.achieved_change.clone(),
        target: p.target.clone(),
        success: summary.as_ref().is_some_and(|s| s.success),
        n: summary.as_ref().map_or(0, |s| s.n),
        d: summary.as_ref().map(|s| s.d),
        loss: summary.as_ref().map(|s| s.loss),
        wall_time_s,
        outcome,
    })
}

/// One record per seed, in the order given.
pub fn run_experiment(config: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<RunRecord>> {
    let p = prepare(config)?;
    seeds.iter().map(|&seed| run_seed(config, &p, seed)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub seed: u64,
    pub method: Method,
    pub success: bool,
    pub n: usize,
    pub d: Option<f64>,
}

/// The index written next to the records of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIndex {
    pub task: String,
    pub config_hash: String,
    pub runs: Vec<IndexEntry>,
}

pub const INDEX_FILE: &str = "index.json";

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Writes one canonical file per record plus `index.json` into `dir`.
pub fn persist(dir: &Path, records: &[RunRecord]) -> Result<Vec<PathBuf>> {
    let first = records
        .first()
        .ok_or_else(|| BenchError::Usage("no records to persist".into()))?;
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut paths = Vec::with_capacity(records.len());
    let mut runs = Vec::with_capacity(records.len());
    for r in records {
        let path = dir.join(r.file_name());
        write(&path, &r.to_canonical()?)?;
        paths.push(path);
        runs.push(IndexEntry {
            file: r.file_name(),
            seed: r.seed,
            method: r.method,
            success: r.success,
            n: r.n,
            d: r.d,
        });
    }
    let index = RunIndex {
        task: first.task.clone(),
        config_hash: first.config_hash.clone(),
        runs,
    };
    write(&dir.join(INDEX_FILE), &to_canonical_string(&index)?)?;
    Ok(paths)
}

/// Records from files and directories; a directory contributes every
/// `*.json` in it except the index, in file-name order.
pub fn load_records(paths: &[PathBuf]) -> Result<Vec<RunRecord>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| BenchError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json") && f.file_name().is_some_and(|n| n != INDEX_FILE))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    files.iter().map(|f| RunRecord::load(f)).collect()
}

fn mismatch(what: &str, stored: impl std::fmt::Debug, derived: impl std::fmt::Debug) -> BenchError {
    BenchError::Usage(format!("record {what} is {stored:?} but its logs give {derived:?}"))
}

/// Recomputes `N`, `d` and the success flag of `r` from its embedded logs
/// and configuration, re-simulating the final trajectory.
pub fn verify_record(r: &RunRecord) -> Result<()> {
    let env = r.config.environment()?;
    let eps_t = r.config.transfer_hyper().eps_t;
    let (n, traj, success) = match &r.outcome {
        Outcome::Error { .. } => {
            if r.success || r.n != 0 {
                return Err(mismatch("success", r.success, false));
            }
            return Ok(());
        }
        Outcome::Plan { result, .. } => {
            let per_node: usize = result.per_node_iterations.iter().sum();
            let attempts: usize = result.attempts.iter().map(|a| a.iterations).sum();
            if per_node != attempts {
                return Err(mismatch("per-node total", per_node, attempts));
            }
            let traj = result
                .final_trajectory()
                .ok_or_else(|| BenchError::Usage("plan record holds no trajectory".into()))?;
            let landed = result.path.last() == Some(&r.target);
            (attempts, traj, result.is_success() && landed)
        }
        Outcome::Baseline { result } => {
            let landed = result.path.last() == Some(&r.target);
            (result.n, &result.trajectory, result.success && landed)
        }
    };
    if n != r.n {
        return Err(mismatch("N", r.n, n));
    }
    let instance = env.instance(&r.target)?;
    if success && !resimulates(&instance, traj) {
        return Err(BenchError::Usage("final trajectory does not re-simulate".into()));
    }
    let loss = task_loss(&instance, traj, &r.target)?;
    let success = success && loss <= eps_t;
    if success != r.success {
        return Err(mismatch("success", r.success, success));
    }
    let d = task_distance(&instance, traj, &r.target);
    if !r.d.is_some_and(|v| close(v, d)) {
        return Err(mismatch("d", r.d, d));
    }
    if !r.loss.is_some_and(|v| close(v, loss)) {
        return Err(mismatch("loss", r.loss, loss));
    }
    Ok(())
}

// the taped and the plain rollout may round differently in the last place
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

/// `d` in the unit it is reported in.
pub fn distance_unit(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::Revolute => "deg",
        EnvKind::Prismatic | EnvKind::PlanarPush => "m",
    }
}
