use std::path::{Path, PathBuf};
use std::time::Instant;

use hybrid_ilqr::solver::{rollout, solve_from};
use hybrid_ilqr::{CostModel, ModeId};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Overrides};
use crate::record::RunRecord;
use crate::seeds::seed_inputs;
use crate::HarnessError;

pub fn build_cost(cfg: &ExperimentConfig) -> CostModel<f64> {
    let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(v));
    let mut cost = CostModel::new(
        diag(&cfg.cost.q_terminal),
        DVector::from_column_slice(&cfg.problem.x_des),
        diag(&cfg.cost.r_input),
    );
    if !cfg.cost.q_running.is_empty() {
        cost = cost.with_running_state_cost(diag(&cfg.cost.q_running));
    }
    cost
}

/// Solves `cfg` once per configured variant, all from the same seed.
///
/// Solver failures become [`RunStatus::Failed`](crate::RunStatus) records;
/// only problems that prevent any run (bad config, unbuildable seed) are
/// returned as errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    let sys = cfg
        .system
        .build::<f64>()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let cost = build_cost(cfg);
    let p = &cfg.problem;
    let x0 = DVector::from_column_slice(&p.x0);
    let inputs = seed_inputs(&sys, cfg, &cost)?;
    let seed = rollout(&sys, &x0, ModeId(p.mode0), &inputs, p.dt, &cost, &cfg.integrator)
        .map_err(|e| HarnessError::Seed(e.to_string()))?;

    let records = cfg
        .variants
        .iter()
        .map(|&variant| {
            let mut snap = cfg.clone();
            snap.variants = vec![variant];
            snap.solver.variant = variant;
            let start = Instant::now();
            let out = solve_from(&sys, seed.clone(), &cost, &snap.solver, &cfg.integrator);
            let wall = start.elapsed().as_secs_f64();
            match out {
                Ok(o) => RunRecord::completed(snap, variant, &sys, &seed, &o.trajectory, &o.stats, wall),
                Err(e) => RunRecord::failed(snap, variant, Some(&seed), e.to_string(), wall),
            }
        })
        .collect();
    Ok(records)
}

/// Loads every `*.toml` in `dir` (sorted by file name) with `overrides`
/// applied.
pub fn load_suite(
    dir: &Path,
    overrides: &Overrides,
) -> Result<Vec<(PathBuf, ExperimentConfig)>, HarnessError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!(
            "{} contains no experiment files",
            dir.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| {
            let cfg = ExperimentConfig::load(&p)?.apply(overrides)?;
            Ok((p, cfg))
        })
        .collect()
}

/// Runs all experiments in parallel. Results keep the input order.
pub fn run_suite(configs: &[ExperimentConfig]) -> Vec<Result<Vec<RunRecord>, HarnessError>> {
    configs.par_iter().map(run_experiment).collect()
}
