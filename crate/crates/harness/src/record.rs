//! Run records: the full config snapshot plus everything a table, plot or
//! rerun needs. Serialized as JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use hybrid_ilqr::solver::{SolveStats, Termination};
use hybrid_ilqr::{GradientVariant, HybridSystem, Trajectory, TransitionKind};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::io::write_atomic;
use crate::HarnessError;

pub const RECORD_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub step: usize,
    pub t_event: f64,
    pub transition: String,
    pub kind: TransitionKind,
    pub from: usize,
    pub to: usize,
    pub x_pre: Vec<f64>,
    pub x_post: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryData {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub modes: Vec<usize>,
}

impl TrajectoryData {
    pub fn from_trajectory(traj: &Trajectory<f64>) -> Self {
        Self {
            t0: traj.t0,
            dt: traj.dt,
            states: traj.states.iter().map(|x| x.as_slice().to_vec()).collect(),
            inputs: traj.inputs.iter().map(|u| u.as_slice().to_vec()).collect(),
            modes: traj.modes.iter().map(|m| m.0).collect(),
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }
}

/// Everything reported for one (experiment, variant) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    /// Snapshot that reproduces exactly this run (a single variant).
    pub config: ExperimentConfig,
    pub variant: GradientVariant,
    pub use_extensions: bool,
    pub status: RunStatus,
    pub error: Option<String>,
    pub seed_impacts: Option<usize>,
    pub seed_cost: Option<f64>,
    pub final_cost: Option<f64>,
    pub converged: bool,
    pub termination: Option<Termination>,
    /// `|δJ(1)|` of the last backward pass.
    pub final_expected_reduction: Option<f64>,
    pub iterations: usize,
    pub backward_passes: usize,
    pub rejected_steps: usize,
    pub final_regularization: Option<f64>,
    pub grazing_fallbacks: usize,
    pub cost_trace: Vec<f64>,
    pub expected_reduction_trace: Vec<f64>,
    pub mode_sequence: Vec<usize>,
    pub events: Vec<EventRecord>,
    pub transition_counts: BTreeMap<String, usize>,
    pub impact_count: usize,
    pub wall_time_s: f64,
    pub trajectory: Option<TrajectoryData>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl RunRecord {
    /// Method label as printed in tables.
    pub fn method(&self) -> &'static str {
        match (self.variant, self.use_extensions) {
            (GradientVariant::Saltation, true) => "Ξ",
            (GradientVariant::ResetJacobian, true) => "D_xR",
            (GradientVariant::Saltation, false) => "No Ext.",
            (GradientVariant::ResetJacobian, false) => "D_xR No Ext.",
        }
    }

    pub(crate) fn failed(
        config: ExperimentConfig,
        variant: GradientVariant,
        seed: Option<&Trajectory<f64>>,
        error: String,
        wall_time_s: f64,
    ) -> Self {
        let use_extensions = config.solver.use_extensions;
        Self {
            format_version: RECORD_FORMAT_VERSION,
            config,
            variant,
            use_extensions,
            status: RunStatus::Failed,
            error: Some(error),
            seed_impacts: seed.map(|s| s.impact_count()),
            seed_cost: seed.and_then(|s| finite(s.cost)),
            final_cost: None,
            converged: false,
            termination: None,
            final_expected_reduction: None,
            iterations: 0,
            backward_passes: 0,
            rejected_steps: 0,
            final_regularization: None,
            grazing_fallbacks: 0,
            cost_trace: vec![],
            expected_reduction_trace: vec![],
            mode_sequence: vec![],
            events: vec![],
            transition_counts: BTreeMap::new(),
            impact_count: 0,
            wall_time_s,
            trajectory: None,
        }
    }

    pub(crate) fn completed(
        config: ExperimentConfig,
        variant: GradientVariant,
        sys: &HybridSystem<f64>,
        seed: &Trajectory<f64>,
        traj: &Trajectory<f64>,
        stats: &SolveStats,
        wall_time_s: f64,
    ) -> Self {
        let events: Vec<EventRecord> = traj
            .events
            .iter()
            .map(|e| EventRecord {
                step: e.step,
                t_event: e.event.t_event,
                transition: sys
                    .transition(e.event.transition)
                    .map(|t| t.name.clone())
                    .unwrap_or_default(),
                kind: e.event.kind,
                from: e.event.from.0,
                to: e.event.to.0,
                x_pre: e.event.x_pre.as_slice().to_vec(),
                x_post: e.event.x_post.as_slice().to_vec(),
            })
            .collect();
        let mut transition_counts = BTreeMap::new();
        for e in &events {
            *transition_counts.entry(e.transition.clone()).or_insert(0) += 1;
        }
        let use_extensions = config.solver.use_extensions;
        Self {
            format_version: RECORD_FORMAT_VERSION,
            config,
            variant,
            use_extensions,
            status: RunStatus::Completed,
            error: None,
            seed_impacts: Some(seed.impact_count()),
            seed_cost: finite(seed.cost),
            final_cost: finite(stats.final_cost),
            converged: stats.converged,
            termination: Some(stats.termination),
            final_expected_reduction: finite(stats.final_expected_reduction),
            iterations: stats.iterations,
            backward_passes: stats.backward_passes,
            rejected_steps: stats.rejected_steps,
            final_regularization: finite(stats.final_regularization),
            grazing_fallbacks: stats.grazing_fallbacks,
            cost_trace: stats.cost_trace.clone(),
            expected_reduction_trace: stats.expected_reduction_trace.clone(),
            mode_sequence: traj.mode_sequence().iter().map(|m| m.0).collect(),
            impact_count: traj.count_kind(TransitionKind::Impact),
            events,
            transition_counts,
            wall_time_s,
            trajectory: Some(TrajectoryData::from_trajectory(traj)),
        }
    }

    /// File stem used for this record's outputs.
    pub fn file_stem(&self) -> String {
        let mut stem = format!("{}.{}", self.config.name, self.variant.as_str());
        if !self.use_extensions {
            stem.push_str(".no_ext");
        }
        stem
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        serde_json::to_string_pretty(self).map_err(|e| HarnessError::Io(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let rec: Self = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        if rec.format_version != RECORD_FORMAT_VERSION {
            return Err(HarnessError::Io(format!(
                "{}: unsupported record format {}",
                path.display(),
                rec.format_version
            )));
        }
        Ok(rec)
    }
}
