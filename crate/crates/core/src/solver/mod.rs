//! Hybrid iLQR.
//!
//! Each iteration linearizes the current trajectory (through every event with
//! the saltation matrix, or with the plain reset Jacobian for comparison),
//! runs a regularized backward pass and line-searches a closed-loop forward
//! pass that may take a different mode sequence from the reference.

mod backward;
mod cost;
mod extension;
mod forward;
mod linearize;
mod trajectory;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backward::{backward_pass, expected_reduction, GainSchedule};
pub use cost::{CostModel, TransitionCost};
pub use extension::{EntrySource, ReferenceEntry, ReferenceExtension};
pub use forward::{forward_pass, ExtensionUsage};
pub use linearize::{
    flow_jacobians, jump_matrix, linearize_step, linearize_trajectory, EventSensitivity,
    StepJacobian,
};
pub use trajectory::{rollout, rollout_with_policy, StepEvent, Trajectory};

use crate::integrator::{IntegratorConfig, IntegratorError};
use crate::model::{HybridSystem, ModeId, ModelError};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Q_uu not positive definite at step {step} (regularization {regularization:e})")]
    NonPositiveDefinite { step: usize, regularization: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// How the value function is propagated across transitions.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientVariant {
    Saltation,
    ResetJacobian,
}

impl GradientVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            GradientVariant::Saltation => "saltation",
            GradientVariant::ResetJacobian => "reset_jacobian",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig<T: Scalar> {
    pub variant: GradientVariant,
    /// Budget of accepted iterations.
    pub max_iterations: usize,
    /// Converged once `|δJ(1)|` falls to this value.
    pub convergence_tol: T,
    pub reg_init: T,
    pub reg_min: T,
    pub reg_max: T,
    pub reg_increase: T,
    pub reg_decrease: T,
    /// Line-search step sizes, tried in order.
    pub alpha_schedule: Vec<T>,
    /// Minimum ratio of actual to predicted decrease for acceptance.
    pub accept_ratio: T,
    /// Track mode-extended references when the mode sequence changes.
    pub use_extensions: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            variant: GradientVariant::Saltation,
            max_iterations: 100,
            convergence_tol: T::lit(1e-3),
            reg_init: T::lit(1e-6),
            reg_min: T::lit(1e-9),
            reg_max: T::lit(1e10),
            reg_increase: T::lit(10.0),
            reg_decrease: T::lit(2.0),
            alpha_schedule: (0..=10).map(|i| T::lit(0.5f64.powi(i))).collect(),
            accept_ratio: T::zero(),
            use_extensions: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.convergence_tol >= T::zero()) {
            return Err("convergence_tol must be non-negative".into());
        }
        if !(self.reg_min >= T::zero()) || !(self.reg_max > self.reg_min) {
            return Err("need 0 <= reg_min < reg_max".into());
        }
        if !(self.reg_init >= T::zero()) {
            return Err("reg_init must be non-negative".into());
        }
        if !(self.reg_increase > T::one()) || !(self.reg_decrease > T::one()) {
            return Err("regularization factors must exceed 1".into());
        }
        if self.alpha_schedule.is_empty()
            || self
                .alpha_schedule
                .iter()
                .any(|&a| !(a > T::zero()) || a > T::one())
        {
            return Err("alpha_schedule must be a non-empty list in (0, 1]".into());
        }
        if !self.accept_ratio.is_finite() {
            return Err("accept_ratio must be finite".into());
        }
        Ok(())
    }

    fn increase(&self, reg: T) -> T {
        let base = if reg > T::zero() { reg } else { T::lit(1e-6) };
        (base * self.reg_increase).max(self.reg_min)
    }

    fn decrease(&self, reg: T) -> T {
        (reg / self.reg_decrease).max(self.reg_min)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationLimit,
    RegularizationLimit,
}

/// Per-solve diagnostics, always in `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub backward_passes: usize,
    pub rejected_steps: usize,
    pub converged: bool,
    pub termination: Termination,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Cost after each accepted iteration; entry 0 is the seed.
    pub cost_trace: Vec<f64>,
    /// `|δJ(1)|` of every successful backward pass.
    pub expected_reduction_trace: Vec<f64>,
    pub final_expected_reduction: f64,
    pub final_regularization: f64,
    pub grazing_fallbacks: usize,
    pub extension_usage: ExtensionCounts,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionCounts {
    pub forward: usize,
    pub backward: usize,
    pub terminal_hold: usize,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T: Scalar> {
    pub trajectory: Trajectory<T>,
    /// Gains from the last successful backward pass.
    pub gains: GainSchedule<T>,
    pub stats: SolveStats,
}

/// Rolls out `seed` from `(x0, mode0)` and optimizes it.
#[allow(clippy::too_many_arguments)]
pub fn solve<T: Scalar>(
    sys: &HybridSystem<T>,
    x0: &DVector<T>,
    mode0: ModeId,
    seed: &[DVector<T>],
    dt: T,
    cost: &CostModel<T>,
    config: &SolverConfig<T>,
    icfg: &IntegratorConfig<T>,
) -> Result<SolveOutcome<T>, SolverError> {
    if seed.is_empty() {
        return Err(SolverError::Config("seed input sequence is empty".into()));
    }
    if !(dt > T::zero()) {
        return Err(SolverError::Config("timestep must be positive".into()));
    }
    let initial = rollout(sys, x0, mode0, seed, dt, cost, icfg)?;
    solve_from(sys, initial, cost, config, icfg)
}

/// Optimizes starting from an already simulated trajectory.
pub fn solve_from<T: Scalar>(
    sys: &HybridSystem<T>,
    initial: Trajectory<T>,
    cost: &CostModel<T>,
    config: &SolverConfig<T>,
    icfg: &IntegratorConfig<T>,
) -> Result<SolveOutcome<T>, SolverError> {
    config.validate().map_err(SolverError::Config)?;
    icfg.validate().map_err(SolverError::Config)?;
    cost.validate().map_err(SolverError::Config)?;
    if cost.x_des.len() != sys.state_dim() || cost.r_input.nrows() != sys.input_dim() {
        return Err(SolverError::Dimension(
            "cost weights do not match the system dimensions".into(),
        ));
    }
    if initial.n_steps() == 0 {
        return Err(SolverError::Config("trajectory has no steps".into()));
    }

    let (n, m) = (sys.state_dim(), sys.input_dim());
    let mut traj = initial;
    let mut reg = config.reg_init.max(config.reg_min);
    let mut jacobians: Option<Vec<StepJacobian<T>>> = None;
    let mut last_gains = GainSchedule::zeros(traj.n_steps(), n, m);
    let mut stats = SolveStats {
        iterations: 0,
        backward_passes: 0,
        rejected_steps: 0,
        converged: false,
        termination: Termination::IterationLimit,
        initial_cost: traj.cost.to_f64_lossy(),
        final_cost: traj.cost.to_f64_lossy(),
        cost_trace: vec![traj.cost.to_f64_lossy()],
        expected_reduction_trace: Vec::new(),
        final_expected_reduction: f64::NAN,
        final_regularization: reg.to_f64_lossy(),
        grazing_fallbacks: 0,
        extension_usage: ExtensionCounts::default(),
    };

    loop {
        if jacobians.is_none() {
            let jac = linearize_trajectory(sys, &traj, config.variant, icfg)?;
            stats.grazing_fallbacks += jac.iter().map(|j| j.grazing_fallbacks).sum::<usize>();
            jacobians = Some(jac);
        }
        let jac = jacobians.as_ref().expect("linearized above");

        let gains = match backward_pass(&traj, cost, jac, reg) {
            Ok(g) => g,
            Err(SolverError::NonPositiveDefinite { .. }) => {
                reg = config.increase(reg);
                if reg > config.reg_max {
                    stats.termination = Termination::RegularizationLimit;
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        stats.backward_passes += 1;
        let dj = expected_reduction(&gains, T::one());
        stats.expected_reduction_trace.push(dj.abs().to_f64_lossy());
        stats.final_expected_reduction = dj.abs().to_f64_lossy();
        last_gains = gains;
        if dj.abs() <= config.convergence_tol {
            stats.converged = true;
            stats.termination = Termination::Converged;
            break;
        }
        if stats.iterations >= config.max_iterations {
            stats.termination = Termination::IterationLimit;
            break;
        }

        let mut accepted = None;
        {
            let mut reference =
                ReferenceExtension::new(sys, &traj, &last_gains, icfg, config.use_extensions);
            for &alpha in &config.alpha_schedule {
                let (candidate, usage) =
                    match forward_pass(sys, &mut reference, &traj, alpha, cost, icfg) {
                        Ok(r) => r,
                        Err(_) => continue,
                    };
                if !candidate.cost.is_finite() {
                    continue;
                }
                let actual = traj.cost - candidate.cost;
                let predicted = -expected_reduction(&last_gains, alpha);
                let ratio_ok =
                    predicted <= T::zero() || actual / predicted >= config.accept_ratio;
                if actual > T::zero() && ratio_ok {
                    accepted = Some((candidate, usage));
                    break;
                }
            }
        }

        match accepted {
            Some((candidate, usage)) => {
                traj = candidate;
                jacobians = None;
                stats.iterations += 1;
                stats.cost_trace.push(traj.cost.to_f64_lossy());
                stats.extension_usage.forward += usage.forward;
                stats.extension_usage.backward += usage.backward;
                stats.extension_usage.terminal_hold += usage.terminal_hold;
                reg = config.decrease(reg);
            }
            None => {
                stats.rejected_steps += 1;
                reg = config.increase(reg);
                if reg > config.reg_max {
                    stats.termination = Termination::RegularizationLimit;
                    break;
                }
            }
        }
    }

    stats.final_cost = traj.cost.to_f64_lossy();
    stats.final_regularization = reg.to_f64_lossy();
    Ok(SolveOutcome {
        trajectory: traj,
        gains: last_gains,
        stats,
    })
}
