//! Seed input sequences.

use hybrid_ilqr::solver::{rollout, rollout_with_policy};
use hybrid_ilqr::{CostModel, HybridSystem, IntegratorConfig, ModeId};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedPolicy {
    ZeroInput,
    ConstantForce {
        value: Vec<f64>,
    },
    /// Constant force on one input channel, found by bisection so that the
    /// seed rollout has exactly `count` impacts. The impact count is assumed
    /// non-increasing in the force.
    BounceCount {
        count: usize,
        #[serde(default = "default_force_min")]
        force_min: f64,
        #[serde(default = "default_force_max")]
        force_max: f64,
        #[serde(default)]
        channel: usize,
        #[serde(default = "default_bisections")]
        max_bisections: usize,
    },
    /// `force` while `t_start <= t_k < t_end`, zero otherwise.
    ImpulseWindow {
        force: Vec<f64>,
        t_start: f64,
        t_end: f64,
    },
    /// Total thrust split evenly over the inputs, dropping to
    /// `latched_thrust` once the rollout enters `latched_mode`.
    QuadcopterThrust {
        thrust: f64,
        latched_thrust: f64,
        #[serde(default = "default_latched_mode")]
        latched_mode: String,
    },
}

fn default_force_min() -> f64 {
    -200.0
}

fn default_force_max() -> f64 {
    50.0
}

fn default_bisections() -> usize {
    60
}

fn default_latched_mode() -> String {
    "latched".into()
}

impl SeedPolicy {
    pub fn validate(&self, _n: usize, m: usize) -> Result<(), String> {
        match self {
            SeedPolicy::ZeroInput => Ok(()),
            SeedPolicy::ConstantForce { value } if value.len() != m => {
                Err(format!("constant_force needs {m} values"))
            }
            SeedPolicy::ConstantForce { .. } => Ok(()),
            SeedPolicy::BounceCount {
                force_min,
                force_max,
                channel,
                ..
            } => {
                if *channel >= m {
                    Err(format!("bounce_count channel {channel} out of range"))
                } else if !(force_min < force_max) {
                    Err("bounce_count needs force_min < force_max".into())
                } else {
                    Ok(())
                }
            }
            SeedPolicy::ImpulseWindow {
                force,
                t_start,
                t_end,
            } => {
                if force.len() != m {
                    Err(format!("impulse_window needs {m} force values"))
                } else if !(t_start <= t_end) {
                    Err("impulse_window needs t_start <= t_end".into())
                } else {
                    Ok(())
                }
            }
            SeedPolicy::QuadcopterThrust { .. } => Ok(()),
        }
    }
}

/// Builds the seed input sequence of `cfg` for the already constructed `sys`.
pub fn seed_inputs(
    sys: &HybridSystem<f64>,
    cfg: &ExperimentConfig,
    cost: &CostModel<f64>,
) -> Result<Vec<DVector<f64>>, HarnessError> {
    let p = &cfg.problem;
    let m = sys.input_dim();
    let n_steps = p.n_steps;
    let x0 = DVector::from_column_slice(&p.x0);
    let icfg = &cfg.integrator;
    match &cfg.seed {
        SeedPolicy::ZeroInput => Ok(vec![DVector::zeros(m); n_steps]),
        SeedPolicy::ConstantForce { value } => {
            Ok(vec![DVector::from_column_slice(value); n_steps])
        }
        SeedPolicy::ImpulseWindow {
            force,
            t_start,
            t_end,
        } => Ok((0..n_steps)
            .map(|k| {
                let t = k as f64 * p.dt;
                if t >= *t_start && t < *t_end {
                    DVector::from_column_slice(force)
                } else {
                    DVector::zeros(m)
                }
            })
            .collect()),
        SeedPolicy::BounceCount {
            count,
            force_min,
            force_max,
            channel,
            max_bisections,
        } => {
            let force = bisect_force(
                sys,
                &x0,
                ModeId(p.mode0),
                n_steps,
                p.dt,
                cost,
                icfg,
                *channel,
                *count,
                (*force_min, *force_max),
                *max_bisections,
            )?;
            let mut u = DVector::zeros(m);
            u[*channel] = force;
            Ok(vec![u; n_steps])
        }
        SeedPolicy::QuadcopterThrust {
            thrust,
            latched_thrust,
            latched_mode,
        } => {
            let latched = (0..sys.num_modes())
                .map(ModeId)
                .find(|&id| sys.mode_name(id).map_or(false, |n| n == latched_mode))
                .ok_or_else(|| {
                    HarnessError::Config(format!("system has no mode named {latched_mode}"))
                })?;
            let per_input = |total: f64| DVector::from_element(m, total / m as f64);
            let traj = rollout_with_policy(
                sys,
                &x0,
                ModeId(p.mode0),
                n_steps,
                p.dt,
                cost,
                icfg,
                |_, s| {
                    if s.mode == latched {
                        per_input(*latched_thrust)
                    } else {
                        per_input(*thrust)
                    }
                },
            )
            .map_err(|e| HarnessError::Seed(e.to_string()))?;
            Ok(traj.inputs)
        }
    }
}

/// Impact count of a constant-force rollout. A rollout that fails (a strong
/// push into the ground ends in Zeno chatter) counts as unboundedly many.
#[allow(clippy::too_many_arguments)]
fn impacts_at(
    sys: &HybridSystem<f64>,
    x0: &DVector<f64>,
    mode0: ModeId,
    n_steps: usize,
    dt: f64,
    cost: &CostModel<f64>,
    icfg: &IntegratorConfig<f64>,
    channel: usize,
    force: f64,
) -> usize {
    let mut u = DVector::zeros(sys.input_dim());
    u[channel] = force;
    let inputs = vec![u; n_steps];
    rollout(sys, x0, mode0, &inputs, dt, cost, icfg)
        .map_or(usize::MAX, |t| t.impact_count())
}

#[allow(clippy::too_many_arguments)]
fn bisect_force(
    sys: &HybridSystem<f64>,
    x0: &DVector<f64>,
    mode0: ModeId,
    n_steps: usize,
    dt: f64,
    cost: &CostModel<f64>,
    icfg: &IntegratorConfig<f64>,
    channel: usize,
    target: usize,
    bounds: (f64, f64),
    max_bisections: usize,
) -> Result<f64, HarnessError> {
    let count = |f: f64| impacts_at(sys, x0, mode0, n_steps, dt, cost, icfg, channel, f);
    let infeasible = || {
        HarnessError::Config(format!(
            "no constant force in [{}, {}] gives exactly {target} impacts",
            bounds.0, bounds.1
        ))
    };
    let (mut lo, mut hi) = bounds;
    let (c_lo, c_hi) = (count(lo), count(hi));
    if !(c_lo >= target && target >= c_hi) {
        return Err(infeasible());
    }
    for _ in 0..max_bisections {
        let mid = 0.5 * (lo + hi);
        let c = count(mid);
        if c == target {
            return Ok(mid);
        }
        if c > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(infeasible())
}
