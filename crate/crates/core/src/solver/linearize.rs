use nalgebra::{DMatrix, DVector};

use super::{GradientVariant, SolverError, Trajectory};
use crate::integrator::{self, IntegratorConfig};
use crate::model::{HybridSystem, ModeId, ModelError, TransitionId};
use crate::scalar::fd_step_for;
use crate::Scalar;

/// Sensitivity of one event's pre-transition state to the step's initial
/// state and input, used to pull transition costs back into the step.
#[derive(Clone, Debug)]
pub struct EventSensitivity<T: Scalar> {
    pub transition: TransitionId,
    pub x_pre: DVector<T>,
    pub dx: DMatrix<T>,
    pub du: DMatrix<T>,
}

/// Linearization of the discrete step map `x_{k+1} = F(x_k, u_k)`.
#[derive(Clone, Debug)]
pub struct StepJacobian<T: Scalar> {
    pub fx: DMatrix<T>,
    pub fu: DMatrix<T>,
    pub events: Vec<EventSensitivity<T>>,
    /// Events whose saltation matrix was undefined (grazing contact) and
    /// were linearized with the reset Jacobian instead.
    pub grazing_fallbacks: usize,
}

/// Central-difference Jacobians `(∂x(t0+d)/∂x0, ∂x(t0+d)/∂u)` of a single
/// mode's flow over the fixed duration `d`. See [`input_step`] for the input
/// columns.
pub fn flow_jacobians<T: Scalar>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    t0: T,
    x0: &DVector<T>,
    u: &DVector<T>,
    duration: T,
    cfg: &IntegratorConfig<T>,
) -> Result<(DMatrix<T>, DMatrix<T>), SolverError> {
    let (n, m) = (x0.len(), u.len());
    if duration.abs() <= cfg.time_tol {
        return Ok((DMatrix::identity(n, n), DMatrix::zeros(n, m)));
    }
    let two = T::lit(2.0);
    let mut a = DMatrix::zeros(n, n);
    let mut xp = x0.clone();
    for i in 0..n {
        let h = fd_step_for(x0[i]);
        xp[i] = x0[i] + h;
        let fp = integrator::flow(sys, mode, t0, &xp, u, duration, cfg)?;
        xp[i] = x0[i] - h;
        let fm = integrator::flow(sys, mode, t0, &xp, u, duration, cfg)?;
        xp[i] = x0[i];
        a.set_column(i, &((fp - fm) / (two * h)));
    }
    let mut b = DMatrix::zeros(n, m);
    let mut up = u.clone();
    for j in 0..m {
        let h = input_step(u[j], duration);
        up[j] = u[j] + h;
        let fp = integrator::flow(sys, mode, t0, x0, &up, duration, cfg)?;
        up[j] = u[j] - h;
        let fm = integrator::flow(sys, mode, t0, x0, &up, duration, cfg)?;
        up[j] = u[j];
        b.set_column(j, &((fp - fm) / (two * h)));
    }
    Ok((a, b))
}

/// An input moves the state by about `h·d` over a flow of length `d`, so for
/// short flows the input step is widened (up to 1e-3 relative) to keep that
/// change well above the roundoff in `x`. Without this the input columns of
/// an event step, which can be as small as `d²`, lose most of their digits.
fn input_step<T: Scalar>(u: T, duration: T) -> T {
    let h = T::fd_step();
    let rel = (h / duration.abs()).max(h).min(h.max(T::lit(1e-3)));
    rel.max(rel * u.abs())
}

/// Jump matrix applied at an event for the chosen gradient variant.
pub fn jump_matrix<T: Scalar>(
    sys: &HybridSystem<T>,
    variant: GradientVariant,
    tr: TransitionId,
    t: T,
    x_pre: &DVector<T>,
    u: &DVector<T>,
) -> Result<(DMatrix<T>, bool), ModelError> {
    match variant {
        GradientVariant::ResetJacobian => Ok((sys.reset_jacobian(tr, t, x_pre, u)?, false)),
        GradientVariant::Saltation => match sys.saltation(tr, t, x_pre, u, u) {
            Ok(xi) => Ok((xi, false)),
            Err(ModelError::TangentialCrossing { .. }) => {
                Ok((sys.reset_jacobian(tr, t, x_pre, u)?, true))
            }
            Err(e) => Err(e),
        },
    }
}

/// Linearizes step `k` of `traj`.
///
/// The step is split at its events into smooth sub-flows of fixed duration;
/// each sub-flow is differentiated numerically and the pieces are chained
/// through the jump matrix of every event in order.
pub fn linearize_step<T: Scalar>(
    sys: &HybridSystem<T>,
    traj: &Trajectory<T>,
    k: usize,
    variant: GradientVariant,
    cfg: &IntegratorConfig<T>,
) -> Result<StepJacobian<T>, SolverError> {
    let n = sys.state_dim();
    let u = &traj.inputs[k];
    // Same end time as the rollout's step, not `time(k + 1)`, which can
    // differ in the last bit.
    let t_end = traj.time(k) + traj.dt;
    let mut phi_x = DMatrix::identity(n, n);
    let mut phi_u = DMatrix::zeros(n, u.len());
    let mut mode = traj.modes[k];
    let mut t = traj.time(k);
    let mut x = traj.states[k].clone();
    let mut events = Vec::new();
    let mut grazing_fallbacks = 0;

    for se in traj.events_in_step(k) {
        let ev = &se.event;
        let (a, b) = flow_jacobians(sys, mode, t, &x, u, ev.t_event - t, cfg)?;
        phi_x = &a * phi_x;
        phi_u = &a * phi_u + b;
        events.push(EventSensitivity {
            transition: ev.transition,
            x_pre: ev.x_pre.clone(),
            dx: phi_x.clone(),
            du: phi_u.clone(),
        });
        let (jump, fallback) = jump_matrix(sys, variant, ev.transition, ev.t_event, &ev.x_pre, u)?;
        if fallback {
            grazing_fallbacks += 1;
        }
        phi_x = &jump * phi_x;
        phi_u = &jump * phi_u;
        mode = ev.to;
        t = ev.t_event;
        x = ev.x_post.clone();
    }
    let rest = if events.is_empty() { traj.dt } else { t_end - t };
    let (a, b) = flow_jacobians(sys, mode, t, &x, u, rest, cfg)?;
    Ok(StepJacobian {
        fx: &a * phi_x,
        fu: &a * phi_u + b,
        events,
        grazing_fallbacks,
    })
}

/// Linearizes every step of `traj`.
pub fn linearize_trajectory<T: Scalar>(
    sys: &HybridSystem<T>,
    traj: &Trajectory<T>,
    variant: GradientVariant,
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<StepJacobian<T>>, SolverError> {
    (0..traj.n_steps())
        .map(|k| linearize_step(sys, traj, k, variant, cfg))
        .collect()
}
