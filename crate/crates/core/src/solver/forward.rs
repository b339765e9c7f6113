use nalgebra::DVector;

use super::{CostModel, EntrySource, ReferenceExtension, SolverError, StepEvent, Trajectory};
use crate::integrator::{self, IntegratorConfig};
use crate::model::{HybridState, HybridSystem};
use crate::Scalar;

/// Counts of where the tracked reference came from during a forward pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtensionUsage {
    pub nominal: usize,
    pub forward: usize,
    pub backward: usize,
    pub terminal_hold: usize,
}

/// Simulates the closed-loop policy
/// `u_k = u_ref + K (x − x_ref) + α u_ff` from the reference's initial state.
pub fn forward_pass<T: Scalar>(
    sys: &HybridSystem<T>,
    reference: &mut ReferenceExtension<'_, T>,
    base: &Trajectory<T>,
    alpha: T,
    cost: &CostModel<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(Trajectory<T>, ExtensionUsage), SolverError> {
    let n_steps = base.n_steps();
    let mut usage = ExtensionUsage::default();
    let mut state = HybridState::new(base.modes[0], base.states[0].clone(), base.t0);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut inputs: Vec<DVector<T>> = Vec::with_capacity(n_steps);
    let mut modes = Vec::with_capacity(n_steps + 1);
    let mut events = Vec::new();
    states.push(state.x.clone());
    modes.push(state.mode);

    for k in 0..n_steps {
        let (r, source) = reference.lookup(k, events.len(), state.mode);
        match source {
            EntrySource::Nominal => usage.nominal += 1,
            EntrySource::ExtendedForward => usage.forward += 1,
            EntrySource::ExtendedBackward => usage.backward += 1,
            EntrySource::TerminalHold => usage.terminal_hold += 1,
        }
        let u = &r.u + &r.feedback * (&state.x - &r.x) + &r.feedforward * alpha;
        let step = integrator::step(sys, &state, &u, base.dt, cfg)?;
        events.extend(step.events.into_iter().map(|event| StepEvent { step: k, event }));
        state = HybridState::new(step.mode_next, step.x_next, base.time(k + 1));
        states.push(state.x.clone());
        modes.push(state.mode);
        inputs.push(u);
    }

    let mut traj = Trajectory::from_parts(base.t0, base.dt, states, inputs, modes, events, T::zero());
    traj.cost = traj.evaluate_cost(cost);
    Ok((traj, usage))
}
