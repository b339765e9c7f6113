use nalgebra::DVector;

use super::{CostModel, SolverError};
use crate::integrator::{self, IntegratorConfig};
use crate::model::{HybridState, HybridSystem, ModeId, TransitionEvent, TransitionKind};
use crate::Scalar;

/// A transition together with the timestep `k` whose interval
/// `[t_k, t_{k+1}]` contains it.
#[derive(Clone, Debug, PartialEq)]
pub struct StepEvent<T: Scalar> {
    pub step: usize,
    pub event: TransitionEvent<T>,
}

/// Discrete hybrid trajectory over `N` timesteps.
///
/// `modes[k]` is the mode active at `states[k]`; both have `N + 1` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Scalar> {
    pub t0: T,
    pub dt: T,
    pub states: Vec<DVector<T>>,
    pub inputs: Vec<DVector<T>>,
    pub modes: Vec<ModeId>,
    pub events: Vec<StepEvent<T>>,
    pub cost: T,
    /// `event_offsets[k]` = number of events owned by steps `< k`.
    event_offsets: Vec<usize>,
}

impl<T: Scalar> Trajectory<T> {
    /// Assembles a trajectory; `events` must be sorted by step and time.
    pub fn from_parts(
        t0: T,
        dt: T,
        states: Vec<DVector<T>>,
        inputs: Vec<DVector<T>>,
        modes: Vec<ModeId>,
        events: Vec<StepEvent<T>>,
        cost: T,
    ) -> Self {
        let n = inputs.len();
        let mut event_offsets = Vec::with_capacity(n + 1);
        let mut i = 0;
        for k in 0..=n {
            while i < events.len() && events[i].step < k {
                i += 1;
            }
            event_offsets.push(i);
        }
        Self {
            t0,
            dt,
            states,
            inputs,
            modes,
            events,
            cost,
            event_offsets,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + self.dt * T::from_usize(k).expect("step index fits scalar")
    }

    pub fn final_state(&self) -> &DVector<T> {
        self.states.last().expect("trajectory has at least one state")
    }

    /// Events inside `[t_k, t_{k+1}]`, in time order.
    pub fn events_in_step(&self, k: usize) -> &[StepEvent<T>] {
        let lo = self.event_offsets[k];
        let hi = if k + 1 < self.event_offsets.len() {
            self.event_offsets[k + 1]
        } else {
            self.events.len()
        };
        &self.events[lo..hi]
    }

    /// Ordinal of the hybrid segment containing `states[k]`.
    pub fn segment_of(&self, k: usize) -> usize {
        self.event_offsets[k]
    }

    pub fn count_kind(&self, kind: TransitionKind) -> usize {
        self.events.iter().filter(|e| e.event.kind == kind).count()
    }

    pub fn impact_count(&self) -> usize {
        self.count_kind(TransitionKind::Impact)
    }

    /// Modes visited, one entry per hybrid segment.
    pub fn mode_sequence(&self) -> Vec<ModeId> {
        let mut seq = vec![self.modes[0]];
        seq.extend(self.events.iter().map(|e| e.event.to));
        seq
    }

    /// Recomputes the total cost from states, inputs and events.
    pub fn evaluate_cost(&self, cost: &CostModel<T>) -> T {
        let mut total = cost.terminal(self.final_state());
        for (x, u) in self.states.iter().zip(&self.inputs) {
            total += cost.running(x, u);
        }
        for e in &self.events {
            if let Some(tc) = cost.transition_cost(e.event.transition) {
                total += tc.value(&e.event.x_pre);
            }
        }
        total
    }
}

/// Closed-loop rollout: `policy(k, state)` picks the input at each step.
#[allow(clippy::too_many_arguments)]
pub fn rollout_with_policy<T, P>(
    sys: &HybridSystem<T>,
    x0: &DVector<T>,
    mode0: ModeId,
    n_steps: usize,
    dt: T,
    cost: &CostModel<T>,
    cfg: &IntegratorConfig<T>,
    mut policy: P,
) -> Result<Trajectory<T>, SolverError>
where
    T: Scalar,
    P: FnMut(usize, &HybridState<T>) -> DVector<T>,
{
    if x0.len() != sys.state_dim() {
        return Err(SolverError::Dimension(format!(
            "x0 has length {}, system state dimension is {}",
            x0.len(),
            sys.state_dim()
        )));
    }
    let t0 = T::zero();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut inputs = Vec::with_capacity(n_steps);
    let mut modes = Vec::with_capacity(n_steps + 1);
    let mut events = Vec::new();
    let mut state = HybridState::new(mode0, x0.clone(), t0);
    states.push(state.x.clone());
    modes.push(state.mode);
    for k in 0..n_steps {
        let u = policy(k, &state);
        if u.len() != sys.input_dim() {
            return Err(SolverError::Dimension(format!(
                "input {k} has length {}, expected {}",
                u.len(),
                sys.input_dim()
            )));
        }
        let r = integrator::step(sys, &state, &u, dt, cfg)?;
        events.extend(r.events.iter().cloned().map(|event| StepEvent { step: k, event }));
        let t_next = t0 + dt * T::from_usize(k + 1).expect("step index fits scalar");
        state = HybridState::new(r.mode_next, r.x_next, t_next);
        states.push(state.x.clone());
        modes.push(state.mode);
        inputs.push(u);
    }
    let mut traj = Trajectory::from_parts(t0, dt, states, inputs, modes, events, T::zero());
    traj.cost = traj.evaluate_cost(cost);
    Ok(traj)
}

/// Open-loop rollout of an input sequence.
pub fn rollout<T: Scalar>(
    sys: &HybridSystem<T>,
    x0: &DVector<T>,
    mode0: ModeId,
    inputs: &[DVector<T>],
    dt: T,
    cost: &CostModel<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>, SolverError> {
    rollout_with_policy(sys, x0, mode0, inputs.len(), dt, cost, cfg, |k, _| {
        inputs[k].clone()
    })
}
