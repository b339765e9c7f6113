//! Hybrid dynamical systems: modes, transitions, guards, resets and the
//! saltation matrix that linearizes the flow across a transition.

mod maps;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use maps::{FnGuard, FnReset, Guard, IdentityReset, LinearReset, Reset, VectorField};

use crate::scalar::{all_finite, fd_step_for};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown mode {0}")]
    UnknownMode(ModeId),
    #[error("unknown transition {0}")]
    UnknownTransition(TransitionId),
    #[error("invalid system definition: {0}")]
    Config(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(String),
    #[error("tangential crossing on transition {transition}: |D_t g + D_x g F| = {rate:e}")]
    TangentialCrossing { transition: TransitionId, rate: f64 },
}

/// Index of a discrete mode.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(pub usize);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index into [`HybridSystem::transitions`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransitionId(pub usize);

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// What a transition means physically. Only used for bookkeeping
/// (bounce and contact counts); the dynamics never look at it.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    Impact,
    Liftoff,
    Apex,
    Other,
}

impl TransitionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::Impact => "impact",
            TransitionKind::Liftoff => "liftoff",
            TransitionKind::Apex => "apex",
            TransitionKind::Other => "other",
        }
    }
}

pub struct Mode<T: Scalar> {
    pub name: String,
    pub field: Arc<dyn VectorField<T>>,
}

impl<T: Scalar> Clone for Mode<T> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            field: Arc::clone(&self.field),
        }
    }
}

/// Directed edge `(from, to)` of the transition graph with its guard and reset.
///
/// The guard fires on a decreasing crossing: `g` passing from positive to `<= 0`.
pub struct Transition<T: Scalar> {
    pub from: ModeId,
    pub to: ModeId,
    pub name: String,
    pub kind: TransitionKind,
    pub guard: Arc<dyn Guard<T>>,
    pub reset: Arc<dyn Reset<T>>,
}

impl<T: Scalar> Clone for Transition<T> {
    fn clone(&self) -> Self {
        Self {
            from: self.from,
            to: self.to,
            name: self.name.clone(),
            kind: self.kind,
            guard: Arc::clone(&self.guard),
            reset: Arc::clone(&self.reset),
        }
    }
}

impl<T: Scalar> fmt::Debug for Transition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transition")
            .field("from", &self.from)
            .field("to", &self.to)
            .field("name", &self.name)
            .field("kind", &self.kind)
            .finish()
    }
}

/// Continuous state plus active mode at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState<T: Scalar> {
    pub mode: ModeId,
    pub x: DVector<T>,
    pub t: T,
}

impl<T: Scalar> HybridState<T> {
    pub fn new(mode: ModeId, x: DVector<T>, t: T) -> Self {
        Self { mode, x, t }
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.x) && self.t.is_finite()
    }
}

/// A located and applied transition.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionEvent<T: Scalar> {
    pub transition: TransitionId,
    pub from: ModeId,
    pub to: ModeId,
    pub kind: TransitionKind,
    pub t_event: T,
    pub x_pre: DVector<T>,
    pub x_post: DVector<T>,
    /// Input held across the event.
    pub u: DVector<T>,
}

/// A hybrid dynamical system on a single chart: every mode shares the state
/// dimension `n` and input dimension `m`.
pub struct HybridSystem<T: Scalar> {
    name: String,
    state_dim: usize,
    input_dim: usize,
    modes: Vec<Mode<T>>,
    transitions: Vec<Transition<T>>,
    /// Lower bound on `|D_t g + D_x g F_I|` accepted by [`HybridSystem::saltation`].
    pub transversality_tol: T,
}

impl<T: Scalar> Clone for HybridSystem<T> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            state_dim: self.state_dim,
            input_dim: self.input_dim,
            modes: self.modes.clone(),
            transitions: self.transitions.clone(),
            transversality_tol: self.transversality_tol,
        }
    }
}

impl<T: Scalar> fmt::Debug for HybridSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field(
                "modes",
                &self.modes.iter().map(|m| m.name.as_str()).collect::<Vec<_>>(),
            )
            .field("transitions", &self.transitions)
            .finish()
    }
}

pub struct HybridSystemBuilder<T: Scalar> {
    name: String,
    state_dim: usize,
    input_dim: usize,
    modes: Vec<Mode<T>>,
    transitions: Vec<Transition<T>>,
}

impl<T: Scalar> HybridSystemBuilder<T> {
    /// Adds a mode and returns its id.
    pub fn mode(&mut self, name: &str, field: impl VectorField<T> + 'static) -> ModeId {
        self.modes.push(Mode {
            name: name.to_string(),
            field: Arc::new(field),
        });
        ModeId(self.modes.len() - 1)
    }

    pub fn transition(
        &mut self,
        name: &str,
        kind: TransitionKind,
        from: ModeId,
        to: ModeId,
        guard: impl Guard<T> + 'static,
        reset: impl Reset<T> + 'static,
    ) -> TransitionId {
        self.transitions.push(Transition {
            from,
            to,
            name: name.to_string(),
            kind,
            guard: Arc::new(guard),
            reset: Arc::new(reset),
        });
        TransitionId(self.transitions.len() - 1)
    }

    pub fn build(self) -> Result<HybridSystem<T>, ModelError> {
        if self.modes.is_empty() {
            return Err(ModelError::Config("system has no modes".into()));
        }
        if self.state_dim == 0 {
            return Err(ModelError::Config("state dimension must be positive".into()));
        }
        for tr in &self.transitions {
            for id in [tr.from, tr.to] {
                if id.0 >= self.modes.len() {
                    return Err(ModelError::UnknownMode(id));
                }
            }
        }
        Ok(HybridSystem {
            name: self.name,
            state_dim: self.state_dim,
            input_dim: self.input_dim,
            modes: self.modes,
            transitions: self.transitions,
            transversality_tol: T::lit(1e-8),
        })
    }
}

impl<T: Scalar> HybridSystem<T> {
    pub fn builder(name: &str, state_dim: usize, input_dim: usize) -> HybridSystemBuilder<T> {
        HybridSystemBuilder {
            name: name.to_string(),
            state_dim,
            input_dim,
            modes: Vec::new(),
            transitions: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_name(&self, mode: ModeId) -> Result<&str, ModelError> {
        self.modes
            .get(mode.0)
            .map(|m| m.name.as_str())
            .ok_or(ModelError::UnknownMode(mode))
    }

    pub fn transitions(&self) -> &[Transition<T>] {
        &self.transitions
    }

    pub fn transition(&self, id: TransitionId) -> Result<&Transition<T>, ModelError> {
        self.transitions
            .get(id.0)
            .ok_or(ModelError::UnknownTransition(id))
    }

    /// Transitions leaving `mode`, in declaration order.
    pub fn outgoing(&self, mode: ModeId) -> impl Iterator<Item = (TransitionId, &Transition<T>)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, tr)| tr.from == mode)
            .map(|(i, tr)| (TransitionId(i), tr))
    }

    /// Looks a transition up by its name.
    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        self.transitions
            .iter()
            .position(|tr| tr.name == name)
            .map(TransitionId)
    }

    /// Copy of the system with every transition removed: each mode flows
    /// forever under its own field.
    pub fn without_transitions(&self) -> Self {
        let mut sys = self.clone();
        sys.transitions.clear();
        sys
    }

    pub fn eval_field(
        &self,
        mode: ModeId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<DVector<T>, ModelError> {
        let m = self.modes.get(mode.0).ok_or(ModelError::UnknownMode(mode))?;
        Ok(m.field.eval(t, x, u))
    }

    pub fn guard_value(
        &self,
        tr: TransitionId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<T, ModelError> {
        Ok(self.transition(tr)?.guard.value(t, x, u))
    }

    pub fn apply_reset(
        &self,
        tr: TransitionId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<DVector<T>, ModelError> {
        let transition = self.transition(tr)?;
        let x_post = transition.reset.apply(t, x, u);
        if !all_finite(&x_post) {
            return Err(ModelError::NonFinite(format!("reset '{}'", transition.name)));
        }
        Ok(x_post)
    }

    /// `D_x g`, analytic if the guard provides it, central differences otherwise.
    pub fn guard_gradient(
        &self,
        tr: TransitionId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<DVector<T>, ModelError> {
        let guard = &self.transition(tr)?.guard;
        if let Some(g) = guard.state_gradient(t, x, u) {
            return Ok(g);
        }
        let two = T::lit(2.0);
        let mut grad = DVector::zeros(x.len());
        let mut xp = x.clone();
        for i in 0..x.len() {
            let h = fd_step_for(x[i]);
            xp[i] = x[i] + h;
            let gp = guard.value(t, &xp, u);
            xp[i] = x[i] - h;
            let gm = guard.value(t, &xp, u);
            xp[i] = x[i];
            grad[i] = (gp - gm) / (two * h);
        }
        Ok(grad)
    }

    /// `D_t g`.
    pub fn guard_time_derivative(
        &self,
        tr: TransitionId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<T, ModelError> {
        let guard = &self.transition(tr)?.guard;
        if let Some(d) = guard.time_derivative(t, x, u) {
            return Ok(d);
        }
        let h = fd_step_for(t);
        Ok((guard.value(t + h, x, u) - guard.value(t - h, x, u)) / (T::lit(2.0) * h))
    }

    /// `D_x R`, the reset Jacobian. The solver's comparison variant uses it
    /// in place of the saltation matrix.
    pub fn reset_jacobian(
        &self,
        tr: TransitionId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<DMatrix<T>, ModelError> {
        let reset = &self.transition(tr)?.reset;
        if let Some(j) = reset.state_jacobian(t, x, u) {
            return Ok(j);
        }
        let n = x.len();
        let two = T::lit(2.0);
        let mut jac = DMatrix::zeros(n, n);
        let mut xp = x.clone();
        for i in 0..n {
            let h = fd_step_for(x[i]);
            xp[i] = x[i] + h;
            let rp = reset.apply(t, &xp, u);
            xp[i] = x[i] - h;
            let rm = reset.apply(t, &xp, u);
            xp[i] = x[i];
            jac.set_column(i, &((rp - rm) / (two * h)));
        }
        Ok(jac)
    }

    /// `D_t R`.
    pub fn reset_time_derivative(
        &self,
        tr: TransitionId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<DVector<T>, ModelError> {
        let reset = &self.transition(tr)?.reset;
        if let Some(d) = reset.time_derivative(t, x, u) {
            return Ok(d);
        }
        let h = fd_step_for(t);
        Ok((reset.apply(t + h, x, u) - reset.apply(t - h, x, u)) / (T::lit(2.0) * h))
    }

    /// Rate of change of the guard along the pre-transition flow,
    /// `D_t g + D_x g · F_I`.
    pub fn crossing_rate(
        &self,
        tr: TransitionId,
        t: T,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> Result<T, ModelError> {
        let from = self.transition(tr)?.from;
        let f_pre = self.eval_field(from, t, x, u)?;
        let dg = self.guard_gradient(tr, t, x, u)?;
        Ok(self.guard_time_derivative(tr, t, x, u)? + dg.dot(&f_pre))
    }

    /// Saltation matrix of transition `tr` at the pre-event state:
    ///
    /// `Ξ = D_xR + (F_J − D_xR·F_I − D_tR)·D_xg / (D_tg + D_xg·F_I)`
    ///
    /// `F_I` uses `u_pre`; `F_J` is evaluated at the post-reset state with
    /// `u_post`.
    pub fn saltation(
        &self,
        tr: TransitionId,
        t: T,
        x_pre: &DVector<T>,
        u_pre: &DVector<T>,
        u_post: &DVector<T>,
    ) -> Result<DMatrix<T>, ModelError> {
        let transition = self.transition(tr)?;
        let f_pre = self.eval_field(transition.from, t, x_pre, u_pre)?;
        let dg = self.guard_gradient(tr, t, x_pre, u_pre)?;
        let dtg = self.guard_time_derivative(tr, t, x_pre, u_pre)?;
        let denom = dtg + dg.dot(&f_pre);
        if !(denom.abs() > self.transversality_tol) {
            return Err(ModelError::TangentialCrossing {
                transition: tr,
                rate: denom.to_f64_lossy(),
            });
        }
        let dr = self.reset_jacobian(tr, t, x_pre, u_pre)?;
        let dtr = self.reset_time_derivative(tr, t, x_pre, u_pre)?;
        let x_post = self.apply_reset(tr, t, x_pre, u_pre)?;
        let f_post = self.eval_field(transition.to, t, &x_post, u_post)?;
        let numerator = f_post - &dr * f_pre - dtr;
        let xi = &dr + (numerator * dg.transpose()) / denom;
        if !xi.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NonFinite(format!(
                "saltation of '{}'",
                transition.name
            )));
        }
        Ok(xi)
    }
}
