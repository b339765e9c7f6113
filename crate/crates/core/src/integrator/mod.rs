//! Hybrid execution engine: adaptive Dormand–Prince integration of the active
//! mode with guard monitoring, event location, reset application and
//! continuation in the new mode.
//!
//! Each call to [`step`] first tries the whole interval as a single internal
//! step, so for well-resolved dynamics the step map is one Runge–Kutta stage
//! evaluation and is smooth in the initial state. Finite-difference Jacobians
//! of that map are then meaningful.

mod dopri;
mod events;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dopri::DenseSegment;
pub use events::{locate_event, DenseOutput, LinearInterpolant};

use crate::model::{HybridState, HybridSystem, ModeId, ModelError, TransitionEvent, TransitionId};
use crate::scalar::all_finite;
use crate::Scalar;
use events::{find_root, is_crossing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("more than {limit} events in one step starting at t = {t}")]
    ZenoCap { limit: usize, t: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("gave up after {attempts} internal steps at t = {t}")]
    StepBudget { attempts: usize, t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("guard of transition {transition} is not bracketed (g = {g_start} -> {g_end})")]
    NoBracket {
        transition: TransitionId,
        g_start: f64,
        g_end: f64,
    },
    #[error("invalid step duration {0}")]
    InvalidDuration(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig<T: Scalar> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Accepted `|g|` at a located event.
    pub event_tol: T,
    /// Event localization also stops once the time bracket is this narrow.
    pub time_tol: T,
    pub max_events_per_step: usize,
    pub min_step: T,
    /// Internal step attempts allowed per call. Chattering fields (a friction
    /// force flipping sign at every step) otherwise stall without ever
    /// reaching `min_step`.
    pub max_internal_steps: usize,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-8),
            abs_tol: T::lit(1e-10),
            event_tol: T::lit(1e-10),
            time_tol: T::lit(1e-12),
            max_events_per_step: 8,
            min_step: T::lit(1e-12),
            max_internal_steps: 100_000,
        }
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("event_tol", self.event_tol),
            ("time_tol", self.time_tol),
            ("min_step", self.min_step),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.max_events_per_step == 0 {
            return Err("max_events_per_step must be at least 1".into());
        }
        if self.max_internal_steps == 0 {
            return Err("max_internal_steps must be at least 1".into());
        }
        Ok(())
    }

    /// Same configuration with tolerances scaled by `factor`.
    pub fn tightened(&self, factor: T) -> Self {
        Self {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult<T: Scalar> {
    pub x_next: DVector<T>,
    pub mode_next: ModeId,
    /// Events in increasing time order.
    pub events: Vec<TransitionEvent<T>>,
    /// Set when two guards were reached within `time_tol` of each other.
    pub simultaneous: bool,
}

impl<T: Scalar> StepResult<T> {
    pub fn state(&self, t: T) -> HybridState<T> {
        HybridState::new(self.mode_next, self.x_next.clone(), t)
    }
}

/// Integrates `mode` alone (guards ignored) from `(t0, x0)` for `duration`,
/// which may be negative.
pub fn flow<T: Scalar>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    t0: T,
    x0: &DVector<T>,
    u: &DVector<T>,
    duration: T,
    cfg: &IntegratorConfig<T>,
) -> Result<DVector<T>, IntegratorError> {
    sys.eval_field(mode, t0, x0, u)?;
    if duration == T::zero() {
        return Ok(x0.clone());
    }
    let f = |t: T, x: &DVector<T>| {
        sys.eval_field(mode, t, x, u)
            .expect("mode validated before integration")
    };
    let t_end = t0 + duration;
    let sign = duration.signum();
    let (mut t, mut x) = (t0, x0.clone());
    let mut h = duration;
    let mut attempts = 0usize;
    loop {
        let remaining = t_end - t;
        if remaining * sign <= T::zero() {
            break;
        }
        attempts += 1;
        if attempts > cfg.max_internal_steps {
            return Err(IntegratorError::StepBudget {
                attempts: cfg.max_internal_steps,
                t: t.to_f64_lossy(),
            });
        }
        let last = (h.abs()) >= remaining.abs();
        if last {
            h = remaining;
        }
        let r = dopri::attempt(&f, t, &x, h, cfg.rel_tol, cfg.abs_tol);
        if r.error <= T::one() {
            if !all_finite(&r.x_new) {
                return Err(IntegratorError::NonFinite { t: t.to_f64_lossy() });
            }
            t = if last { t_end } else { t + h };
            x = r.x_new;
            h *= dopri::step_factor(r.error);
        } else {
            h *= dopri::step_factor(r.error);
            if h.abs() < cfg.min_step {
                return Err(IntegratorError::StepUnderflow {
                    t: t.to_f64_lossy(),
                    h: h.to_f64_lossy(),
                });
            }
        }
    }
    Ok(x)
}

/// Advances the hybrid state by `dt` under the zero-order-hold input `u`.
///
/// Whenever an outgoing guard of the active mode is crossed, the event is
/// located on the dense output, the reset is applied, the mode switches and
/// integration resumes from the event time with the same input.
pub fn step<T: Scalar>(
    sys: &HybridSystem<T>,
    state: &HybridState<T>,
    u: &DVector<T>,
    dt: T,
    cfg: &IntegratorConfig<T>,
) -> Result<StepResult<T>, IntegratorError> {
    if !(dt > T::zero()) {
        return Err(IntegratorError::InvalidDuration(dt.to_f64_lossy()));
    }
    if !state.is_finite() || !all_finite(u) {
        return Err(IntegratorError::NonFinite {
            t: state.t.to_f64_lossy(),
        });
    }
    sys.eval_field(state.mode, state.t, &state.x, u)?;

    let t_end = state.t + dt;
    let mut mode = state.mode;
    let mut t = state.t;
    let mut x = state.x.clone();
    let mut events = Vec::new();
    let mut simultaneous = false;
    let mut h = dt;

    let mut attempts = 0usize;
    while t < t_end {
        attempts += 1;
        if attempts > cfg.max_internal_steps {
            return Err(IntegratorError::StepBudget {
                attempts: cfg.max_internal_steps,
                t: t.to_f64_lossy(),
            });
        }
        let remaining = t_end - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let f = |tt: T, xx: &DVector<T>| {
            sys.eval_field(mode, tt, xx, u)
                .expect("mode validated before integration")
        };
        let r = dopri::attempt(&f, t, &x, h, cfg.rel_tol, cfg.abs_tol);
        if r.error > T::one() {
            h *= dopri::step_factor(r.error);
            if h < cfg.min_step {
                return Err(IntegratorError::StepUnderflow {
                    t: t.to_f64_lossy(),
                    h: h.to_f64_lossy(),
                });
            }
            continue;
        }
        if !all_finite(&r.x_new) {
            return Err(IntegratorError::NonFinite { t: t.to_f64_lossy() });
        }
        let t_b = if last { t_end } else { t + h };

        match first_crossing(sys, mode, &r.dense, t, &x, t_b, &r.x_new, u, cfg)? {
            Some((tr, t_event, x_pre, tie)) => {
                simultaneous |= tie;
                let transition = sys.transition(tr)?;
                let x_post = sys.apply_reset(tr, t_event, &x_pre, u)?;
                events.push(TransitionEvent {
                    transition: tr,
                    from: mode,
                    to: transition.to,
                    kind: transition.kind,
                    t_event,
                    x_pre,
                    x_post: x_post.clone(),
                    u: u.clone(),
                });
                if events.len() > cfg.max_events_per_step {
                    return Err(IntegratorError::ZenoCap {
                        limit: cfg.max_events_per_step,
                        t: state.t.to_f64_lossy(),
                    });
                }
                mode = transition.to;
                t = t_event;
                x = x_post;
                h = t_end - t;
            }
            None => {
                t = t_b;
                x = r.x_new;
                h *= dopri::step_factor(r.error);
            }
        }
    }

    Ok(StepResult {
        x_next: x,
        mode_next: mode,
        events,
        simultaneous,
    })
}

/// Earliest guard crossing of `mode` over one accepted internal step.
#[allow(clippy::too_many_arguments)]
fn first_crossing<T: Scalar>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    dense: &DenseSegment<T>,
    t_a: T,
    x_a: &DVector<T>,
    t_b: T,
    x_b: &DVector<T>,
    u: &DVector<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Option<(TransitionId, T, DVector<T>, bool)>, IntegratorError> {
    let mut best: Option<(TransitionId, T, DVector<T>, T)> = None;
    let mut tie = false;
    for (id, tr) in sys.outgoing(mode) {
        let g_a = tr.guard.value(t_a, x_a, u);
        let g_b = tr.guard.value(t_b, x_b, u);
        if !is_crossing(g_a, g_b) {
            continue;
        }
        let g = |tt: T| tr.guard.value(tt, &dense.eval(tt), u);
        let t_event = find_root(g, t_a, t_b, cfg.event_tol, cfg.time_tol);
        let x_pre = dense.eval(t_event);
        match &best {
            None => {
                let rate = crossing_rate_or_zero(sys, id, t_event, &x_pre, u);
                best = Some((id, t_event, x_pre, rate));
            }
            Some((_, t_best, _, rate_best)) => {
                if (t_event - *t_best).abs() < cfg.time_tol {
                    tie = true;
                    let rate = crossing_rate_or_zero(sys, id, t_event, &x_pre, u);
                    if rate.abs() > rate_best.abs() {
                        best = Some((id, t_event, x_pre, rate));
                    }
                } else if t_event < *t_best {
                    let rate = crossing_rate_or_zero(sys, id, t_event, &x_pre, u);
                    best = Some((id, t_event, x_pre, rate));
                }
            }
        }
    }
    Ok(best.map(|(id, t, x, _)| (id, t, x, tie)))
}

fn crossing_rate_or_zero<T: Scalar>(
    sys: &HybridSystem<T>,
    tr: TransitionId,
    t: T,
    x: &DVector<T>,
    u: &DVector<T>,
) -> T {
    sys.crossing_rate(tr, t, x, u).unwrap_or_else(|_| T::zero())
}
