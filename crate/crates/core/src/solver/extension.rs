use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{GainSchedule, Trajectory};
use crate::integrator::{self, IntegratorConfig};
use crate::model::{HybridSystem, ModeId};
use crate::Scalar;

/// Reference values the forward pass tracks at one timestep.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceEntry<T: Scalar> {
    pub x: DVector<T>,
    pub u: DVector<T>,
    pub feedback: DMatrix<T>,
    pub feedforward: DVector<T>,
}

/// Where a looked-up reference entry came from.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum EntrySource {
    /// The stored reference state at that step.
    Nominal,
    /// The segment's mode integrated forward past its exit event.
    ExtendedForward,
    /// The segment's mode integrated backward before its entry event.
    ExtendedBackward,
    /// No matching segment; the final step's values are held.
    TerminalHold,
}

#[derive(Clone, Debug)]
struct Segment {
    mode: ModeId,
    /// First and last state index in the segment (empty when `lo > hi`).
    lo: usize,
    hi: usize,
    entry: Option<usize>,
    exit: Option<usize>,
}

/// Reference trajectory plus lazily computed mode extensions.
///
/// When the trajectory being simulated is in hybrid segment `j` with mode
/// `m` at step `k` but the reference is not (an event happened earlier or
/// later than in the reference), the reference state of segment `j` is
/// extended across the event by integrating mode `m` forward from its exit
/// event or backward from its entry event. Inputs and gains are held at the
/// segment boundary.
pub struct ReferenceExtension<'a, T: Scalar> {
    sys: &'a HybridSystem<T>,
    reference: &'a Trajectory<T>,
    gains: &'a GainSchedule<T>,
    cfg: &'a IntegratorConfig<T>,
    enabled: bool,
    segments: Vec<Segment>,
    cache: HashMap<(usize, usize), DVector<T>>,
}

impl<'a, T: Scalar> ReferenceExtension<'a, T> {
    pub fn new(
        sys: &'a HybridSystem<T>,
        reference: &'a Trajectory<T>,
        gains: &'a GainSchedule<T>,
        cfg: &'a IntegratorConfig<T>,
        enabled: bool,
    ) -> Self {
        let n = reference.n_steps();
        let e = reference.events.len();
        let segments = (0..=e)
            .map(|j| {
                let lo = if j == 0 {
                    0
                } else {
                    reference.events[j - 1].step + 1
                };
                let hi = if j < e { reference.events[j].step } else { n };
                let mode = if j == 0 {
                    reference.modes[0]
                } else {
                    reference.events[j - 1].event.to
                };
                Segment {
                    mode,
                    lo,
                    hi,
                    entry: j.checked_sub(1),
                    exit: (j < e).then_some(j),
                }
            })
            .collect();
        Self {
            sys,
            reference,
            gains,
            cfg,
            enabled,
            segments,
            cache: HashMap::new(),
        }
    }

    fn entry_at(&self, x: DVector<T>, k: usize) -> ReferenceEntry<T> {
        ReferenceEntry {
            x,
            u: self.reference.inputs[k].clone(),
            feedback: self.gains.feedback[k].clone(),
            feedforward: self.gains.feedforward[k].clone(),
        }
    }

    /// Reference for control step `k < N` given the simulated trajectory's
    /// segment ordinal and current mode.
    pub fn lookup(&mut self, k: usize, segment: usize, mode: ModeId) -> (ReferenceEntry<T>, EntrySource) {
        let n = self.reference.n_steps();
        if !self.enabled {
            return (self.entry_at(self.reference.states[k].clone(), k), EntrySource::Nominal);
        }
        let seg = match self.segments.get(segment) {
            Some(s) if s.mode == mode => s.clone(),
            _ => {
                return (
                    self.entry_at(self.reference.states[n - 1].clone(), n - 1),
                    EntrySource::TerminalHold,
                )
            }
        };
        if seg.lo <= k && k <= seg.hi {
            return (self.entry_at(self.reference.states[k].clone(), k), EntrySource::Nominal);
        }
        if k > seg.hi {
            let Some(e) = seg.exit else {
                return (
                    self.entry_at(self.reference.states[n - 1].clone(), n - 1),
                    EntrySource::TerminalHold,
                );
            };
            let b = self.reference.events[e].step;
            let x = self.forward_state(segment, &seg, e, b, k);
            return (self.entry_at(x, b), EntrySource::ExtendedForward);
        }
        let e = seg.entry.expect("segment 0 starts at step 0");
        let ev_step = self.reference.events[e].step;
        let b = if seg.lo < n { seg.lo } else { ev_step };
        let x = self.backward_state(segment, e, b, k);
        (self.entry_at(x, b), EntrySource::ExtendedBackward)
    }

    fn forward_state(&mut self, j: usize, seg: &Segment, e: usize, b: usize, k: usize) -> DVector<T> {
        if let Some(x) = self.cache.get(&(j, k)) {
            return x.clone();
        }
        let ev = &self.reference.events[e].event;
        let u = &self.reference.inputs[b];
        let (t0, x0) = if k > seg.hi + 1 {
            (self.reference.time(k - 1), self.forward_state(j, seg, e, b, k - 1))
        } else {
            (ev.t_event, ev.x_pre.clone())
        };
        let t1 = self.reference.time(k);
        let x = integrator::flow(self.sys, seg.mode, t0, &x0, u, t1 - t0, self.cfg)
            .unwrap_or(x0);
        self.cache.insert((j, k), x.clone());
        x
    }

    fn backward_state(&mut self, j: usize, e: usize, b: usize, k: usize) -> DVector<T> {
        if let Some(x) = self.cache.get(&(j, k)) {
            return x.clone();
        }
        let ev = &self.reference.events[e];
        let mode = ev.event.to;
        let u = &self.reference.inputs[b];
        let (t0, x0) = if k < ev.step {
            (self.reference.time(k + 1), self.backward_state(j, e, b, k + 1))
        } else {
            (ev.event.t_event, ev.event.x_post.clone())
        };
        let t1 = self.reference.time(k);
        let x = integrator::flow(self.sys, mode, t0, &x0, u, t1 - t0, self.cfg)
            .unwrap_or(x0);
        self.cache.insert((j, k), x.clone());
        x
    }
}
