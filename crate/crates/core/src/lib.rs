//! Trajectory optimization for hybrid dynamical systems with state jumps.
//!
//! The crate implements an iLQR variant whose forward pass simulates the full
//! hybrid execution (event detection, resets, mode switches) and whose backward
//! pass carries the value function through each transition with the saltation
//! matrix. A reset-Jacobian variant is kept alongside for comparison.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the benchmark problems
//! and the experiment harness use.
//!
//! Module map:
//! - [`model`]: hybrid system description, guards, resets, saltation matrix.
//! - [`integrator`]: Dormand–Prince 5(4) integration with event location.
//! - [`solver`]: hybrid iLQR (rollout, linearization, backward/forward pass).
//! - [`systems`]: constrained Euler–Lagrange machinery and benchmark systems.

pub mod integrator;
pub mod model;
pub mod scalar;
pub mod solver;
pub mod systems;

pub use integrator::{IntegratorConfig, IntegratorError, StepResult};
pub use model::{
    HybridState, HybridSystem, ModeId, ModelError, Transition, TransitionEvent, TransitionId,
    TransitionKind,
};
pub use scalar::Scalar;
pub use solver::{
    CostModel, GainSchedule, GradientVariant, SolveOutcome, SolveStats, SolverConfig,
    SolverError, Trajectory,
};

pub type HybridSystem64 = HybridSystem<f64>;
pub type HybridSystem32 = HybridSystem<f32>;
pub type HybridState64 = HybridState<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type CostModel64 = CostModel<f64>;
pub type GainSchedule64 = GainSchedule<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type TransitionEvent64 = TransitionEvent<f64>;
