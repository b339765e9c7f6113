//! Benchmark hybrid systems and the constrained mechanics they are built on.

pub mod bouncing_ball;
pub mod circle_drop;
pub mod mechanics;
pub mod quadcopter;
pub mod spring_damper;

use serde::{Deserialize, Serialize};

pub use bouncing_ball::{make_bouncing_ball, BouncingBallParams};
pub use circle_drop::{make_circle_drop, CircleDropParams, CircleModel};
pub use mechanics::{
    constrained_accel, mode_field, plastic_impact, split_state, ContactSolution, MechanicalModel,
    MechanicsError,
};
pub use quadcopter::{make_quadcopter, QuadcopterModel, QuadcopterParams};
pub use spring_damper::{make_spring_damper_ball, SpringDamperParams};

use crate::model::{HybridSystem, ModelError};
use crate::Scalar;

/// A registered system together with its physical parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SystemSpec {
    BouncingBall(BouncingBallParams),
    SpringDamperBall(SpringDamperParams),
    CircleDrop(CircleDropParams),
    Quadcopter(QuadcopterParams),
}

/// Names accepted by [`SystemSpec::with_defaults`].
pub const SYSTEM_NAMES: [&str; 4] = ["bouncing_ball", "spring_damper_ball", "circle_drop", "quadcopter"];

impl SystemSpec {
    pub fn with_defaults(name: &str) -> Option<Self> {
        Some(match name {
            "bouncing_ball" => SystemSpec::BouncingBall(Default::default()),
            "spring_damper_ball" => SystemSpec::SpringDamperBall(Default::default()),
            "circle_drop" => SystemSpec::CircleDrop(Default::default()),
            "quadcopter" => SystemSpec::Quadcopter(Default::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::BouncingBall(_) => SYSTEM_NAMES[0],
            SystemSpec::SpringDamperBall(_) => SYSTEM_NAMES[1],
            SystemSpec::CircleDrop(_) => SYSTEM_NAMES[2],
            SystemSpec::Quadcopter(_) => SYSTEM_NAMES[3],
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<HybridSystem<T>, ModelError> {
        match self {
            SystemSpec::BouncingBall(p) => make_bouncing_ball(p),
            SystemSpec::SpringDamperBall(p) => make_spring_damper_ball(p),
            SystemSpec::CircleDrop(p) => make_circle_drop(p),
            SystemSpec::Quadcopter(p) => make_quadcopter(p),
        }
    }
}
