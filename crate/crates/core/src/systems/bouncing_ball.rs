//! 1D ball with an elastic impact at `z = 0`.
//!
//! State `[z, ż]`, input a vertical force. The falling and rising modes share
//! the ballistic field; impact (falling → rising) applies `[z, −e ż]` and the
//! apex (rising → falling) is an identity transition.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{FnGuard, HybridSystem, IdentityReset, LinearReset, ModeId, ModelError, TransitionKind};
use crate::Scalar;

pub const FALLING: ModeId = ModeId(0);
pub const RISING: ModeId = ModeId(1);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BouncingBallParams {
    pub mass: f64,
    pub gravity: f64,
    pub restitution: f64,
}

impl Default for BouncingBallParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.8,
            restitution: 0.8,
        }
    }
}

pub fn make_bouncing_ball<T: Scalar>(p: &BouncingBallParams) -> Result<HybridSystem<T>, ModelError> {
    if !(p.restitution > 0.0 && p.restitution < 1.0) {
        return Err(ModelError::Config(format!(
            "restitution must lie in (0, 1), got {}",
            p.restitution
        )));
    }
    if !(p.mass > 0.0) {
        return Err(ModelError::Config("mass must be positive".into()));
    }
    let (m, g, e) = (T::lit(p.mass), T::lit(p.gravity), T::lit(p.restitution));
    let field = move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        DVector::from_vec(vec![x[1], (u[0] - m * g) / m])
    };
    let mut b = HybridSystem::builder("bouncing_ball", 2, 1);
    let falling = b.mode("falling", field);
    let rising = b.mode("rising", field);
    debug_assert_eq!((falling, rising), (FALLING, RISING));
    b.transition(
        "impact",
        TransitionKind::Impact,
        falling,
        rising,
        FnGuard::coordinate(2, 0, T::one()),
        LinearReset::new(DMatrix::from_diagonal(&DVector::from_vec(vec![T::one(), -e]))),
    );
    b.transition(
        "apex",
        TransitionKind::Apex,
        rising,
        falling,
        FnGuard::coordinate(2, 1, T::one()),
        IdentityReset,
    );
    b.build()
}
