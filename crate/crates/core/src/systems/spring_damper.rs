//! 1D ball landing on a compliant ground: spring-damper while compressing,
//! spring only while releasing. Every reset is the identity.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::model::{FnGuard, HybridSystem, IdentityReset, ModeId, ModelError, TransitionKind};
use crate::Scalar;

pub const AERIAL: ModeId = ModeId(0);
pub const COMPRESSION: ModeId = ModeId(1);
pub const RELEASE: ModeId = ModeId(2);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpringDamperParams {
    pub mass: f64,
    pub gravity: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for SpringDamperParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.8,
            stiffness: 100.0,
            damping: 5.0,
        }
    }
}

pub fn make_spring_damper_ball<T: Scalar>(
    p: &SpringDamperParams,
) -> Result<HybridSystem<T>, ModelError> {
    if !(p.mass > 0.0) || p.stiffness < 0.0 || p.damping < 0.0 {
        return Err(ModelError::Config(
            "mass must be positive and ground coefficients non-negative".into(),
        ));
    }
    let (m, g, k, d) = (
        T::lit(p.mass),
        T::lit(p.gravity),
        T::lit(p.stiffness),
        T::lit(p.damping),
    );
    let mut b = HybridSystem::builder("spring_damper_ball", 2, 1);
    let aerial = b.mode("aerial", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        DVector::from_vec(vec![x[1], (u[0] - m * g) / m])
    });
    let compression = b.mode("spring_damper", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        DVector::from_vec(vec![x[1], (u[0] - m * g - k * x[0] - d * x[1]) / m])
    });
    let release = b.mode("spring", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        DVector::from_vec(vec![x[1], (u[0] - m * g - k * x[0]) / m])
    });
    debug_assert_eq!((aerial, compression, release), (AERIAL, COMPRESSION, RELEASE));
    // Guards fire on a decreasing crossing, so the rising conditions
    // (penetration velocity vanishing, leaving the ground) are negated.
    b.transition(
        "touchdown",
        TransitionKind::Impact,
        aerial,
        compression,
        FnGuard::coordinate(2, 0, T::one()),
        IdentityReset,
    );
    b.transition(
        "max_compression",
        TransitionKind::Other,
        compression,
        release,
        FnGuard::coordinate(2, 1, -T::one()),
        IdentityReset,
    );
    b.transition(
        "liftoff",
        TransitionKind::Liftoff,
        release,
        aerial,
        FnGuard::coordinate(2, 0, -T::one()),
        IdentityReset,
    );
    b.build()
}
