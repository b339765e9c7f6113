//! Actuated point mass inside a circular tube.
//!
//! `q = [y, z]`, state `[y, z, ẏ, ż]`, inputs are forces on both axes. The
//! constraint `a(q) = r² − y² − z²` keeps the ball inside the circle; touching
//! it applies a plastic impact and the contact mode ends when the normal
//! force reaches zero.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mechanics::{
    constrained_accel, join_state, mode_field, plastic_impact, split_state, MechanicalModel,
};
use crate::model::{FnGuard, FnReset, HybridSystem, IdentityReset, ModeId, ModelError, TransitionKind};
use crate::Scalar;

pub const FREE: ModeId = ModeId(0);
pub const CONTACT: ModeId = ModeId(1);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleDropParams {
    pub mass: f64,
    pub gravity: f64,
    pub radius: f64,
}

impl Default for CircleDropParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.8,
            radius: 2.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CircleModel<T: Scalar> {
    pub mass: T,
    pub gravity: T,
    pub radius: T,
}

impl<T: Scalar> CircleModel<T> {
    pub fn from_params(p: &CircleDropParams) -> Self {
        Self {
            mass: T::lit(p.mass),
            gravity: T::lit(p.gravity),
            radius: T::lit(p.radius),
        }
    }
}

impl<T: Scalar> MechanicalModel<T> for CircleModel<T> {
    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, _q: &DVector<T>) -> DMatrix<T> {
        DMatrix::identity(2, 2) * self.mass
    }

    fn bias_forces(&self, _q: &DVector<T>, _qd: &DVector<T>) -> DVector<T> {
        DVector::from_vec(vec![T::zero(), self.mass * self.gravity])
    }

    fn input_forces(&self, _q: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        u.clone()
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn constraint_value(&self, _i: usize, q: &DVector<T>) -> T {
        self.radius * self.radius - q[0] * q[0] - q[1] * q[1]
    }

    fn constraint_gradient(&self, _i: usize, q: &DVector<T>) -> DVector<T> {
        q * T::lit(-2.0)
    }

    fn constraint_bias(&self, _i: usize, _q: &DVector<T>, qd: &DVector<T>) -> T {
        qd.norm_squared() * T::lit(-2.0)
    }
}

pub fn make_circle_drop<T: Scalar>(p: &CircleDropParams) -> Result<HybridSystem<T>, ModelError> {
    if !(p.mass > 0.0 && p.radius > 0.0) {
        return Err(ModelError::Config("mass and radius must be positive".into()));
    }
    let model = Arc::new(CircleModel::<T>::from_params(p));
    let mut b = HybridSystem::builder("circle_drop", 4, 2);

    let m = model.clone();
    let free = b.mode("free", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        mode_field(m.as_ref(), x, u, &[])
    });
    let m = model.clone();
    let contact = b.mode("contact", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        mode_field(m.as_ref(), x, u, &[0])
    });
    debug_assert_eq!((free, contact), (FREE, CONTACT));

    let (m_val, m_grad) = (model.clone(), model.clone());
    let impact_guard = FnGuard::new(move |_t, x: &DVector<T>, _u| {
        m_val.constraint_value(0, &x.rows(0, 2).into_owned())
    })
    .with_gradient(move |_t, x: &DVector<T>, _u| {
        let g = m_grad.constraint_gradient(0, &x.rows(0, 2).into_owned());
        DVector::from_vec(vec![g[0], g[1], T::zero(), T::zero()])
    })
    .time_invariant();
    let m = model.clone();
    let impact_reset = FnReset::new(move |_t, x: &DVector<T>, _u| {
        let (q, qd) = split_state(x, 2);
        match plastic_impact(m.as_ref(), &q, &qd, &[0]) {
            Ok(v) => join_state(&q, &v),
            Err(_) => DVector::from_element(4, T::lit(f64::NAN)),
        }
    })
    .time_invariant();
    b.transition("impact", TransitionKind::Impact, free, contact, impact_guard, impact_reset);

    let m = model.clone();
    let liftoff_guard = FnGuard::new(move |_t, x: &DVector<T>, u: &DVector<T>| {
        let (q, qd) = split_state(x, 2);
        constrained_accel(m.as_ref(), &q, &qd, u, &[0])
            .map(|s| s.normal[0])
            .unwrap_or(T::zero())
    })
    .time_invariant();
    b.transition("liftoff", TransitionKind::Liftoff, contact, free, liftoff_guard, IdentityReset);
    b.build()
}
