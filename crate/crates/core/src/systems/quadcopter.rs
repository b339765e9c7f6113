//! Planar quadcopter perching on the inside of a circular wall.
//!
//! `q = [y, z, θ]`, inputs are the left and right thrusts. Either edge can
//! touch the wall `|p| = r` and slide on it with Coulomb friction; once both
//! edges touch, a latch holds the body in place for good.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mechanics::{
    constrained_accel, join_state, mode_field, plastic_impact, split_state, MechanicalModel,
};
use crate::model::{FnGuard, FnReset, HybridSystem, IdentityReset, ModeId, ModelError, TransitionKind};
use crate::Scalar;

pub const FREE: ModeId = ModeId(0);
pub const LEFT_CONTACT: ModeId = ModeId(1);
pub const RIGHT_CONTACT: ModeId = ModeId(2);
pub const LATCHED: ModeId = ModeId(3);

/// Constraint index of each edge.
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadcopterParams {
    pub mass: f64,
    pub gravity: f64,
    pub inertia: f64,
    pub width: f64,
    pub friction: f64,
    /// Slip speed below which friction is proportional to slip; keeps the
    /// field continuous when an edge stops sliding.
    pub slip_speed: f64,
    pub wall_radius: f64,
}

impl Default for QuadcopterParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.8,
            inertia: 1.0,
            width: 0.25,
            friction: 0.5,
            slip_speed: 1e-3,
            wall_radius: 5.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadcopterModel<T: Scalar> {
    pub mass: T,
    pub gravity: T,
    pub inertia: T,
    pub width: T,
    pub friction: T,
    pub slip_speed: T,
    pub wall_radius: T,
}

impl<T: Scalar> QuadcopterModel<T> {
    pub fn from_params(p: &QuadcopterParams) -> Self {
        Self {
            mass: T::lit(p.mass),
            gravity: T::lit(p.gravity),
            inertia: T::lit(p.inertia),
            width: T::lit(p.width),
            friction: T::lit(p.friction),
            slip_speed: T::lit(p.slip_speed),
            wall_radius: T::lit(p.wall_radius),
        }
    }

    fn side(i: usize) -> T {
        if i == LEFT {
            -T::one()
        } else {
            T::one()
        }
    }

    /// Edge position `p_i(q)`.
    pub fn edge(&self, i: usize, q: &DVector<T>) -> DVector<T> {
        let c = self.width * T::lit(0.5) * Self::side(i);
        DVector::from_vec(vec![q[0] + c * q[2].cos(), q[1] + c * q[2].sin()])
    }

    /// `∂p_i/∂q`, 2×3.
    pub fn edge_jacobian(&self, i: usize, q: &DVector<T>) -> DMatrix<T> {
        let c = self.width * T::lit(0.5) * Self::side(i);
        DMatrix::from_row_slice(
            2,
            3,
            &[
                T::one(),
                T::zero(),
                -c * q[2].sin(),
                T::zero(),
                T::one(),
                c * q[2].cos(),
            ],
        )
    }
}

impl<T: Scalar> MechanicalModel<T> for QuadcopterModel<T> {
    fn dof(&self) -> usize {
        3
    }

    fn mass_matrix(&self, _q: &DVector<T>) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![self.mass, self.mass, self.inertia]))
    }

    fn bias_forces(&self, _q: &DVector<T>, _qd: &DVector<T>) -> DVector<T> {
        DVector::from_vec(vec![T::zero(), self.mass * self.gravity, T::zero()])
    }

    fn input_forces(&self, q: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        let thrust = u[0] + u[1];
        DVector::from_vec(vec![
            -q[2].sin() * thrust,
            q[2].cos() * thrust,
            (u[1] - u[0]) * self.width * T::lit(0.5),
        ])
    }

    fn num_constraints(&self) -> usize {
        2
    }

    fn constraint_value(&self, i: usize, q: &DVector<T>) -> T {
        self.wall_radius * self.wall_radius - self.edge(i, q).norm_squared()
    }

    fn constraint_gradient(&self, i: usize, q: &DVector<T>) -> DVector<T> {
        self.edge_jacobian(i, q).transpose() * self.edge(i, q) * T::lit(-2.0)
    }

    fn constraint_bias(&self, i: usize, q: &DVector<T>, qd: &DVector<T>) -> T {
        let p = self.edge(i, q);
        let pd = self.edge_jacobian(i, q) * qd;
        let c = self.width * T::lit(0.5) * Self::side(i);
        let w2 = qd[2] * qd[2];
        let centripetal = DVector::from_vec(vec![-c * q[2].cos() * w2, -c * q[2].sin() * w2]);
        (pd.norm_squared() + p.dot(&centripetal)) * T::lit(-2.0)
    }

    fn friction_coefficient(&self, _i: usize) -> T {
        self.friction
    }

    fn friction_slip_speed(&self, _i: usize) -> T {
        self.slip_speed
    }

    fn friction_direction(
        &self,
        i: usize,
        q: &DVector<T>,
        qd: &DVector<T>,
    ) -> Option<(DVector<T>, T)> {
        let p = self.edge(i, q);
        let r = p.norm();
        if !(r > T::zero()) {
            return None;
        }
        let tangent = DVector::from_vec(vec![-p[1] / r, p[0] / r]);
        let jac = self.edge_jacobian(i, q);
        let vt = tangent.dot(&(&jac * qd));
        Some((jac.transpose() * tangent, vt))
    }
}

pub fn make_quadcopter<T: Scalar>(p: &QuadcopterParams) -> Result<HybridSystem<T>, ModelError> {
    if p.friction < 0.0 || p.slip_speed < 0.0 {
        return Err(ModelError::Config("friction coefficient and slip speed must be non-negative".into()));
    }
    if !(p.mass > 0.0 && p.inertia > 0.0 && p.width > 0.0 && p.wall_radius > p.width) {
        return Err(ModelError::Config("invalid quadcopter geometry or inertia".into()));
    }
    let model = Arc::new(QuadcopterModel::<T>::from_params(p));
    let mut b = HybridSystem::builder("quadcopter", 6, 2);

    let m = model.clone();
    let free = b.mode("free", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        mode_field(m.as_ref(), x, u, &[])
    });
    let m = model.clone();
    let left = b.mode("left_contact", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        mode_field(m.as_ref(), x, u, &[LEFT])
    });
    let m = model.clone();
    let right = b.mode("right_contact", move |_t: T, x: &DVector<T>, u: &DVector<T>| {
        mode_field(m.as_ref(), x, u, &[RIGHT])
    });
    let latched = b.mode("latched", |_t: T, x: &DVector<T>, _u: &DVector<T>| {
        DVector::zeros(x.len())
    });
    debug_assert_eq!(
        (free, left, right, latched),
        (FREE, LEFT_CONTACT, RIGHT_CONTACT, LATCHED)
    );

    let edge_guard = |i: usize| {
        let (mv, mg) = (model.clone(), model.clone());
        FnGuard::new(move |_t, x: &DVector<T>, _u| mv.constraint_value(i, &x.rows(0, 3).into_owned()))
            .with_gradient(move |_t, x: &DVector<T>, _u| {
                let g = mg.constraint_gradient(i, &x.rows(0, 3).into_owned());
                let mut out = DVector::zeros(6);
                out.rows_mut(0, 3).copy_from(&g);
                out
            })
            .time_invariant()
    };
    let impact = |i: usize| {
        let m = model.clone();
        FnReset::new(move |_t, x: &DVector<T>, _u| {
            let (q, qd) = split_state(x, 3);
            match plastic_impact(m.as_ref(), &q, &qd, &[i]) {
                Ok(v) => join_state(&q, &v),
                Err(_) => DVector::from_element(6, T::lit(f64::NAN)),
            }
        })
        .time_invariant()
    };
    let liftoff = |i: usize| {
        let m = model.clone();
        FnGuard::new(move |_t, x: &DVector<T>, u: &DVector<T>| {
            let (q, qd) = split_state(x, 3);
            constrained_accel(m.as_ref(), &q, &qd, u, &[i])
                .map(|s| s.normal[0])
                .unwrap_or(T::zero())
        })
        .time_invariant()
    };
    let latch = || {
        let mut jac = DMatrix::identity(6, 6);
        for i in 3..6 {
            jac[(i, i)] = T::zero();
        }
        FnReset::new(|_t, x: &DVector<T>, _u| {
            let mut out = x.clone();
            out.rows_mut(3, 3).fill(T::zero());
            out
        })
        .with_jacobian(move |_t, _x, _u| jac.clone())
        .time_invariant()
    };

    b.transition("left_touchdown", TransitionKind::Impact, free, left, edge_guard(LEFT), impact(LEFT));
    b.transition("right_touchdown", TransitionKind::Impact, free, right, edge_guard(RIGHT), impact(RIGHT));
    b.transition("left_liftoff", TransitionKind::Liftoff, left, free, liftoff(LEFT), IdentityReset);
    b.transition("right_liftoff", TransitionKind::Liftoff, right, free, liftoff(RIGHT), IdentityReset);
    b.transition("latch_right", TransitionKind::Impact, left, latched, edge_guard(RIGHT), latch());
    b.transition("latch_left", TransitionKind::Impact, right, latched, edge_guard(LEFT), latch());
    b.build()
}
