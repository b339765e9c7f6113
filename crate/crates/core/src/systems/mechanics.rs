//! Euler–Lagrange dynamics with unilateral holonomic constraints.
//!
//! Sign conventions: `M q̈ + C q̇ + N = Υ + Σ_i G_iᵀ λ_i`, where `N` holds
//! gravity as a positive quantity along the upward axis (`N = [0, m g]` for a
//! point mass) and each constraint `a_i(q) ≥ 0` is admissible. The contact
//! force of constraint `i` acts along its normalized gradient, so `λ_i` is the
//! normal force magnitude and `λ_i > 0` means the surface pushes.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanicsError {
    #[error("constrained dynamics are singular (active set {0:?})")]
    SingularConstraint(Vec<usize>),
}

/// Mechanical system `x = [q, q̇]` with a set of candidate contact constraints.
pub trait MechanicalModel<T: Scalar>: Send + Sync {
    fn dof(&self) -> usize;

    fn mass_matrix(&self, q: &DVector<T>) -> DMatrix<T>;

    /// `C(q, q̇) q̇ + N(q, q̇)`.
    fn bias_forces(&self, q: &DVector<T>, qd: &DVector<T>) -> DVector<T>;

    /// `Υ(q, u)`.
    fn input_forces(&self, q: &DVector<T>, u: &DVector<T>) -> DVector<T>;

    fn num_constraints(&self) -> usize;

    /// `a_i(q)`, non-negative when admissible.
    fn constraint_value(&self, i: usize, q: &DVector<T>) -> T;

    /// `A_i(q)ᵀ = ∇_q a_i`.
    fn constraint_gradient(&self, i: usize, q: &DVector<T>) -> DVector<T>;

    /// `Ȧ_i(q) q̇`. Defaults to a central difference of the gradient along `q̇`.
    fn constraint_bias(&self, i: usize, q: &DVector<T>, qd: &DVector<T>) -> T {
        let scale = qd.norm();
        if scale == T::zero() {
            return T::zero();
        }
        let h = T::fd_step() / scale.max(T::one());
        let gp = self.constraint_gradient(i, &(q + qd * h));
        let gm = self.constraint_gradient(i, &(q - qd * h));
        (gp - gm).dot(qd) / (T::lit(2.0) * h)
    }

    fn friction_coefficient(&self, _i: usize) -> T {
        T::zero()
    }

    /// Tangential speed below which friction scales linearly with slip
    /// instead of switching sign. Zero keeps the pure sign law.
    fn friction_slip_speed(&self, _i: usize) -> T {
        T::zero()
    }

    /// Generalized direction of a unit tangential contact force and the
    /// contact point's tangential velocity along it.
    fn friction_direction(
        &self,
        _i: usize,
        _q: &DVector<T>,
        _qd: &DVector<T>,
    ) -> Option<(DVector<T>, T)> {
        None
    }
}

/// Accelerations and contact forces in one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactSolution<T: Scalar> {
    pub qdd: DVector<T>,
    /// Normal force per active constraint, in active-set order.
    pub normal: Vec<T>,
    /// Signed tangential force per active constraint along its friction
    /// direction.
    pub tangential: Vec<T>,
}

/// Solves accelerations and constraint forces simultaneously:
///
/// ```text
/// [ M    −Gᵀ ] [ q̈ ]   [ Υ − C q̇ − N ]
/// [ Â     0  ] [ λ  ] = [ −Ȧ q̇ / |A|  ]
/// ```
///
/// with `Â` the unit-normalized constraint rows and `G_i = Â_i − μ σ_i T_i`,
/// where `σ_i` is the sign of the tangential velocity (saturated linearly
/// below [`MechanicalModel::friction_slip_speed`]).
pub fn constrained_accel<T: Scalar>(
    model: &dyn MechanicalModel<T>,
    q: &DVector<T>,
    qd: &DVector<T>,
    u: &DVector<T>,
    active: &[usize],
) -> Result<ContactSolution<T>, MechanicsError> {
    let n = model.dof();
    let k = active.len();
    let mass = model.mass_matrix(q);
    let rhs_dyn = model.input_forces(q, u) - model.bias_forces(q, qd);
    if k == 0 {
        let qdd = mass
            .lu()
            .solve(&rhs_dyn)
            .ok_or_else(|| MechanicsError::SingularConstraint(vec![]))?;
        return Ok(ContactSolution {
            qdd,
            normal: vec![],
            tangential: vec![],
        });
    }

    let mut block = DMatrix::zeros(n + k, n + k);
    let mut rhs = DVector::zeros(n + k);
    block.view_mut((0, 0), (n, n)).copy_from(&mass);
    rhs.rows_mut(0, n).copy_from(&rhs_dyn);
    let mut friction_terms = Vec::with_capacity(k);
    for (r, &i) in active.iter().enumerate() {
        let grad = model.constraint_gradient(i, q);
        let s = grad.norm();
        if !(s > T::zero()) {
            return Err(MechanicsError::SingularConstraint(active.to_vec()));
        }
        let normal = &grad / s;
        let mut force_dir = normal.clone();
        let mu = model.friction_coefficient(i);
        let mut friction = None;
        if mu > T::zero() {
            if let Some((dir, vt)) = model.friction_direction(i, q, qd) {
                let eps = model.friction_slip_speed(i);
                let sigma = if eps > T::zero() {
                    (vt / eps).max(-T::one()).min(T::one())
                } else if vt > T::zero() {
                    T::one()
                } else if vt < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                };
                force_dir -= &dir * (mu * sigma);
                friction = Some(-(mu * sigma));
            }
        }
        friction_terms.push(friction);
        for c in 0..n {
            block[(c, n + r)] = -force_dir[c];
            block[(n + r, c)] = normal[c];
        }
        rhs[n + r] = -model.constraint_bias(i, q, qd) / s;
    }

    let sol = block
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| MechanicsError::SingularConstraint(active.to_vec()))?;
    let qdd = sol.rows(0, n).into_owned();
    let normal: Vec<T> = (0..k).map(|r| sol[n + r]).collect();
    let tangential = normal
        .iter()
        .zip(&friction_terms)
        .map(|(&l, f)| f.map_or(T::zero(), |c| c * l))
        .collect();
    Ok(ContactSolution {
        qdd,
        normal,
        tangential,
    })
}

/// Plastic impact: removes the velocity component that violates the active
/// constraints, `q̇⁺ = q̇⁻ − M⁻¹Aᵀ(A M⁻¹ Aᵀ)⁻¹ A q̇⁻`.
pub fn plastic_impact<T: Scalar>(
    model: &dyn MechanicalModel<T>,
    q: &DVector<T>,
    qd: &DVector<T>,
    active: &[usize],
) -> Result<DVector<T>, MechanicsError> {
    if active.is_empty() {
        return Ok(qd.clone());
    }
    let n = model.dof();
    let err = || MechanicsError::SingularConstraint(active.to_vec());
    let mut a = DMatrix::zeros(active.len(), n);
    for (r, &i) in active.iter().enumerate() {
        a.set_row(r, &model.constraint_gradient(i, q).transpose());
    }
    let minv = model.mass_matrix(q).try_inverse().ok_or_else(err)?;
    let minv_at = &minv * a.transpose();
    let gram = &a * &minv_at;
    let lam = gram.lu().solve(&(&a * qd)).ok_or_else(err)?;
    let out = qd - minv_at * lam;
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(err())
    }
}

/// Splits `x = [q, q̇]`.
pub fn split_state<T: Scalar>(x: &DVector<T>, dof: usize) -> (DVector<T>, DVector<T>) {
    (x.rows(0, dof).into_owned(), x.rows(dof, dof).into_owned())
}

pub(crate) fn join_state<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> DVector<T> {
    let mut x = DVector::zeros(a.len() + b.len());
    x.rows_mut(0, a.len()).copy_from(a);
    x.rows_mut(a.len(), b.len()).copy_from(b);
    x
}

/// Vector field `[q̇, q̈]` of the mode with the given active set; NaN when the
/// constrained dynamics are singular so the integrator rejects the state.
pub fn mode_field<T: Scalar>(
    model: &dyn MechanicalModel<T>,
    x: &DVector<T>,
    u: &DVector<T>,
    active: &[usize],
) -> DVector<T> {
    let n = model.dof();
    let (q, qd) = split_state(x, n);
    match constrained_accel(model, &q, &qd, u, active) {
        Ok(sol) => join_state(&qd, &sol.qdd),
        Err(_) => DVector::from_element(2 * n, T::lit(f64::NAN)),
    }
}
