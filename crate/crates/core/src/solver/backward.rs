use nalgebra::{DMatrix, DVector};

use super::{CostModel, SolverError, StepJacobian, Trajectory};
use crate::Scalar;

/// Feedforward terms and feedback gains from one backward pass, plus the
/// pieces of the expected cost reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct GainSchedule<T: Scalar> {
    pub feedforward: Vec<DVector<T>>,
    pub feedback: Vec<DMatrix<T>>,
    /// `Σ u_ffᵀ Q_u`
    pub linear_term: T,
    /// `Σ u_ffᵀ Q_uu u_ff`, with the unregularized `Q_uu`.
    pub quadratic_term: T,
}

impl<T: Scalar> GainSchedule<T> {
    pub fn zeros(n_steps: usize, n: usize, m: usize) -> Self {
        Self {
            feedforward: vec![DVector::zeros(m); n_steps],
            feedback: vec![DMatrix::zeros(m, n); n_steps],
            linear_term: T::zero(),
            quadratic_term: T::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.feedforward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feedforward.is_empty()
    }
}

/// Predicted cost change for line-search step `alpha`:
/// `δJ(α) = α Σ u_ffᵀQ_u + α²/2 Σ u_ffᵀQ_uu u_ff`. Negative is a decrease.
pub fn expected_reduction<T: Scalar>(gains: &GainSchedule<T>, alpha: T) -> T {
    alpha * gains.linear_term + alpha * alpha * T::lit(0.5) * gains.quadratic_term
}

/// Riccati-style backward sweep over the linearized trajectory.
///
/// Event costs enter through the sensitivity of each pre-event state to the
/// step's initial state and input.
pub fn backward_pass<T: Scalar>(
    traj: &Trajectory<T>,
    cost: &CostModel<T>,
    jacobians: &[StepJacobian<T>],
    regularization: T,
) -> Result<GainSchedule<T>, SolverError> {
    let n_steps = traj.n_steps();
    if jacobians.len() != n_steps {
        return Err(SolverError::Dimension(format!(
            "{} step Jacobians for {} steps",
            jacobians.len(),
            n_steps
        )));
    }
    let m = traj.inputs.first().map_or(0, |u| u.len());
    let (mut vx, mut vxx) = cost.terminal_derivatives(traj.final_state());
    let mut feedforward = vec![DVector::zeros(m); n_steps];
    let mut feedback = vec![DMatrix::zeros(m, vx.len()); n_steps];
    let mut linear_term = T::zero();
    let mut quadratic_term = T::zero();
    let half = T::lit(0.5);

    for k in (0..n_steps).rev() {
        let jac = &jacobians[k];
        let (lx, lu, lxx, luu) = cost.running_derivatives(&traj.states[k], &traj.inputs[k]);
        let fxt = jac.fx.transpose();
        let fut = jac.fu.transpose();
        let vxx_fx = &vxx * &jac.fx;
        let vxx_fu = &vxx * &jac.fu;

        let mut qx = lx + &fxt * &vx;
        let mut qu = lu + &fut * &vx;
        let mut qxx = lxx + &fxt * &vxx_fx;
        let mut quu = luu + &fut * &vxx_fu;
        let mut qux = &fut * &vxx_fx;

        for es in &jac.events {
            if let Some(tc) = cost.transition_cost(es.transition) {
                let g = tc.gradient(&es.x_pre);
                let h = tc.hessian();
                let dxt = es.dx.transpose();
                let dut = es.du.transpose();
                qx += &dxt * &g;
                qu += &dut * &g;
                qxx += &dxt * &h * &es.dx;
                quu += &dut * &h * &es.du;
                qux += &dut * &h * &es.dx;
            }
        }

        let quu = (&quu + quu.transpose()) * half;
        let mut quu_reg = quu.clone();
        for i in 0..m {
            quu_reg[(i, i)] += regularization;
        }
        let chol = quu_reg.cholesky().ok_or(SolverError::NonPositiveDefinite {
            step: k,
            regularization: regularization.to_f64_lossy(),
        })?;
        let uff = -chol.solve(&qu);
        let gain = -chol.solve(&qux);
        if !uff.iter().chain(gain.iter()).all(|v| v.is_finite()) {
            return Err(SolverError::NonPositiveDefinite {
                step: k,
                regularization: regularization.to_f64_lossy(),
            });
        }

        linear_term += uff.dot(&qu);
        quadratic_term += uff.dot(&(&quu * &uff));

        let kt = gain.transpose();
        let quxt = qux.transpose();
        vx = qx + &kt * (&quu * &uff) + &kt * &qu + &quxt * &uff;
        let vxx_new = qxx + &kt * &quu * &gain + &kt * &qux + &quxt * &gain;
        vxx = (&vxx_new + vxx_new.transpose()) * half;

        feedforward[k] = uff;
        feedback[k] = gain;
    }

    Ok(GainSchedule {
        feedforward,
        feedback,
        linear_term,
        quadratic_term,
    })
}
