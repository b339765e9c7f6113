use nalgebra::{DMatrix, DVector};

use crate::model::TransitionId;
use crate::Scalar;

/// Quadratic cost charged at the pre-event state of every occurrence of one
/// transition: `offset + (x − target)ᵀ W (x − target)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionCost<T: Scalar> {
    pub transition: TransitionId,
    pub weight: DMatrix<T>,
    pub target: DVector<T>,
    pub offset: T,
}

impl<T: Scalar> TransitionCost<T> {
    pub fn value(&self, x: &DVector<T>) -> T {
        let e = x - &self.target;
        self.offset + e.dot(&(&self.weight * &e))
    }

    pub fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        let e = x - &self.target;
        (&self.weight + self.weight.transpose()) * e
    }

    pub fn hessian(&self) -> DMatrix<T> {
        &self.weight + self.weight.transpose()
    }
}

/// Runtime, terminal and per-transition quadratic costs:
///
/// `J = (x_N − x_des)ᵀ Q_N (x_N − x_des) + Σ_k [uₖᵀ R uₖ + (xₖ − x_des)ᵀ Q (xₖ − x_des)]
///      + Σ_events J_{N_j}(x_pre)`
///
/// No factor ½ is applied to any term.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModel<T: Scalar> {
    pub q_terminal: DMatrix<T>,
    pub x_des: DVector<T>,
    pub r_input: DMatrix<T>,
    pub q_running: DMatrix<T>,
    pub transition_costs: Vec<TransitionCost<T>>,
}

impl<T: Scalar> CostModel<T> {
    /// Input-only runtime cost with a terminal target.
    pub fn new(q_terminal: DMatrix<T>, x_des: DVector<T>, r_input: DMatrix<T>) -> Self {
        let n = x_des.len();
        Self {
            q_terminal,
            x_des,
            r_input,
            q_running: DMatrix::zeros(n, n),
            transition_costs: Vec::new(),
        }
    }

    pub fn with_running_state_cost(mut self, q_running: DMatrix<T>) -> Self {
        self.q_running = q_running;
        self
    }

    pub fn with_transition_cost(mut self, cost: TransitionCost<T>) -> Self {
        self.transition_costs.push(cost);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.x_des.len();
        if self.q_terminal.shape() != (n, n) || self.q_running.shape() != (n, n) {
            return Err(format!("state weights must be {n}x{n}"));
        }
        if !self.r_input.is_square() {
            return Err("input weight must be square".into());
        }
        let sym = |m: &DMatrix<T>| (m - m.transpose()).amax() <= T::lit(1e-12) * (T::one() + m.amax());
        if !sym(&self.q_terminal) || !sym(&self.r_input) || !sym(&self.q_running) {
            return Err("cost weights must be symmetric".into());
        }
        if self.r_input.nrows() > 0 && self.r_input.clone().cholesky().is_none() {
            return Err("input weight must be positive definite".into());
        }
        let eig = self.q_terminal.clone().symmetric_eigenvalues();
        if eig.iter().any(|&l| l < -T::lit(1e-12) * (T::one() + self.q_terminal.amax())) {
            return Err("terminal weight must be positive semidefinite".into());
        }
        Ok(())
    }

    pub fn running(&self, x: &DVector<T>, u: &DVector<T>) -> T {
        let e = x - &self.x_des;
        u.dot(&(&self.r_input * u)) + e.dot(&(&self.q_running * &e))
    }

    pub fn terminal(&self, x: &DVector<T>) -> T {
        let e = x - &self.x_des;
        e.dot(&(&self.q_terminal * &e))
    }

    pub fn transition_cost(&self, tr: TransitionId) -> Option<&TransitionCost<T>> {
        self.transition_costs.iter().find(|c| c.transition == tr)
    }

    /// `(J_x, J_u, J_xx, J_uu)`; `J_ux` is identically zero.
    pub fn running_derivatives(
        &self,
        x: &DVector<T>,
        u: &DVector<T>,
    ) -> (DVector<T>, DVector<T>, DMatrix<T>, DMatrix<T>) {
        let two = T::lit(2.0);
        let e = x - &self.x_des;
        (
            &self.q_running * e * two,
            &self.r_input * u * two,
            &self.q_running * two,
            &self.r_input * two,
        )
    }

    pub fn terminal_derivatives(&self, x: &DVector<T>) -> (DVector<T>, DMatrix<T>) {
        let two = T::lit(2.0);
        let e = x - &self.x_des;
        (&self.q_terminal * e * two, &self.q_terminal * two)
    }
}
