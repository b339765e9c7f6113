//! Vector fields, guards and resets, plus closure-backed implementations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::Scalar;

/// Time-varying controlled vector field `F(t, x, u)` of one mode.
pub trait VectorField<T: Scalar>: Send + Sync {
    fn eval(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> DVector<T>;
}

impl<T, F> VectorField<T> for F
where
    T: Scalar,
    F: Fn(T, &DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync,
{
    fn eval(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        self(t, x, u)
    }
}

/// Scalar guard function. The guard set is `{ g(t, x, u) <= 0 }`.
///
/// Analytic derivatives are optional; [`crate::HybridSystem`] falls back to
/// central differences when they are absent.
pub trait Guard<T: Scalar>: Send + Sync {
    fn value(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> T;

    fn state_gradient(&self, _t: T, _x: &DVector<T>, _u: &DVector<T>) -> Option<DVector<T>> {
        None
    }

    fn time_derivative(&self, _t: T, _x: &DVector<T>, _u: &DVector<T>) -> Option<T> {
        None
    }
}

/// Reset map applied when a guard is reached.
pub trait Reset<T: Scalar>: Send + Sync {
    fn apply(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> DVector<T>;

    fn state_jacobian(&self, _t: T, _x: &DVector<T>, _u: &DVector<T>) -> Option<DMatrix<T>> {
        None
    }

    fn time_derivative(&self, _t: T, _x: &DVector<T>, _u: &DVector<T>) -> Option<DVector<T>> {
        None
    }
}

type ScalarFn<T> = Arc<dyn Fn(T, &DVector<T>, &DVector<T>) -> T + Send + Sync>;
type VectorFn<T> = Arc<dyn Fn(T, &DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync>;
type MatrixFn<T> = Arc<dyn Fn(T, &DVector<T>, &DVector<T>) -> DMatrix<T> + Send + Sync>;

/// Guard built from closures.
#[derive(Clone)]
pub struct FnGuard<T: Scalar> {
    value: ScalarFn<T>,
    gradient: Option<VectorFn<T>>,
    time_derivative: Option<ScalarFn<T>>,
}

impl<T: Scalar> FnGuard<T> {
    pub fn new(value: impl Fn(T, &DVector<T>, &DVector<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            time_derivative: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(T, &DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// Declares the guard time-invariant (`D_t g = 0`).
    pub fn time_invariant(mut self) -> Self {
        self.time_derivative = Some(Arc::new(|_, _, _| T::zero()));
        self
    }

    /// Guard `sign * x[index]`, with its exact gradient.
    pub fn coordinate(n: usize, index: usize, sign: T) -> Self {
        Self::new(move |_, x, _| sign * x[index])
            .with_gradient(move |_, _, _| {
                let mut g = DVector::zeros(n);
                g[index] = sign;
                g
            })
            .time_invariant()
    }
}

impl<T: Scalar> Guard<T> for FnGuard<T> {
    fn value(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> T {
        (self.value)(t, x, u)
    }

    fn state_gradient(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> Option<DVector<T>> {
        self.gradient.as_ref().map(|g| g(t, x, u))
    }

    fn time_derivative(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> Option<T> {
        self.time_derivative.as_ref().map(|g| g(t, x, u))
    }
}

/// Reset built from closures.
#[derive(Clone)]
pub struct FnReset<T: Scalar> {
    map: VectorFn<T>,
    jacobian: Option<MatrixFn<T>>,
    time_derivative: Option<VectorFn<T>>,
}

impl<T: Scalar> FnReset<T> {
    pub fn new(
        map: impl Fn(T, &DVector<T>, &DVector<T>) -> DVector<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            map: Arc::new(map),
            jacobian: None,
            time_derivative: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(T, &DVector<T>, &DVector<T>) -> DMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn time_invariant(mut self) -> Self {
        self.time_derivative = Some(Arc::new(|_, x: &DVector<T>, _| DVector::zeros(x.len())));
        self
    }
}

impl<T: Scalar> Reset<T> for FnReset<T> {
    fn apply(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        (self.map)(t, x, u)
    }

    fn state_jacobian(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> Option<DMatrix<T>> {
        self.jacobian.as_ref().map(|j| j(t, x, u))
    }

    fn time_derivative(&self, t: T, x: &DVector<T>, u: &DVector<T>) -> Option<DVector<T>> {
        self.time_derivative.as_ref().map(|d| d(t, x, u))
    }
}

/// `R(x) = x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityReset;

impl<T: Scalar> Reset<T> for IdentityReset {
    fn apply(&self, _t: T, x: &DVector<T>, _u: &DVector<T>) -> DVector<T> {
        x.clone()
    }

    fn state_jacobian(&self, _t: T, x: &DVector<T>, _u: &DVector<T>) -> Option<DMatrix<T>> {
        Some(DMatrix::identity(x.len(), x.len()))
    }

    fn time_derivative(&self, _t: T, x: &DVector<T>, _u: &DVector<T>) -> Option<DVector<T>> {
        Some(DVector::zeros(x.len()))
    }
}

/// `R(x) = A x` for a constant matrix `A`.
#[derive(Clone, Debug)]
pub struct LinearReset<T: Scalar> {
    pub matrix: DMatrix<T>,
}

impl<T: Scalar> LinearReset<T> {
    pub fn new(matrix: DMatrix<T>) -> Self {
        Self { matrix }
    }
}

impl<T: Scalar> Reset<T> for LinearReset<T> {
    fn apply(&self, _t: T, x: &DVector<T>, _u: &DVector<T>) -> DVector<T> {
        &self.matrix * x
    }

    fn state_jacobian(&self, _t: T, _x: &DVector<T>, _u: &DVector<T>) -> Option<DMatrix<T>> {
        Some(self.matrix.clone())
    }

    fn time_derivative(&self, _t: T, x: &DVector<T>, _u: &DVector<T>) -> Option<DVector<T>> {
        Some(DVector::zeros(x.len()))
    }
}
