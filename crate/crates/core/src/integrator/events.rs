//! Event localization on a continuous interpolant.

use nalgebra::DVector;

use super::dopri::DenseSegment;
use super::{IntegratorConfig, IntegratorError};
use crate::model::{HybridSystem, TransitionId};
use crate::Scalar;

/// Continuous state over `[t_start, t_end]`.
pub trait DenseOutput<T: Scalar> {
    fn t_start(&self) -> T;
    fn t_end(&self) -> T;
    fn state_at(&self, t: T) -> DVector<T>;
}

impl<T: Scalar> DenseOutput<T> for DenseSegment<T> {
    fn t_start(&self) -> T {
        self.t0
    }

    fn t_end(&self) -> T {
        self.t_end()
    }

    fn state_at(&self, t: T) -> DVector<T> {
        self.eval(t)
    }
}

/// Straight line between two states; handy for tests and tools.
#[derive(Clone, Debug)]
pub struct LinearInterpolant<T: Scalar> {
    pub t0: T,
    pub t1: T,
    pub x0: DVector<T>,
    pub x1: DVector<T>,
}

impl<T: Scalar> DenseOutput<T> for LinearInterpolant<T> {
    fn t_start(&self) -> T {
        self.t0
    }

    fn t_end(&self) -> T {
        self.t1
    }

    fn state_at(&self, t: T) -> DVector<T> {
        let s = (t - self.t0) / (self.t1 - self.t0);
        &self.x0 + (&self.x1 - &self.x0) * s
    }
}

/// True when `g` crosses from positive to non-positive over the interval.
/// A start exactly on the guard counts only if `g` then goes strictly negative.
pub(crate) fn is_crossing<T: Scalar>(g_a: T, g_b: T) -> bool {
    (g_a > T::zero() && g_b <= T::zero()) || (g_a == T::zero() && g_b < T::zero())
}

/// Root of a scalar function on `[a, b]` with `g(a) >= 0 >= g(b)`, by
/// Illinois-modified regula falsi with a bisection fallback.
pub(crate) fn find_root<T, G>(g: G, a: T, b: T, g_tol: T, time_tol: T) -> T
where
    T: Scalar,
    G: Fn(T) -> T,
{
    let (mut a, mut b) = (a, b);
    let (mut ga, mut gb) = (g(a), g(b));
    if ga == T::zero() {
        return a;
    }
    let half = T::lit(0.5);
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        if width.abs() <= time_tol {
            break;
        }
        let mut c = a - ga * width / (gb - ga);
        let lo = a + width * T::lit(1e-3);
        let hi = b - width * T::lit(1e-3);
        if !c.is_finite() || (c - lo) * (c - hi) > T::zero() {
            c = a + width * half;
        }
        let gc = g(c);
        if gc.abs() <= g_tol {
            return c;
        }
        if gc > T::zero() {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= half;
            }
            side = 1;
        } else {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= half;
            }
            side = -1;
        }
    }
    b
}

/// Locates where the guard of `tr` is reached along `dense`.
///
/// Requires a bracketed decreasing crossing; returns `(t_event, x_pre)` with
/// `x_pre` taken from the interpolant.
pub fn locate_event<T, D>(
    sys: &HybridSystem<T>,
    dense: &D,
    tr: TransitionId,
    u: &DVector<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(T, DVector<T>), IntegratorError>
where
    T: Scalar,
    D: DenseOutput<T> + ?Sized,
{
    let guard = &sys.transition(tr)?.guard;
    let (ta, tb) = (dense.t_start(), dense.t_end());
    let g = |t: T| guard.value(t, &dense.state_at(t), u);
    let (ga, gb) = (g(ta), g(tb));
    if !is_crossing(ga, gb) {
        return Err(IntegratorError::NoBracket {
            transition: tr,
            g_start: ga.to_f64_lossy(),
            g_end: gb.to_f64_lossy(),
        });
    }
    let t_event = find_root(g, ta, tb, cfg.event_tol, cfg.time_tol);
    Ok((t_event, dense.state_at(t_event)))
}
