//! Dormand–Prince 5(4) stage computation, error estimate and dense output.

use nalgebra::DVector;

use crate::Scalar;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// 5th-order weights; equal to the last row of A (FSAL).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

// b5 - b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// Shampine's 4th-order continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Continuous interpolant of one accepted step.
#[derive(Clone, Debug)]
pub struct DenseSegment<T: Scalar> {
    pub t0: T,
    pub h: T,
    cont: [DVector<T>; 5],
}

impl<T: Scalar> DenseSegment<T> {
    pub fn t_end(&self) -> T {
        self.t0 + self.h
    }

    pub fn eval(&self, t: T) -> DVector<T> {
        let theta = if self.h == T::zero() {
            T::zero()
        } else {
            (t - self.t0) / self.h
        };
        let theta1 = T::one() - theta;
        let [c0, c1, c2, c3, c4] = &self.cont;
        let inner = c3 + c4 * theta1;
        let inner = c2 + inner * theta;
        let inner = c1 + inner * theta1;
        c0 + inner * theta
    }
}

pub struct StageResult<T: Scalar> {
    pub x_new: DVector<T>,
    /// Weighted RMS error; the step is acceptable when `<= 1`.
    pub error: T,
    pub dense: DenseSegment<T>,
}

/// One Dormand–Prince step of size `h` (may be negative) from `(t, x)`.
pub fn attempt<T, F>(f: &F, t: T, x: &DVector<T>, h: T, rel_tol: T, abs_tol: T) -> StageResult<T>
where
    T: Scalar,
    F: Fn(T, &DVector<T>) -> DVector<T>,
{
    let mut k: Vec<DVector<T>> = Vec::with_capacity(7);
    k.push(f(t, x));
    for s in 1..7 {
        let mut xs = x.clone();
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                xs.axpy(h * T::lit(a), kj, T::one());
            }
        }
        k.push(f(t + T::lit(C[s]) * h, &xs));
    }

    let mut x_new = x.clone();
    let mut err = DVector::zeros(x.len());
    let mut dsum = DVector::zeros(x.len());
    for s in 0..7 {
        if B[s] != 0.0 {
            x_new.axpy(h * T::lit(B[s]), &k[s], T::one());
        }
        if E[s] != 0.0 {
            err.axpy(h * T::lit(E[s]), &k[s], T::one());
        }
        if D[s] != 0.0 {
            dsum.axpy(h * T::lit(D[s]), &k[s], T::one());
        }
    }

    let n = T::from_usize(x.len().max(1)).unwrap_or_else(T::one);
    let mut acc = T::zero();
    for i in 0..x.len() {
        let scale = abs_tol + rel_tol * x[i].abs().max(x_new[i].abs());
        let r = err[i] / scale;
        acc += r * r;
    }
    let error = (acc / n).sqrt();

    let ydiff = &x_new - x;
    let bspl = &k[0] * h - &ydiff;
    let c3 = &ydiff - &k[6] * h - &bspl;
    let dense = DenseSegment {
        t0: t,
        h,
        cont: [x.clone(), ydiff, bspl, c3, dsum],
    };
    StageResult {
        x_new,
        error: if error.is_finite() { error } else { T::lit(f64::INFINITY) },
        dense,
    }
}

/// Step-size factor from an error estimate (order 5 controller).
pub fn step_factor<T: Scalar>(error: T) -> T {
    if error == T::zero() {
        return T::lit(5.0);
    }
    let fac = T::lit(0.9) * error.powf(T::lit(-0.2));
    fac.max(T::lit(0.2)).min(T::lit(5.0))
}
