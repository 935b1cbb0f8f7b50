//! Dormand–Prince 5(4) with the classical fourth-order continuous extension.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its dense-output polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn end(&self) -> [f64; N] {
        let mut y = self.rc[0];
        for (yi, di) in y.iter_mut().zip(&self.rc[1]) {
            *yi += di;
        }
        y
    }

    /// Whether `t` lies in the closed step interval.
    pub fn covers(&self, t: f64) -> bool {
        let (a, b) = if self.h > 0.0 { (self.t0, self.t1()) } else { (self.t1(), self.t0) };
        t >= a && t <= b
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.rc;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// Adaptive Dormand–Prince stepper; the direction of integration follows the sign of `t_end − t0`.
pub struct Dopri5<F, const N: usize> {
    f: F,
    tol: Tolerances,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
}

impl<F: Fn(f64, &[f64; N]) -> [f64; N], const N: usize> Dopri5<F, N> {
    pub fn new(f: F, t0: f64, y0: [f64; N], h0: f64, tol: Tolerances) -> Self {
        let k1 = f(t0, &y0);
        Self { f, tol, t: t0, y: y0, k1, h: h0 }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> [f64; N] {
        self.y
    }

    /// Advances by one accepted step, never overshooting `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseStep<N>> {
        let dir = (t_end - self.t).signum();
        let mut h = self.h.abs().min((t_end - self.t).abs()) * dir;
        let f = &self.f;
        loop {
            if h.abs() < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepUnderflow { s: self.t });
            }
            let mut k = [[0.0; N]; 7];
            k[0] = self.k1;
            let mut ynew = self.y;
            for s in 1..7 {
                let mut ys = self.y;
                for i in 0..N {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += A[s][j] * k[j][i];
                    }
                    ys[i] += h * acc;
                }
                k[s] = f(self.t + C[s] * h, &ys);
                if s == 6 {
                    ynew = ys;
                }
            }
            // k[6] is evaluated at the fifth-order solution (FSAL)
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                let sc = self.tol.atol + self.tol.rtol * self.y[i].abs().max(ynew[i].abs());
                err += (h * e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                continue;
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            if err <= 1.0 {
                let mut rc = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = ynew[i] - self.y[i];
                    let bspl = h * k[0][i] - dy;
                    rc[0][i] = self.y[i];
                    rc[1][i] = dy;
                    rc[2][i] = bspl;
                    rc[3][i] = dy - h * k[6][i] - bspl;
                    let mut d = 0.0;
                    for j in 0..7 {
                        d += D[j] * k[j][i];
                    }
                    rc[4][i] = h * d;
                }
                let step = DenseStep { t0: self.t, h, rc };
                self.t = if (t_end - self.t).abs() <= h.abs() { t_end } else { self.t + h };
                self.y = ynew;
                self.k1 = k[6];
                self.h = h * fac;
                return Ok(step);
            }
            h *= fac.min(1.0);
        }
    }
}
