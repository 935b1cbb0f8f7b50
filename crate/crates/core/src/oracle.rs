//! Independent reference computations used to cross-check the production solvers.

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Spectral};
use crate::groundstate::SectorOperator;
use crate::profile::RadialProfile;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Ground state obtained by spectral renormalization on a periodic 2D grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedGroundState {
    pub mass: f64,
    pub peak: f64,
    pub iterations: usize,
    /// Relative change of the last iterate.
    pub increment: f64,
}

/// Fixed-point iteration `Q ← M^{3/2} (1 − Δ)⁻¹ Q³` with the stabilizing factor
/// `M = ⟨(1 − Δ)Q, Q⟩ / ⟨Q³, Q⟩`, all in Fourier space.
pub fn spectral_renormalization(n: usize, half_width: f64, tol: f64) -> Result<RenormalizedGroundState> {
    const MAX_ITERATIONS: usize = 500;
    let sp = Spectral::new(n, half_width);
    let k = sp.wavenumbers().to_vec();
    let symbol: Vec<f64> = (0..n * n).map(|idx| 1.0 + k[idx / n].powi(2) + k[idx % n].powi(2)).collect();
    let mut u = ComplexField2D::from_fn(n, half_width, |x, y| Complex64::new(2.0 * (-(x * x + y * y) / 2.0).exp(), 0.0))?;
    for it in 1..=MAX_ITERATIONS {
        let mut hat = u.data().to_vec();
        sp.fft().forward(&mut hat);
        let mut cube: Vec<Complex64> = u.data().iter().map(|v| v * v.norm_sqr()).collect();
        sp.fft().forward(&mut cube);
        let (mut num, mut den) = (0.0, 0.0);
        for ((h, c), s) in hat.iter().zip(&cube).zip(&symbol) {
            num += s * h.norm_sqr();
            den += (c * h.conj()).re;
        }
        let m = num / den;
        let factor = m.powf(1.5);
        let mut next: Vec<Complex64> = cube.iter().zip(&symbol).map(|(c, s)| c * (factor / s)).collect();
        sp.fft().inverse(&mut next);
        for v in next.iter_mut() {
            v.im = 0.0;
        }
        let next = ComplexField2D::from_data(n, half_width, next)?;
        let increment = next.sub(&u).max_abs() / next.max_abs();
        u = next;
        if increment < tol {
            return Ok(RenormalizedGroundState { mass: u.mass(), peak: u.max_abs(), iterations: it, increment });
        }
    }
    Err(Error::NonConvergence { what: "spectral renormalization".into(), iterations: MAX_ITERATIONS })
}

/// Solves `A x = f` for a sector operator by conjugate gradients in its weighted inner product.
///
/// `A` may carry a few negative eigenvalues; plain CG still converges when no Lanczos
/// breakdown occurs, which is checked through the residual.
pub fn conjugate_gradient(op: &SectorOperator, f: &[f64], tol: f64, max_iterations: usize) -> Result<Vec<f64>> {
    let dot = |a: &[f64], b: &[f64]| op.inner(a, b);
    let mut x = vec![0.0; f.len()];
    let mut r = f.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * tol * rr;
    for _ in 0..max_iterations {
        if rr <= target {
            return Ok(x);
        }
        let ap = op.apply(&p);
        let pap = dot(&p, &ap);
        if pap == 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rr / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr <= target {
        Ok(x)
    } else {
        Err(Error::NonConvergence { what: "conjugate gradients".into(), iterations: max_iterations })
    }
}

/// Eigenvalues of a sector operator from a dense symmetric eigensolve, ascending.
pub fn dense_eigenvalues(op: &SectorOperator) -> Vec<f64> {
    let n = op.dim();
    let m = DMatrix::from_row_slice(n, n, &op.symmetric_dense());
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `∫ Q³(x) e^{x·ω} dx` for a unit vector `ω` by the trapezoid rule on `[−r_max, r_max]²`.
pub fn cartesian_iq(q: &RadialProfile, n: usize, omega: [f64; 2]) -> f64 {
    let r_max = q.grid().r_max();
    let h = 2.0 * r_max / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let x = -r_max + i as f64 * h;
        let wx = if i == 0 || i == n { 0.5 } else { 1.0 };
        for j in 0..=n {
            let y = -r_max + j as f64 * h;
            let r = x.hypot(y);
            if r >= r_max {
                continue;
            }
            let wy = if j == 0 || j == n { 0.5 } else { 1.0 };
            total += wx * wy * q.eval(r).powi(3) * (x * omega[0] + y * omega[1]).exp();
        }
    }
    total * h * h
}
