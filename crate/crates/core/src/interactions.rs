//! Overlap integrals between displaced ground states and the constants `κ`, `c_a`, `a(z)`.

use crate::ansatz::{self, AnsatzGrid, ParamState};
use crate::error::{Error, Result};
use crate::groundstate::{GroundStateData, GroundStateScalars};
use crate::profile::RadialProfile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `κ = |1 − e^{2πi/K}|`, the distance between neighbouring unit K-gon vertices.
pub fn kappa_of(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!("K must be at least 2, got {k}")));
    }
    Ok((2.0 - 2.0 * (2.0 * PI / k as f64).cos()).sqrt())
}

/// Geometry of the symmetric K-bubble configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub k: usize,
    pub kappa: f64,
    pub c_a: f64,
    pub unit_vectors: Vec<[f64; 2]>,
}

impl GeometryConstants {
    pub fn new(k: usize, gs: &GroundStateScalars) -> Result<Self> {
        let kappa = kappa_of(k)?;
        let neighbours = if k == 2 { 4.0 } else { 2.0 };
        let c_a = kappa.sqrt() * gs.c_q * gs.i_q / (neighbours * gs.rho_dot_q);
        let unit_vectors = (0..k)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / k as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        Ok(Self { k, kappa, c_a, unit_vectors })
    }

    /// `a(z) = −c_a z^{1/2} e^{−κz}`
    pub fn a_of_z(&self, z: f64) -> f64 {
        -self.c_a * z.sqrt() * (-self.kappa * z).exp()
    }

    /// `a'(z) = −c_a (½ z^{−1/2} − κ z^{1/2}) e^{−κz}`
    pub fn a_prime_of_z(&self, z: f64) -> f64 {
        -self.c_a * (0.5 / z.sqrt() - self.kappa * z.sqrt()) * (-self.kappa * z).exp()
    }

    /// Centre of bubble `k` (0-based) at separation `z`.
    pub fn center(&self, k: usize, z: f64) -> [f64; 2] {
        let e = self.unit_vectors[k];
        [z * e[0], z * e[1]]
    }
}

/// Uniform Cartesian quadrature on `[−L, L]²` with nodes at integer multiples of `spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianQuadrature {
    pub half_width: f64,
    pub spacing: f64,
}

impl CartesianQuadrature {
    /// Box `L = r_max/√2` of the profile grid.
    pub fn for_profile(q: &RadialProfile, spacing: f64) -> Self {
        Self { half_width: q.grid().r_max() / 2f64.sqrt(), spacing }
    }

    /// Trapezoid sum of `f` over the node lattice, rows in parallel, fixed summation order.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let m = (self.half_width / self.spacing).floor() as i64;
        let h = self.spacing;
        let rows: Vec<f64> = (-m..=m)
            .into_par_iter()
            .map(|i| {
                let x = i as f64 * h;
                let wi = if i.abs() == m { 0.5 } else { 1.0 };
                let s: f64 = (-m..=m)
                    .map(|j| {
                        let wj = if j.abs() == m { 0.5 } else { 1.0 };
                        wj * f(x, j as f64 * h)
                    })
                    .sum();
                wi * s
            })
            .collect();
        rows.iter().sum::<f64>() * h * h
    }
}

/// Weight `1 + |y|^q` for `q > 0`; `q = 0` means no weight, so the plain overlap is recovered.
fn moment_weight(r: f64, q: u32) -> f64 {
    if q == 0 {
        1.0
    } else {
        1.0 + r.powi(q as i32)
    }
}

/// `∫ (1 + |y|^q) Q³(y) Q(y − ω) dy`
pub fn overlap_two(q: &RadialProfile, omega: [f64; 2], moment_q: u32, quad: &CartesianQuadrature) -> Result<f64> {
    let norm = omega[0].hypot(omega[1]);
    let max = q.grid().r_max() / 2.0;
    if norm > max {
        return Err(Error::OmegaOutOfRange { norm, max });
    }
    Ok(quad.integrate(|x, y| {
        let r = x.hypot(y);
        let a = q.eval(r);
        if a == 0.0 {
            return 0.0;
        }
        moment_weight(r, moment_q) * a * a * a * q.eval((x - omega[0]).hypot(y - omega[1]))
    }))
}

/// `∫ (1 + |y|^q) Q²(y) Q(y − ω) Q(y − ω̃) dy`
pub fn overlap_three(
    q: &RadialProfile,
    omega: [f64; 2],
    omega2: [f64; 2],
    moment_q: u32,
    quad: &CartesianQuadrature,
) -> Result<f64> {
    let max = q.grid().r_max() / 2.0;
    for w in [omega, omega2] {
        let norm = w[0].hypot(w[1]);
        if norm > max {
            return Err(Error::OmegaOutOfRange { norm, max });
        }
    }
    Ok(quad.integrate(|x, y| {
        let r = x.hypot(y);
        let a = q.eval(r);
        if a == 0.0 {
            return 0.0;
        }
        moment_weight(r, moment_q)
            * a
            * a
            * q.eval((x - omega[0]).hypot(y - omega[1]))
            * q.eval((x - omega2[0]).hypot(y - omega2[1]))
    }))
}

/// Leading-order law `c_Q I_Q |ω|^{−1/2} e^{−|ω|}`.
pub fn asymptotic_overlap(gs: &GroundStateScalars, omega_norm: f64) -> Result<f64> {
    if !(omega_norm >= 5.0) {
        return Err(Error::invalid(format!("asymptotic law needs |omega| >= 5, got {omega_norm}")));
    }
    Ok(gs.c_q * gs.i_q * omega_norm.powf(-0.5) * (-omega_norm).exp())
}

/// One row of an interaction sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega_norm: f64,
    pub quadrature: f64,
    pub asymptotic: f64,
    pub ratio: f64,
}

/// Overlap quadrature against the asymptotic law along `ω = (|ω|, 0)`.
pub fn interaction_sweep(gs: &GroundStateData, norms: &[f64], quad: &CartesianQuadrature) -> Result<Vec<SweepRow>> {
    norms
        .iter()
        .map(|&w| {
            let quadrature = overlap_two(&gs.q, [w, 0.0], 0, quad)?;
            let asymptotic = asymptotic_overlap(&gs.scalars, w)?;
            Ok(SweepRow { omega_norm: w, quadrature, asymptotic, ratio: quadrature / asymptotic })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Fitted exponent `p` in `|quad − asym| ≈ C |ω|^p e^{−|ω|}` over a sweep.
pub fn residual_exponent(rows: &[SweepRow]) -> f64 {
    let x: Vec<f64> = rows.iter().map(|r| r.omega_norm).collect();
    let y: Vec<f64> = rows.iter().map(|r| (r.quadrature - r.asymptotic) * r.omega_norm.exp()).collect();
    log_log_slope(&x, &y)
}

/// `⟨G₁, iQ_a⟩ = ∫ Im(G₁) Q_a` with `G₁` the interaction field seen from bubble 1.
pub fn projection_g1_iqa(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, grid: &AnsatzGrid) -> Result<f64> {
    let kz = consts.kappa * p.z;
    if kz > gs.q.grid().r_max() {
        return Err(Error::UnresolvedBubbles { kz, r_max: gs.q.grid().r_max() });
    }
    let bubbles = ansatz::build_bubbles(gs, consts, p, grid)?;
    let interaction = ansatz::interaction_field(&bubbles, 0);
    let a = consts.a_of_z(p.z);
    let z1 = consts.center(0, p.z);
    let e1 = consts.unit_vectors[0];
    Ok(interaction.integrate(|x, y, f| {
        let w = [x - z1[0], y - z1[1]];
        let phase = ansatz::gamma_phase(w, p.beta, e1, p.b);
        let g = f * num_complex::Complex64::from_polar(1.0, -phase);
        let r = w[0].hypot(w[1]);
        g.im * (gs.q.eval(r) + a * gs.rho.eval(r))
    }))
}

/// Leading term `−κ c_a ⟨ρ,Q⟩ b z^{3/2} e^{−κz}` of [`projection_g1_iqa`].
pub fn projection_leading(gs: &GroundStateScalars, consts: &GeometryConstants, p: &ParamState) -> f64 {
    -consts.kappa * consts.c_a * gs.rho_dot_q * p.b * p.z.powf(1.5) * (-consts.kappa * p.z).exp()
}
