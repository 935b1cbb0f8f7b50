//! Townes ground state, the correction profile ρ and the linearized operators.

mod sector;
mod shooting;

pub use sector::{OperatorKind, SectorOperator};
pub use shooting::{shoot_peak, solve_ground_state};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::profile::RadialProfile;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default angular resolution for [`compute_iq`].
pub const DEFAULT_N_THETA: usize = 256;
/// Default window for [`fit_asymptotic_cq`].
pub const DEFAULT_CQ_WINDOW: (f64, f64) = (8.0, 16.0);

/// Ground state, ρ and every scalar derived from them.
#[derive(Debug, Clone)]
pub struct GroundStateData {
    pub q: RadialProfile,
    pub rho: RadialProfile,
    pub scalars: GroundStateScalars,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateScalars {
    pub c_q: f64,
    pub i_q: f64,
    pub rho_dot_q: f64,
    pub mass_q: f64,
    pub grad_q_sq: f64,
    pub quartic_q: f64,
    pub q_at_0: f64,
}

impl GroundStateData {
    /// Solves for `Q` and `ρ` on `grid` and evaluates all constants.
    pub fn compute(grid: &RadialGrid, tol: f64) -> Result<Self> {
        let q = solve_ground_state(grid, tol)?;
        Self::from_profile(q)
    }

    pub fn from_profile(q: RadialProfile) -> Result<Self> {
        let rho = solve_rho(&q)?.profile;
        let w = q.grid().area_weights();
        let (mut mass, mut grad, mut quartic) = (0.0, 0.0, 0.0);
        for ((wi, v), s) in w.iter().zip(q.values()).zip(q.slopes()) {
            mass += wi * v * v;
            grad += wi * s * s;
            quartic += wi * v.powi(4);
        }
        let scalars = GroundStateScalars {
            c_q: fit_asymptotic_cq(&q, DEFAULT_CQ_WINDOW)?,
            i_q: compute_iq(&q, DEFAULT_N_THETA),
            rho_dot_q: rho.inner(&q),
            mass_q: mass,
            grad_q_sq: grad,
            quartic_q: quartic,
            q_at_0: q.values()[0],
        };
        Ok(Self { q, rho, scalars })
    }

    /// Pohozaev defects `(grad − mass)/mass`, `(quartic − 2 mass)/mass`, `E(Q)/mass`.
    pub fn pohozaev_defects(&self) -> [f64; 3] {
        let s = &self.scalars;
        [
            (s.grad_q_sq - s.mass_q) / s.mass_q,
            (s.quartic_q - 2.0 * s.mass_q) / s.mass_q,
            (0.5 * s.grad_q_sq - 0.25 * s.quartic_q) / s.mass_q,
        ]
    }

    /// `ΛQ = Q + r Q'` at the nodes.
    pub fn lambda_q(&self) -> Vec<f64> {
        let g = self.q.grid();
        self.q.values().iter().zip(self.q.slopes()).enumerate().map(|(i, (v, s))| v + g.r(i) * s).collect()
    }
}

/// Least-squares fit of `c` in `Q(r) ≈ (c + d/r) r^{-1/2} e^{-r}` over `window`, in relative error.
///
/// The `d/r` column absorbs the known `r^{-3/2} e^{-r}` remainder, which a one-term fit
/// would otherwise fold into `c` with a window-dependent bias.
pub fn fit_asymptotic_cq(q: &RadialProfile, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let grid = q.grid();
    if !(lo >= 5.0 && lo < hi && hi <= grid.r_max() - 2.0) {
        return Err(Error::invalid(format!("fit window [{lo}, {hi}] must satisfy 5 <= lo < hi <= r_max - 2")));
    }
    let mut s = [0.0; 5];
    let mut nodes = 0;
    for (i, &v) in q.values().iter().enumerate() {
        let r = grid.r(i);
        if r < lo || r > hi {
            continue;
        }
        nodes += 1;
        let y = v * r.sqrt() * r.exp();
        let x = 1.0 / r;
        s[0] += 1.0;
        s[1] += x;
        s[2] += x * x;
        s[3] += y;
        s[4] += x * y;
    }
    if nodes < 50 {
        return Err(Error::WindowTooSmall { nodes, required: 50 });
    }
    let det = s[0] * s[2] - s[1] * s[1];
    Ok((s[3] * s[2] - s[1] * s[4]) / det)
}

/// `I_Q = ∫ Q³(x) e^{x₁} dx` by a tensor rule: Simpson in r, trapezoid in θ.
pub fn compute_iq(q: &RadialProfile, n_theta: usize) -> f64 {
    compute_iq_along(q, n_theta, 0.0)
}

/// Same integral with `e^{x·ω}` for the unit direction at angle `phi`.
pub fn compute_iq_along(q: &RadialProfile, n_theta: usize, phi: f64) -> f64 {
    let grid = q.grid();
    let w = grid.area_weights();
    let dtheta = 2.0 * PI / n_theta as f64;
    q.values()
        .iter()
        .zip(&w)
        .enumerate()
        .map(|(i, (v, wi))| {
            let r = grid.r(i);
            let angular: f64 = (0..n_theta).map(|j| (r * (j as f64 * dtheta - phi).cos()).exp()).sum::<f64>() / n_theta as f64;
            wi * v * v * v * angular
        })
        .sum()
}

/// Result of [`solve_rho`].
#[derive(Debug, Clone)]
pub struct RhoSolution {
    pub profile: RadialProfile,
    /// Weighted L² residual of `L₊ρ − r²Q/4`.
    pub residual: f64,
    /// Measured constant in `|ρ| ≤ C (1 + r³) Q`.
    pub growth_constant: f64,
}

/// Solves `L₊ρ = r² Q / 4` in the radial sector.
pub fn solve_rho(q: &RadialProfile) -> Result<RhoSolution> {
    let grid = *q.grid();
    let op = SectorOperator::new(q, 0, OperatorKind::Plus);
    let rhs_full: Vec<f64> = q.values().iter().enumerate().map(|(i, v)| 0.25 * grid.r(i).powi(2) * v).collect();
    let rhs = op.restrict(&rhs_full);
    let sol = op.solve(&rhs)?;
    let applied = op.apply(&sol);
    let diff: Vec<f64> = applied.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let residual = op.norm(&diff);
    let values = op.extend(&sol, grid.len());
    let profile = RadialProfile::from_values(grid, values)?;
    let growth_constant = profile
        .values()
        .iter()
        .zip(q.values())
        .enumerate()
        .filter(|(_, (_, &qv))| qv > 1e-10)
        .map(|(i, (rv, qv))| rv.abs() / ((1.0 + grid.r(i).powi(3)) * qv))
        .fold(0.0, f64::max);
    Ok(RhoSolution { profile, residual, growth_constant })
}

/// Weighted residuals of the five null-space relations, in the order
/// `L₋Q`, `L₊ΛQ + 2Q`, `L₋(r²Q) + 4ΛQ`, `L₊Q'` (m = 1), `L₋(rQ) + 2Q'` (m = 1).
pub fn null_space_residuals(gs: &GroundStateData) -> [(&'static str, f64); 5] {
    let q = &gs.q;
    let grid = q.grid();
    let qv = q.values();
    let qp = q.slopes();
    let lq = gs.lambda_q();
    let r: Vec<f64> = grid.nodes();
    let residual = |m: usize, kind: OperatorKind, u: Vec<f64>, target: Vec<f64>| -> f64 {
        let op = SectorOperator::new(q, m, kind);
        let au = op.apply(&op.restrict(&u));
        let t = op.restrict(&target);
        let d: Vec<f64> = au.iter().zip(&t).map(|(a, b)| a - b).collect();
        op.norm(&d)
    };
    let zeros = vec![0.0; qv.len()];
    [
        ("L-Q", residual(0, OperatorKind::Minus, qv.to_vec(), zeros.clone())),
        ("L+LambdaQ+2Q", residual(0, OperatorKind::Plus, lq.clone(), qv.iter().map(|v| -2.0 * v).collect())),
        (
            "L-(r^2Q)+4LambdaQ",
            residual(0, OperatorKind::Minus, r.iter().zip(qv).map(|(r, v)| r * r * v).collect(), lq.iter().map(|v| -4.0 * v).collect()),
        ),
        ("L+dQ", residual(1, OperatorKind::Plus, qp.to_vec(), zeros)),
        ("L-(rQ)+2dQ", residual(1, OperatorKind::Minus, r.iter().zip(qv).map(|(r, v)| r * v).collect(), qp.iter().map(|v| -2.0 * v).collect())),
    ]
}

/// Minimal eigenvalues of one angular sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSpectrum {
    pub harmonic: usize,
    pub kind: OperatorKind,
    pub constrained_min: f64,
    pub unconstrained_min: f64,
}

/// Constraint directions of the coercivity estimate, projected onto sector `m`.
pub fn coercivity_constraints(gs: &GroundStateData, m: usize, kind: OperatorKind) -> Vec<Vec<f64>> {
    let grid = gs.q.grid();
    let qv = gs.q.values();
    let nodes = grid.nodes();
    match (m, kind) {
        (0, OperatorKind::Plus) => vec![qv.to_vec(), nodes.iter().zip(qv).map(|(r, v)| r * r * v).collect()],
        (0, OperatorKind::Minus) => vec![gs.rho.values().to_vec()],
        (1, OperatorKind::Plus) => vec![nodes.iter().zip(qv).map(|(r, v)| r * v).collect()],
        (1, OperatorKind::Minus) => vec![gs.q.slopes().to_vec()],
        _ => Vec::new(),
    }
}

/// Constrained and unconstrained minimal eigenvalues of `L±` for `m = 0..=m_max`.
pub fn coercivity_spectrum(gs: &GroundStateData, m_max: usize) -> Result<Vec<SectorSpectrum>> {
    if m_max < 2 {
        return Err(Error::invalid("m_max must be at least 2"));
    }
    let jobs: Vec<(usize, OperatorKind)> =
        (0..=m_max).flat_map(|m| [(m, OperatorKind::Plus), (m, OperatorKind::Minus)]).collect();
    use rayon::prelude::*;
    Ok(jobs
        .par_iter()
        .map(|&(m, kind)| {
            let op = SectorOperator::new(&gs.q, m, kind);
            let cons: Vec<Vec<f64>> = coercivity_constraints(gs, m, kind).iter().map(|c| op.restrict(c)).collect();
            SectorSpectrum {
                harmonic: m,
                kind,
                constrained_min: op.min_eigenvalue(&cons, 1e-13),
                unconstrained_min: op.min_eigenvalue(&[], 1e-13),
            }
        })
        .collect())
}

/// The coercivity constant: minimum constrained eigenvalue over all sectors.
pub fn coercivity_constant(spectrum: &[SectorSpectrum]) -> f64 {
    spectrum.iter().map(|s| s.constrained_min).fold(f64::INFINITY, f64::min)
}
