//! Decomposition of a field near the K-bubble ansatz and the energy functional along runs.

use crate::ansatz::{self, gamma_phase, modulation_vector, ParamState, ParamVelocity};
use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Spectral};
use crate::groundstate::GroundStateData;
use crate::interactions::GeometryConstants;
use crate::pde::{self, ConservedSnapshot, Stepper};
use crate::reduced_ode::{self, ShootingConfig};
use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Default closeness radius: relative L² distance between the field and the guessed ansatz.
pub const DEFAULT_CLOSENESS: f64 = 0.3;
const MAX_NEWTON_ITERATIONS: usize = 40;

/// Names of the five solved orthogonality pairings, in order.
pub const ORTHO_LABELS: [&str; 5] = ["|y|^2 Q", "e1.y Q", "i rho", "e1.i grad Q", "i Lambda Q"];

/// Field split into modulation parameters and a rescaled residual.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub p: ParamState,
    /// `ε(y) = λe^{−iγ}u(λy) − P(y)` on the rescaled grid `[−L/λ, L/λ)²`.
    pub epsilon: ComplexField2D,
    /// `η₁(y − z₁) = e^{−iΓ₁(y−z₁)} ε(y)`, sampled at the same nodes as `epsilon`.
    pub eta1: ComplexField2D,
    /// The ansatz `P` on the rescaled grid.
    pub ansatz: ComplexField2D,
    pub ortho_residuals: [f64; 5],
    /// `⟨η₁, e₂·yQ⟩` and `⟨η₁, e₂·i∇Q⟩`, zero by symmetry and never solved for.
    pub transverse: [f64; 2],
    pub eta1_dot_q: f64,
    pub iterations: usize,
}

impl Decomposition {
    /// `‖ε‖²_{H¹}` computed spectrally on the rescaled grid.
    pub fn eps_h1_sq(&self) -> f64 {
        self.epsilon.mass() + Spectral::for_field(&self.epsilon).grad_norm_sq(&self.epsilon)
    }
}

/// Pairings of `η₁` against the bubble-1 test functions, evaluated on the physical grid.
struct Pairings {
    ortho: [f64; 5],
    transverse: [f64; 2],
    eta1_dot_q: f64,
}

fn pairings(u: &ComplexField2D, gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState) -> Pairings {
    let n = u.n();
    let dx = u.dx();
    let l = u.half_width();
    let a = consts.a_of_z(p.z);
    let z1 = consts.center(0, p.z);
    let e1 = consts.unit_vectors[0];
    let e2 = [-e1[1], e1[0]];
    let unwind = Complex64::from_polar(p.lambda, -p.gamma);
    let rows: Vec<[f64; 8]> = u
        .data()
        .par_chunks(n)
        .enumerate()
        .map(|(i, row)| {
            let mut acc = [0.0; 8];
            let yx = (-l + i as f64 * dx) / p.lambda;
            for (j, &val) in row.iter().enumerate() {
                let yy = (-l + j as f64 * dx) / p.lambda;
                let w = [yx - z1[0], yy - z1[1]];
                let r = w[0].hypot(w[1]);
                // test functions decay like Q; skip nodes where every one of them is negligible
                if r > gs.q.grid().r_max() {
                    continue;
                }
                let big_p: Complex64 = (0..consts.k).map(|k| ansatz::bubble_value(gs, consts, p, a, k, yx, yy)).sum();
                let eps = unwind * val - big_p;
                let eta = eps * Complex64::from_polar(1.0, -gamma_phase(w, p.beta, e1, p.b));
                let (q, qs) = gs.q.eval_with_slope(r);
                let rho = gs.rho.eval(r);
                let (w1, w2) = (e1[0] * w[0] + e1[1] * w[1], e2[0] * w[0] + e2[1] * w[1]);
                let (d1, d2) = if r > 0.0 { (qs * w1 / r, qs * w2 / r) } else { (0.0, 0.0) };
                acc[0] += eta.re * r * r * q;
                acc[1] += eta.re * w1 * q;
                acc[2] += eta.im * rho;
                acc[3] += eta.im * d1;
                acc[4] += eta.im * (q + r * qs);
                acc[5] += eta.re * w2 * q;
                acc[6] += eta.im * d2;
                acc[7] += eta.re * q;
            }
            acc
        })
        .collect();
    let dy2 = (dx / p.lambda).powi(2);
    let mut total = [0.0; 8];
    for row in &rows {
        for (t, v) in total.iter_mut().zip(row) {
            *t += v;
        }
    }
    let t = total.map(|v| v * dy2);
    Pairings { ortho: [t[0], t[1], t[2], t[3], t[4]], transverse: [t[5], t[6]], eta1_dot_q: t[7] }
}

fn residual_vector(u: &ComplexField2D, gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState) -> Vector5<f64> {
    Vector5::from(pairings(u, gs, consts, p).ortho)
}

/// Relative distance `‖ε‖/‖P‖` of `u` from the ansatz at `p`, on the physical grid.
pub fn closeness_distance(u: &ComplexField2D, gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState) -> Result<f64> {
    let model = ansatz::build_physical(gs, consts, p, u.n(), u.half_width())?;
    Ok(u.sub(&model).l2_norm() / model.l2_norm())
}

/// Finite-difference steps `10⁻⁶·max(|pᵢ|, floorᵢ)` per parameter.
fn fd_steps(p: &ParamState) -> [f64; 5] {
    let floors = [1e-3, 1.0, 1.0, 1e-2, 1e-2];
    let v = p.to_array();
    std::array::from_fn(|i| 1e-6 * v[i].abs().max(floors[i]))
}

/// Newton solve of the five orthogonality conditions, starting from `p_guess`.
pub fn decompose(
    u: &ComplexField2D,
    gs: &GroundStateData,
    consts: &GeometryConstants,
    p_guess: &ParamState,
    tol: f64,
    closeness: f64,
) -> Result<Decomposition> {
    if !(tol > 0.0) {
        return Err(Error::invalid("decomposition tolerance must be positive"));
    }
    let distance = closeness_distance(u, gs, consts, p_guess)?;
    if !(distance < closeness) {
        return Err(Error::OutsideClosenessWindow { distance, delta: closeness });
    }
    let target = tol * gs.scalars.mass_q.sqrt();
    let mut p = *p_guess;
    let mut r = residual_vector(u, gs, consts, &p);
    let mut iterations = 0;
    while r.amax() > target {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(Error::NewtonStall { residual: r.amax() });
        }
        iterations += 1;
        let h = fd_steps(&p);
        let mut jac = Matrix5::<f64>::zeros();
        let columns: Vec<Vector5<f64>> = (0..5)
            .map(|j| {
                let shifted = |d: f64| {
                    let mut v = p.to_array();
                    v[j] += d;
                    residual_vector(u, gs, consts, &ParamState::from_array(v))
                };
                (shifted(h[j]) - shifted(-h[j])) / (2.0 * h[j])
            })
            .collect();
        for (j, c) in columns.iter().enumerate() {
            jac.set_column(j, c);
        }
        let step = jac.lu().solve(&(-r)).ok_or_else(|| Error::SingularSystem("orthogonality Jacobian".into()))?;
        // backtrack until the residual decreases
        let mut scale = 1.0;
        loop {
            let mut v = p.to_array();
            for (vi, si) in v.iter_mut().zip(step.iter()) {
                *vi += scale * si;
            }
            let cand = ParamState::from_array(v);
            if cand.lambda > 0.0 && cand.z > 0.0 {
                let rc = residual_vector(u, gs, consts, &cand);
                if rc.amax() < r.amax() {
                    p = cand;
                    r = rc;
                    break;
                }
            }
            scale *= 0.5;
            if scale < 1e-6 {
                return Err(Error::NewtonStall { residual: r.amax() });
            }
        }
    }
    let pr = pairings(u, gs, consts, &p);
    let grid_half = u.half_width() / p.lambda;
    let ansatz = ansatz::build_ansatz(gs, consts, &p, &ansatz::AnsatzGrid { n: u.n(), half_width: grid_half })?;
    let unwind = Complex64::from_polar(p.lambda, -p.gamma);
    let epsilon = u.relabelled(grid_half).zip_map(&ansatz, |v, big_p| unwind * v - big_p);
    let z1 = consts.center(0, p.z);
    let e1 = consts.unit_vectors[0];
    let eta1 = epsilon.map_xy(|x, y, v| v * Complex64::from_polar(1.0, -gamma_phase([x - z1[0], y - z1[1]], p.beta, e1, p.b)));
    Ok(Decomposition {
        p,
        epsilon,
        eta1,
        ansatz,
        ortho_residuals: pr.ortho,
        transverse: pr.transverse,
        eta1_dot_q: pr.eta1_dot_q,
        iterations,
    })
}

/// Values of `H`, `J` and `F = H − J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValues {
    pub h: f64,
    pub j: f64,
    pub f: f64,
    pub eps_h1_sq: f64,
}

/// Cutoff equal to 1 on `[0, 1/10]`, 0 on `[1/8, ∞)`, joined by the quintic smoothstep (C²).
pub fn cutoff(r: f64) -> f64 {
    const INNER: f64 = 0.1;
    const OUTER: f64 = 0.125;
    if r <= INNER {
        1.0
    } else if r >= OUTER {
        0.0
    } else {
        let t = (r - INNER) / (OUTER - INNER);
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// `H`, `J` and `F` of a residual `epsilon` around `ansatz` at parameters `p`.
pub fn functionals_of(
    epsilon: &ComplexField2D,
    ansatz: &ComplexField2D,
    p: &ParamState,
    consts: &GeometryConstants,
    s_proxy: f64,
) -> Result<FunctionalValues> {
    if !(s_proxy > 1.0) {
        return Err(Error::invalid(format!("s_proxy must exceed 1, got {s_proxy}")));
    }
    let sp = Spectral::for_field(epsilon);
    let (g1, g2) = sp.gradient(epsilon);
    let grad_sq = sp.grad_norm_sq(epsilon);
    let mass = epsilon.mass();
    let n = epsilon.n();
    let dx = epsilon.dx();
    let l = epsilon.half_width();
    let inv_log = 1.0 / s_proxy.ln();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = -l + i as f64 * dx;
            let mut potential = 0.0;
            let mut momentum = 0.0;
            for jj in 0..n {
                let idx = i * n + jj;
                let y = -l + jj as f64 * dx;
                let e = epsilon.data()[idx];
                let big_p = ansatz.data()[idx];
                let full = (big_p + e).norm_sqr();
                let pp = big_p.norm_sqr();
                potential += full * full - pp * pp - 4.0 * pp * (e * big_p.conj()).re;
                for k in 0..consts.k {
                    let c = consts.center(k, p.z);
                    let chi = cutoff(inv_log * (x - c[0]).hypot(y - c[1]));
                    if chi > 0.0 {
                        let along = c[0] * g1.data()[idx] + c[1] * g2.data()[idx];
                        momentum += (along * e.conj()).im * chi;
                    }
                }
            }
            (potential, momentum)
        })
        .collect();
    let (potential, momentum) = rows.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let h = 0.5 * (grad_sq + mass) - 0.25 * potential * dx * dx;
    let j = p.b * momentum * dx * dx;
    Ok(FunctionalValues { h, j, f: h - j, eps_h1_sq: mass + grad_sq })
}

pub fn functionals(dec: &Decomposition, consts: &GeometryConstants, s_proxy: f64) -> Result<FunctionalValues> {
    functionals_of(&dec.epsilon, &dec.ansatz, &dec.p, consts, s_proxy)
}

/// Minimum of `F(ε)/‖ε‖²_{H¹}` over random admissible residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub quotients: Vec<f64>,
    pub min_quotient: f64,
    /// Largest orthogonality residual among the samples, relative to `‖ε‖_{L²}`.
    pub max_ortho_residual: f64,
}

/// Random `τ_K`-symmetric residuals of `H¹` size `amplitude`, projected onto the orthogonality
/// conditions, with the quotient `F/‖ε‖²_{H¹}` for each.
pub fn coercivity_sample(
    gs: &GroundStateData,
    consts: &GeometryConstants,
    p: &ParamState,
    grid: &ansatz::AnsatzGrid,
    s_proxy: f64,
    count: usize,
    amplitude: f64,
    seed: u64,
) -> Result<CoercivityReport> {
    let big_p = ansatz::build_ansatz(gs, consts, p, grid)?;
    let directions = ortho_directions(gs, consts, p, grid)?;
    // Gram matrix of the symmetric directions against the five pairings
    let mut gram = Matrix5::<f64>::zeros();
    for (j, d) in directions.iter().enumerate() {
        gram.set_column(j, &Vector5::from(eta_pairings(gs, consts, p, d)));
    }
    let lu = gram.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quotients = Vec::with_capacity(count);
    let mut max_ortho: f64 = 0.0;
    for _ in 0..count {
        let raw = random_symmetric_field(&mut rng, consts, p, grid)?;
        let c = lu.solve(&Vector5::from(eta_pairings(gs, consts, p, &raw))).ok_or_else(|| Error::SingularSystem("orthogonality Jacobian".into()))?;
        let mut eps = raw;
        for (d, ci) in directions.iter().zip(c.iter()) {
            eps = eps.sub(&d.scale(Complex64::new(*ci, 0.0)));
        }
        let h1 = (eps.mass() + Spectral::for_field(&eps).grad_norm_sq(&eps)).sqrt();
        eps = eps.scale(Complex64::new(amplitude / h1, 0.0));
        let residual = eta_pairings(gs, consts, p, &eps).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        max_ortho = max_ortho.max(residual / eps.l2_norm());
        let fv = functionals_of(&eps, &big_p, p, consts, s_proxy)?;
        quotients.push(fv.f / fv.eps_h1_sq);
    }
    let min_quotient = quotients.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CoercivityReport { quotients, min_quotient, max_ortho_residual: max_ortho })
}

/// The five pairings of `η₁ = e^{−iΓ₁}ε(· + z₁)` for a residual `ε` on the rescaled grid.
fn eta_pairings(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, eps: &ComplexField2D) -> [f64; 5] {
    let z1 = consts.center(0, p.z);
    let e1 = consts.unit_vectors[0];
    let terms: [Box<dyn Fn(f64, f64, Complex64) -> f64 + Sync>; 5] = [
        Box::new(|r, _, eta| eta.re * r * r * gs.q.eval(r)),
        Box::new(|r, w1, eta| eta.re * w1 * gs.q.eval(r)),
        Box::new(|r, _, eta| eta.im * gs.rho.eval(r)),
        Box::new(|r, w1, eta| if r > 0.0 { eta.im * gs.q.eval_with_slope(r).1 * w1 / r } else { 0.0 }),
        Box::new(|r, _, eta| {
            let (q, qs) = gs.q.eval_with_slope(r);
            eta.im * (q + r * qs)
        }),
    ];
    terms.map(|f| {
        eps.integrate(|x, y, v| {
            let w = [x - z1[0], y - z1[1]];
            let eta = v * Complex64::from_polar(1.0, -gamma_phase(w, p.beta, e1, p.b));
            f(w[0].hypot(w[1]), e1[0] * w[0] + e1[1] * w[1], eta)
        })
    })
}

/// `τ_K`-symmetrized test directions `Σ_k e^{iΓ_k} f(R_k⁻¹(y − z_k))`.
fn ortho_directions(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, grid: &ansatz::AnsatzGrid) -> Result<Vec<ComplexField2D>> {
    let i = Complex64::new(0.0, 1.0);
    let profile: [fn(&GroundStateData, f64, f64) -> Complex64; 5] = [
        |gs, r, _| Complex64::new(r * r * gs.q.eval(r), 0.0),
        |gs, r, w1| Complex64::new(w1 * gs.q.eval(r), 0.0),
        |gs, r, _| Complex64::new(0.0, gs.rho.eval(r)),
        |gs, r, w1| if r > 0.0 { Complex64::new(0.0, gs.q.eval_with_slope(r).1 * w1 / r) } else { Complex64::new(0.0, 0.0) },
        |gs, r, _| {
            let (q, qs) = gs.q.eval_with_slope(r);
            Complex64::new(0.0, q + r * qs)
        },
    ];
    let _ = i;
    profile
        .iter()
        .map(|f| {
            ComplexField2D::from_fn(grid.n, grid.half_width, |x, y| {
                (0..consts.k)
                    .map(|k| {
                        let c = consts.center(k, p.z);
                        let e = consts.unit_vectors[k];
                        let w = [x - c[0], y - c[1]];
                        let r = w[0].hypot(w[1]);
                        Complex64::from_polar(1.0, gamma_phase(w, p.beta, e, p.b)) * f(gs, r, e[0] * w[0] + e[1] * w[1])
                    })
                    .sum()
            })
        })
        .collect()
}

/// Sum of a few random complex Gaussians near bubble 1, replicated on every bubble by rotation.
fn random_symmetric_field(rng: &mut ChaCha8Rng, consts: &GeometryConstants, p: &ParamState, grid: &ansatz::AnsatzGrid) -> Result<ComplexField2D> {
    const BUMPS: usize = 6;
    let bumps: Vec<([f64; 2], f64, Complex64)> = (0..BUMPS)
        .map(|_| {
            let offset = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let width = rng.random_range(0.5..2.0);
            let coeff = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (offset, width, coeff)
        })
        .collect();
    ComplexField2D::from_fn(grid.n, grid.half_width, |x, y| {
        (0..consts.k)
            .map(|k| {
                let c = consts.center(k, p.z);
                let e = consts.unit_vectors[k];
                // coordinates in the frame of bubble k, aligned with e_k
                let w = [x - c[0], y - c[1]];
                let local = [e[0] * w[0] + e[1] * w[1], -e[1] * w[0] + e[0] * w[1]];
                bumps
                    .iter()
                    .map(|(o, s, a)| {
                        let d2 = (local[0] - o[0]).powi(2) + (local[1] - o[1]).powi(2);
                        a * (-d2 / (2.0 * s * s)).exp()
                    })
                    .sum::<Complex64>()
            })
            .sum()
    })
}

/// Rescaled time as a function of physical time along the reduced flow with the same final data.
#[derive(Debug, Clone)]
pub struct SProxy {
    /// `(t, s)` pairs with `t` decreasing from 0.
    table: Vec<(f64, f64)>,
}

impl SProxy {
    pub fn new(s_in: f64, zeta_sharp: f64, s_floor: f64, consts: &GeometryConstants) -> Result<Self> {
        let mut cfg = ShootingConfig::new(s_in, s_floor, 1e-12);
        // the proxy only needs the flow, not the tube
        cfg.tube = reduced_ode::BootstrapTube { zeta_width: f64::INFINITY, b_lower: f64::NEG_INFINITY, b_upper: f64::INFINITY, beta_width: f64::INFINITY };
        let (traj, _) = reduced_ode::integrate_backward(&cfg, zeta_sharp, consts)?;
        let t = traj.times();
        Ok(Self { table: t.into_iter().zip(traj.states.iter().map(|st| st.s)).collect() })
    }

    /// Linear interpolation of `s(t)`; clamps beyond the table.
    pub fn s_at(&self, t: f64) -> f64 {
        let idx = self.table.partition_point(|&(ti, _)| ti > t);
        if idx == 0 {
            return self.table[0].1;
        }
        if idx >= self.table.len() {
            return self.table[self.table.len() - 1].1;
        }
        let (t0, s0) = self.table[idx - 1];
        let (t1, s1) = self.table[idx];
        s0 + (s1 - s0) * (t - t0) / (t1 - t0)
    }

    pub fn t_min(&self) -> f64 {
        self.table.last().map_or(0.0, |&(t, _)| t)
    }
}

/// Backward-run tracking setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub s_in: f64,
    pub zeta_sharp: f64,
    pub n: usize,
    pub half_width: f64,
    /// Positive step size; the run goes backward from `t = 0`.
    pub dt: f64,
    pub duration: f64,
    /// Steps between decompositions.
    pub cadence: usize,
    pub tol: f64,
    pub closeness: f64,
    pub splitting: pde::Splitting,
}

/// One cadence point of a tracked run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub t: f64,
    pub s_proxy: f64,
    pub p: ParamState,
    pub eps_h1: f64,
    pub eta1_dot_q: f64,
    pub functionals: FunctionalValues,
    pub conserved: ConservedSnapshot,
    pub ortho_max: f64,
    pub transverse_max: f64,
    /// `‖P(s)‖²_{L²}` on the rescaled grid.
    pub ansatz_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub rows: Vec<TrackRow>,
    pub truncated: Option<Truncation>,
    pub warnings: Vec<String>,
}

impl TrackRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s_proxy,lambda,z,gamma,beta,b,eps_H1,eta1_dot_Q,H,J,F,mass,energy,variance\n");
        for r in &self.rows {
            let p = &r.p;
            let fv = &r.functionals;
            let c = &r.conserved;
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.s_proxy, p.lambda, p.z, p.gamma, p.beta, p.b, r.eps_h1, r.eta1_dot_q, fv.h, fv.j, fv.f, c.mass, c.energy, c.variance
            );
        }
        out
    }

    /// Modulation vector from centred differences of the tracked parameters, `d/ds = λ² d/dt`.
    pub fn modulation_estimates(&self, consts: &GeometryConstants) -> Vec<(f64, [f64; 5])> {
        self.rows
            .windows(3)
            .map(|w| {
                let dt = w[2].t - w[0].t;
                let (a, b, c) = (w[0].p.to_array(), w[1].p, w[2].p.to_array());
                let l2 = b.lambda * b.lambda;
                let rate: [f64; 5] = std::array::from_fn(|i| l2 * (c[i] - a[i]) / dt);
                (w[1].t, modulation_vector(&b, &ParamVelocity::from_array(rate), consts).to_array())
            })
            .collect()
    }
}

/// Runs the PDE backward from the final-data ansatz and decomposes at every cadence point.
///
/// Decomposition or solver failures end the record with a tagged truncation instead of an error.
pub fn track(gs: &GroundStateData, consts: &GeometryConstants, cfg: &TrackConfig) -> Result<TrackRecord> {
    if !(cfg.dt > 0.0 && cfg.duration > 0.0 && cfg.cadence > 0) {
        return Err(Error::invalid("track needs positive dt, duration and cadence"));
    }
    let p_in = reduced_ode::final_data(cfg.s_in, cfg.zeta_sharp, consts)?;
    let mut u = ansatz::build_physical(gs, consts, &p_in, cfg.n, cfg.half_width)?;
    let proxy = SProxy::new(cfg.s_in, cfg.zeta_sharp, 11.0, consts)?;
    let evo = pde::EvolutionConfig { n: cfg.n, half_width: cfg.half_width, dt: -cfg.dt, t_span: [0.0, -cfg.duration], monitor_stride: cfg.cadence };
    evo.validate(&u)?;
    let stepper = Stepper::with_splitting(cfg.n, cfg.half_width, -cfg.dt, cfg.splitting);
    let initial_amp = u.max_abs();
    let mut record = TrackRecord { rows: Vec::new(), truncated: None, warnings: Vec::new() };
    let mut guess = p_in;
    let mut s_fit = cfg.s_in;
    let steps = evo.steps();
    let mut done = 0;
    loop {
        let t = -(done as f64) * cfg.dt;
        if t < proxy.t_min() {
            record.truncated = Some(Truncation { t, reason: "reduced-flow time map exhausted".into() });
            break;
        }
        let s_proxy = proxy.s_at(t);
        // carry the previous fit along the reduced flow, converting the time step with its own scale
        if let Some(prev) = record.rows.last() {
            let ds = (t - prev.t) / (prev.p.lambda * prev.p.lambda);
            guess = reduced_ode::integrate(&guess, s_fit, s_fit + ds, consts).unwrap_or(guess);
            s_fit += ds;
        }
        match decompose(&u, gs, consts, &guess, cfg.tol, cfg.closeness) {
            Ok(dec) => {
                let fv = functionals(&dec, consts, s_proxy)?;
                let conserved = pde::conserved(&u, t, stepper.spectral());
                if conserved.edge_ratio > pde::EDGE_DECAY && record.warnings.is_empty() {
                    record.warnings.push(format!("edge amplitude ratio {:.3e} at t = {t}", conserved.edge_ratio));
                }
                record.rows.push(TrackRow {
                    t,
                    s_proxy,
                    p: dec.p,
                    eps_h1: fv.eps_h1_sq.sqrt(),
                    eta1_dot_q: dec.eta1_dot_q,
                    functionals: fv,
                    conserved,
                    ortho_max: dec.ortho_residuals.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                    transverse_max: dec.transverse.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                    ansatz_mass: dec.ansatz.mass(),
                });
                guess = dec.p;
            }
            Err(e) => {
                record.truncated = Some(Truncation { t, reason: format!("decomposition failed: {e}") });
                break;
            }
        }
        if done >= steps {
            break;
        }
        let m = cfg.cadence.min(steps - done);
        if let Err(e) = stepper.advance(&mut u, m, t, initial_amp) {
            record.truncated = Some(Truncation { t, reason: format!("solver stopped: {e}") });
            break;
        }
        done += m;
    }
    Ok(record)
}
