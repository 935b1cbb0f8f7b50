//! The K-bubble approximate solution, its modulation vector and its error field.

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Spectral};
use crate::groundstate::GroundStateData;
use crate::interactions::GeometryConstants;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tail clearance required between a bubble centre and the box edge.
pub const BOX_CLEARANCE: f64 = 15.0;

/// Modulation parameters `(λ, z, γ, β, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    pub lambda: f64,
    pub z: f64,
    pub gamma: f64,
    pub beta: f64,
    pub b: f64,
}

impl ParamState {
    pub fn new(lambda: f64, z: f64, gamma: f64, beta: f64, b: f64) -> Self {
        Self { lambda, z, gamma, beta, b }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.lambda, self.z, self.gamma, self.beta, self.b]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    /// Soft check of the construction regime `z ≫ 1`, `|b| + |β| ≪ 1`.
    pub fn in_construction_regime(&self) -> bool {
        self.lambda > 0.0 && self.z > 3.0 && self.b.abs() + self.beta.abs() < 0.1
    }
}

/// Derivatives of the parameters with respect to rescaled time `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVelocity {
    pub lambda: f64,
    pub z: f64,
    pub gamma: f64,
    pub beta: f64,
    pub b: f64,
}

impl ParamVelocity {
    pub fn to_array(&self) -> [f64; 5] {
        [self.lambda, self.z, self.gamma, self.beta, self.b]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { lambda: a[0], z: a[1], gamma: a[2], beta: a[3], b: a[4] }
    }
}

/// The five scalar modulation equations, each collapsed onto `e₁` by symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationVector {
    pub scale: f64,
    pub translate: f64,
    pub phase: f64,
    pub drift: f64,
    pub conformal: f64,
}

impl ModulationVector {
    pub fn to_array(&self) -> [f64; 5] {
        [self.scale, self.translate, self.phase, self.drift, self.conformal]
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Modulation vector of `pdot` at `p`.
pub fn modulation_vector(p: &ParamState, pdot: &ParamVelocity, consts: &GeometryConstants) -> ModulationVector {
    let ls = pdot.lambda / p.lambda;
    let translate = pdot.z - 2.0 * p.beta + ls * p.z;
    ModulationVector {
        scale: p.b + ls,
        translate,
        phase: pdot.gamma - 1.0 + p.beta * p.beta - ls * p.beta * p.z - p.beta * pdot.z,
        drift: pdot.beta - ls * p.beta + 0.5 * p.b * translate,
        conformal: pdot.b + p.b * p.b - 2.0 * p.b * (p.b + ls) - consts.a_of_z(p.z),
    }
}

/// Rescaled-variable grid on which the ansatz is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzGrid {
    pub n: usize,
    pub half_width: f64,
}

impl AnsatzGrid {
    /// Smallest box with the required clearance at separation `z`, at spacing close to `dy`.
    pub fn for_separation(z: f64, dy: f64) -> Self {
        let half_width = z + BOX_CLEARANCE;
        let n = ((2.0 * half_width / dy).ceil() as usize).next_power_of_two();
        Self { n, half_width }
    }

    fn check(&self, p: &ParamState) -> Result<()> {
        let needed = p.z + BOX_CLEARANCE;
        if needed > self.half_width {
            return Err(Error::BubbleLeavesBox { needed, available: self.half_width });
        }
        Ok(())
    }
}

/// `Γ(w) = β e·w − (b/4)|w|²`
pub fn gamma_phase(w: [f64; 2], beta: f64, e: [f64; 2], b: f64) -> f64 {
    beta * (e[0] * w[0] + e[1] * w[1]) - 0.25 * b * (w[0] * w[0] + w[1] * w[1])
}

/// Values of `Q_a`, `Q_a'`, `Q`, `ρ` at radius `r`.
struct RadialSample {
    qa: f64,
    qa_slope: f64,
    q: f64,
    rho: f64,
}

fn radial_sample(gs: &GroundStateData, a: f64, r: f64) -> RadialSample {
    let (q, qs) = gs.q.eval_with_slope(r);
    let (rho, rs) = gs.rho.eval_with_slope(r);
    RadialSample { qa: q + a * rho, qa_slope: qs + a * rs, q, rho }
}

pub(crate) fn bubble_value(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, a: f64, k: usize, x: f64, y: f64) -> Complex64 {
    let c = consts.center(k, p.z);
    let w = [x - c[0], y - c[1]];
    let s = radial_sample(gs, a, w[0].hypot(w[1]));
    Complex64::from_polar(s.qa, gamma_phase(w, p.beta, consts.unit_vectors[k], p.b))
}

/// Bubble `k` (0-based) `e^{iΓ_k(y−z_k)} Q_a(y − z_k)` on `grid`.
pub fn build_bubble(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, k: usize, grid: &AnsatzGrid) -> Result<ComplexField2D> {
    grid.check(p)?;
    if k >= consts.k {
        return Err(Error::invalid(format!("bubble index {k} out of range for K = {}", consts.k)));
    }
    let a = consts.a_of_z(p.z);
    ComplexField2D::from_fn(grid.n, grid.half_width, |x, y| bubble_value(gs, consts, p, a, k, x, y))
}

pub fn build_bubbles(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, grid: &AnsatzGrid) -> Result<Vec<ComplexField2D>> {
    (0..consts.k).map(|k| build_bubble(gs, consts, p, k, grid)).collect()
}

/// `P = Σ_k P_k` on `grid`; independent of `λ` and `γ`.
pub fn build_ansatz(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, grid: &AnsatzGrid) -> Result<ComplexField2D> {
    grid.check(p)?;
    let a = consts.a_of_z(p.z);
    ComplexField2D::from_fn(grid.n, grid.half_width, |x, y| {
        (0..consts.k).map(|k| bubble_value(gs, consts, p, a, k, x, y)).sum()
    })
}

/// `u(x) = (e^{iγ}/λ) P(x/λ)` sampled directly on a physical grid.
pub fn build_physical(
    gs: &GroundStateData,
    consts: &GeometryConstants,
    p: &ParamState,
    n: usize,
    half_width: f64,
) -> Result<ComplexField2D> {
    let needed = (p.z + BOX_CLEARANCE) * p.lambda;
    if needed > half_width {
        return Err(Error::BubbleLeavesBox { needed, available: half_width });
    }
    let a = consts.a_of_z(p.z);
    let pref = Complex64::from_polar(1.0 / p.lambda, p.gamma);
    ComplexField2D::from_fn(n, half_width, |x, y| {
        let (yx, yy) = (x / p.lambda, y / p.lambda);
        pref * (0..consts.k).map(|k| bubble_value(gs, consts, p, a, k, yx, yy)).sum::<Complex64>()
    })
}

/// Physical field `u(x) = (e^{iγ}/λ) v(x/λ)`: the samples are kept and the box is rescaled by `λ`.
pub fn to_physical(v: &ComplexField2D, p: &ParamState) -> Result<ComplexField2D> {
    if !(p.lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    let spacing = p.lambda * v.dx();
    if p.lambda < 4.0 * spacing {
        return Err(Error::ScaleUnderResolved { lambda: p.lambda, limit: 4.0 * spacing });
    }
    let c = Complex64::from_polar(1.0 / p.lambda, p.gamma);
    Ok(v.relabelled(p.lambda * v.half_width()).scale(c))
}

/// Interaction term `F_k = 2|P_k|²ΣP_j + P_k²ΣP̄_j + P̄_k Σ_{j≠l} P_j P_l` (indices ≠ k).
pub fn interaction_field(bubbles: &[ComplexField2D], k: usize) -> ComplexField2D {
    let first = &bubbles[k];
    let n = first.n();
    let data: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let pk = bubbles[k].data()[idx];
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sum_conj = Complex64::new(0.0, 0.0);
            let mut pairs = Complex64::new(0.0, 0.0);
            for (j, bj) in bubbles.iter().enumerate() {
                if j == k {
                    continue;
                }
                let pj = bj.data()[idx];
                sum += pj;
                sum_conj += pj.conj();
                for (l, bl) in bubbles.iter().enumerate() {
                    if l != k && l != j {
                        pairs += pj * bl.data()[idx];
                    }
                }
            }
            2.0 * pk.norm_sqr() * sum + pk * pk * sum_conj + pk.conj() * pairs
        })
        .collect();
    ComplexField2D::from_data(n, first.half_width(), data).expect("same grid")
}

/// `Ψ_{Q_a} = Q_a³ − Q³ − 3aQ²ρ + (a²/4)|y|²ρ` centred at the origin.
pub fn psi_qa(gs: &GroundStateData, a: f64, grid: &AnsatzGrid) -> Result<ComplexField2D> {
    ComplexField2D::from_fn(grid.n, grid.half_width, |x, y| {
        let r = x.hypot(y);
        let s = radial_sample(gs, a, r);
        let v = s.qa.powi(3) - s.q.powi(3) - 3.0 * a * s.q * s.q * s.rho + 0.25 * a * a * r * r * s.rho;
        Complex64::new(v, 0.0)
    })
}

/// `Q_a` centred at the origin.
pub fn q_a(gs: &GroundStateData, a: f64, grid: &AnsatzGrid) -> Result<ComplexField2D> {
    ComplexField2D::from_fn(grid.n, grid.half_width, |x, y| Complex64::new(radial_sample(gs, a, x.hypot(y)).qa, 0.0))
}

/// `‖ΔQ − Q + Q³‖_{L²}` of the sampled ground state: the resolution floor of spectral calculus on `grid`.
pub fn spectral_floor(gs: &GroundStateData, grid: &AnsatzGrid) -> Result<f64> {
    let q = q_a(gs, 0.0, grid)?;
    let sp = Spectral::for_field(&q);
    let lap = sp.laplacian(&q);
    Ok(lap.zip_map(&q, |l, v| l - v + v.norm_sqr() * v).l2_norm())
}

/// Both assemblies of `E_P` and their discrepancy.
#[derive(Debug, Clone)]
pub struct ErrorFieldReport {
    /// `E_P` evaluated directly from its definition.
    pub direct: ComplexField2D,
    /// `E_P` rebuilt from the modulation-vector decomposition.
    pub decomposed: ComplexField2D,
    /// `‖direct − decomposed‖_{L²}`
    pub discrepancy: f64,
    pub direct_norm: f64,
}

/// `d/ds P` along `pdot` by fourth-order central differences in `(z, b, β)`.
fn ansatz_time_derivative(
    gs: &GroundStateData,
    consts: &GeometryConstants,
    p: &ParamState,
    pdot: &ParamVelocity,
    grid: &AnsatzGrid,
) -> Result<ComplexField2D> {
    let mut acc = ComplexField2D::zeros(grid.n, grid.half_width)?;
    let steps: [(f64, fn(&mut ParamState, f64)); 3] = [
        (pdot.z, |q, d| q.z += d),
        (pdot.b, |q, d| q.b += d),
        (pdot.beta, |q, d| q.beta += d),
    ];
    let delta = 1e-3;
    for (rate, shift) in steps {
        if rate == 0.0 {
            continue;
        }
        let at = |d: f64| -> Result<ComplexField2D> {
            let mut q = *p;
            shift(&mut q, d);
            build_ansatz(gs, consts, &q, grid)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * delta)?, at(-delta)?, at(delta)?, at(2.0 * delta)?);
        let c = rate / (12.0 * delta);
        acc = acc
            .add(&p1.sub(&m1).scale(Complex64::new(8.0 * c, 0.0)))
            .sub(&p2.sub(&m2).scale(Complex64::new(c, 0.0)));
    }
    Ok(acc)
}

/// Error field `E_P = i∂_sP + ΔP − P + |P|²P − i(λ_s/λ)ΛP + (1 − γ̇)P`, assembled twice.
pub fn error_field(
    gs: &GroundStateData,
    consts: &GeometryConstants,
    p: &ParamState,
    pdot: &ParamVelocity,
    grid: &AnsatzGrid,
) -> Result<ErrorFieldReport> {
    if consts.k < 2 {
        return Err(Error::invalid("the construction needs K >= 2"));
    }
    let big_p = build_ansatz(gs, consts, p, grid)?;
    let sp = Spectral::for_field(&big_p);
    let dpds = ansatz_time_derivative(gs, consts, p, pdot, grid)?;
    let lap = sp.laplacian(&big_p);
    let (g1, g2) = sp.gradient(&big_p);
    let ls = pdot.lambda / p.lambda;
    let i = Complex64::new(0.0, 1.0);
    let n = grid.n;
    let dx = big_p.dx();
    let l = grid.half_width;
    let direct_data: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (x, y) = (-l + (idx / n) as f64 * dx, -l + (idx % n) as f64 * dx);
            let pv = big_p.data()[idx];
            let lambda_p = pv + x * g1.data()[idx] + y * g2.data()[idx];
            i * dpds.data()[idx] + lap.data()[idx] - pv + pv.norm_sqr() * pv - i * ls * lambda_p + (1.0 - pdot.gamma) * pv
        })
        .collect();
    let direct = ComplexField2D::from_data(n, l, direct_data)?;

    let m = modulation_vector(p, pdot, consts);
    let a = consts.a_of_z(p.z);
    let a_prime = consts.a_prime_of_z(p.z);
    let bubbles = build_bubbles(gs, consts, p, grid)?;
    let mut decomposed = ComplexField2D::from_fn(n, l, |x, y| {
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..consts.k {
            let c = consts.center(k, p.z);
            let e = consts.unit_vectors[k];
            let w = [x - c[0], y - c[1]];
            let r = w[0].hypot(w[1]);
            let s = radial_sample(gs, a, r);
            let ew = e[0] * w[0] + e[1] * w[1];
            let grad_along = if r > 0.0 { ew / r * s.qa_slope } else { 0.0 };
            let lambda_qa = s.qa + r * s.qa_slope;
            let psi = s.qa.powi(3) - s.q.powi(3) - 3.0 * a * s.q * s.q * s.rho + 0.25 * a * a * r * r * s.rho;
            let inner = -i * m.scale * lambda_qa - i * m.translate * grad_along - m.phase * s.qa - m.drift * ew * s.qa
                + 0.25 * m.conformal * r * r * s.qa
                + i * pdot.z * a_prime * s.rho
                + psi;
            total += Complex64::from_polar(1.0, gamma_phase(w, p.beta, e, p.b)) * inner;
        }
        total
    })?;
    for k in 0..consts.k {
        decomposed = decomposed.add(&interaction_field(&bubbles, k));
    }
    let discrepancy = direct.sub(&decomposed).l2_norm();
    let direct_norm = direct.l2_norm();
    Ok(ErrorFieldReport { direct, decomposed, discrepancy, direct_norm })
}

/// `max_y |E(y)| / Σ_k Q^{1/2}(y − z_k)` over the grid.
pub fn pointwise_envelope_constant(gs: &GroundStateData, consts: &GeometryConstants, p: &ParamState, e: &ComplexField2D) -> f64 {
    let mut worst = 0.0_f64;
    let n = e.n();
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (e.coord(i), e.coord(j));
            let env: f64 = (0..consts.k)
                .map(|k| {
                    let c = consts.center(k, p.z);
                    gs.q.eval((x - c[0]).hypot(y - c[1])).max(0.0).sqrt()
                })
                .sum();
            if env > 1e-12 {
                worst = worst.max(e.get(i, j).norm() / env);
            }
        }
    }
    worst
}
