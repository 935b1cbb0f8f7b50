//! Split-step Fourier solver for `i∂ₜu + Δu + |u|²u = 0` on a periodic box, with
//! conservation monitors, the virial identity and the pseudo-conformal transform.

use crate::error::{Error, Result};
use crate::fft::unit_phase;
use crate::field::{ComplexField2D, Spectral};
use crate::profile::RadialProfile;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Largest allowed phase increment per step, `dt·max(|u|², k_max²) ≤ STABILITY_CONSTANT`.
///
/// With the bound the highest resolved mode turns by at most π per linear substep.
pub const STABILITY_CONSTANT: f64 = std::f64::consts::PI;
/// Spectral energy fraction in the upper third of modes above which aliasing is flagged.
pub const ALIASING_THRESHOLD: f64 = 1e-8;
/// Runs stop when the amplitude exceeds this multiple of its initial value.
pub const BLOW_UP_FACTOR: f64 = 4.0;
/// Edge amplitude, relative to the maximum, above which the variance is flagged as box-polluted.
pub const EDGE_DECAY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub n: usize,
    pub half_width: f64,
    /// Signed step; negative values integrate backward.
    pub dt: f64,
    /// `[t_start, t_end]`; the run proceeds from the first to the second entry.
    pub t_span: [f64; 2],
    pub monitor_stride: usize,
}

impl EvolutionConfig {
    pub fn steps(&self) -> usize {
        ((self.t_span[1] - self.t_span[0]) / self.dt).round().max(0.0) as usize
    }

    pub fn validate(&self, u: &ComplexField2D) -> Result<()> {
        if u.n() != self.n || u.half_width() != self.half_width {
            return Err(Error::invalid("initial field does not live on the configured grid"));
        }
        if !(self.dt != 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("time step must be finite and nonzero"));
        }
        let span = self.t_span[1] - self.t_span[0];
        if span != 0.0 && span.signum() != self.dt.signum() {
            return Err(Error::invalid("time step sign does not match the direction of t_span"));
        }
        if self.monitor_stride == 0 {
            return Err(Error::invalid("monitor stride must be positive"));
        }
        let amp = u.max_abs();
        let k_max = std::f64::consts::PI * self.n as f64 / (2.0 * self.half_width);
        let limit = STABILITY_CONSTANT / (amp * amp).max(k_max * k_max);
        if self.dt.abs() > limit {
            return Err(Error::invalid(format!("|dt| = {} exceeds the stability limit {limit:e}", self.dt.abs())));
        }
        Ok(())
    }
}

/// Conserved and monitored quantities at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedSnapshot {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub variance: f64,
    pub max_amp: f64,
    pub grad_norm: f64,
    /// Edge amplitude relative to the maximum; above [`EDGE_DECAY`] the variance is unreliable.
    pub edge_ratio: f64,
}

/// Mass, energy `½∫|∇u|² − ¼∫|u|⁴` (spectral gradient), variance and amplitude.
pub fn conserved(u: &ComplexField2D, t: f64, spectral: &Spectral) -> ConservedSnapshot {
    let grad_sq = spectral.grad_norm_sq(u);
    let max_amp = u.max_abs();
    ConservedSnapshot {
        t,
        mass: u.mass(),
        energy: 0.5 * grad_sq - 0.25 * u.quartic(),
        variance: u.variance(),
        max_amp,
        grad_norm: grad_sq.sqrt(),
        edge_ratio: if max_amp > 0.0 { u.edge_max() / max_amp } else { 0.0 },
    }
}

/// Composition of Strang substeps making up one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    /// `N(dt/2) L(dt) N(dt/2)`, second order.
    #[default]
    Strang,
    /// Triple-jump composition of three Strang substeps, fourth order.
    Fourth,
}

impl Splitting {
    /// Substep weights summing to 1.
    pub fn weights(self) -> Vec<f64> {
        match self {
            Splitting::Strang => vec![1.0],
            Splitting::Fourth => {
                let outer = 1.0 / (2.0 - 2f64.cbrt());
                vec![outer, 1.0 - 2.0 * outer, outer]
            }
        }
    }
}

/// Split-step propagator; every substep is an exact L² isometry.
pub struct Stepper {
    spectral: Spectral,
    dt: f64,
    weights: Vec<f64>,
    /// Linear propagator per substep.
    propagators: Vec<Vec<Complex64>>,
}

impl Stepper {
    pub fn new(n: usize, half_width: f64, dt: f64) -> Self {
        Self::with_splitting(n, half_width, dt, Splitting::Strang)
    }

    pub fn with_splitting(n: usize, half_width: f64, dt: f64, splitting: Splitting) -> Self {
        let spectral = Spectral::new(n, half_width);
        let k = spectral.wavenumbers();
        let weights = splitting.weights();
        let propagators = weights
            .iter()
            .map(|w| {
                let tau = w * dt;
                (0..n * n)
                    .into_par_iter()
                    .map(|idx| {
                        let (a, b) = (k[idx / n], k[idx % n]);
                        unit_phase(-tau * (a * a + b * b))
                    })
                    .collect()
            })
            .collect();
        Self { spectral, dt, weights, propagators }
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn nonlinear(data: &mut [Complex64], tau: f64) {
        data.par_iter_mut().for_each(|v| *v *= Complex64::from_polar(1.0, tau * v.norm_sqr()));
    }

    fn linear(&self, data: &mut [Complex64], sub: usize) {
        self.spectral.fft().forward(data);
        data.par_iter_mut().zip(&self.propagators[sub]).for_each(|(v, p)| *v *= p);
        self.spectral.fft().inverse(data);
    }

    /// Advances `u` by one step in place.
    pub fn step(&self, u: &mut ComplexField2D) {
        let data = u.data_mut();
        for (sub, w) in self.weights.iter().enumerate() {
            Self::nonlinear(data, 0.5 * w * self.dt);
            self.linear(data, sub);
            Self::nonlinear(data, 0.5 * w * self.dt);
        }
    }

    /// Advances `m ≥ 1` steps, fusing adjacent nonlinear half-steps.
    ///
    /// After every linear substep the modulus equals that of the unfused sequence (the nonlinear
    /// substep only rotates phases), which is where the non-finite and blow-up guards look.
    pub fn advance(&self, u: &mut ComplexField2D, m: usize, t0: f64, initial_amp: f64) -> Result<()> {
        if m == 0 {
            return Ok(());
        }
        let data = u.data_mut();
        let subs = self.weights.len();
        let total = m * subs;
        Self::nonlinear(data, 0.5 * self.weights[0] * self.dt);
        for idx in 0..total {
            let sub = idx % subs;
            self.linear(data, sub);
            if sub + 1 == subs {
                let t = t0 + (idx / subs + 1) as f64 * self.dt;
                // NaN compares false, so a non-finite sample shows up as a non-finite maximum
                let amp_sq = data.par_iter().map(|v| v.norm_sqr()).reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
                if !amp_sq.is_finite() {
                    return Err(Error::NanDetected { t });
                }
                let amp = amp_sq.sqrt();
                if amp > BLOW_UP_FACTOR * initial_amp {
                    return Err(Error::BlowUpGuard { t, amp, initial: initial_amp });
                }
            }
            let next = if idx + 1 == total { 0.0 } else { self.weights[(idx + 1) % subs] };
            Self::nonlinear(data, 0.5 * (self.weights[sub] + next) * self.dt);
        }
        Ok(())
    }

    /// Exact free propagation `e^{itΔ}` of `u`.
    pub fn free_propagate(&self, u: &ComplexField2D, t: f64) -> ComplexField2D {
        self.spectral.apply_symbol(u, |a, b| unit_phase(-t * (a * a + b * b)))
    }
}

/// Diagnostics of a completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub snapshots: Vec<ConservedSnapshot>,
    pub warnings: Vec<String>,
}

impl RunLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mass,energy,variance,max_amp,grad_norm\n");
        for s in &self.snapshots {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.mass, s.energy, s.variance, s.max_amp, s.grad_norm);
        }
        out
    }

    pub fn max_relative_mass_drift(&self) -> f64 {
        let Some(first) = self.snapshots.first() else { return 0.0 };
        self.snapshots.iter().map(|s| (s.mass - first.mass).abs() / first.mass).fold(0.0, f64::max)
    }

    /// Energy drift relative to `max(|E₀|, ½‖∇u₀‖²)`, so zero-energy data such as `Q` is
    /// measured against its kinetic part.
    pub fn max_relative_energy_drift(&self) -> f64 {
        let Some(first) = self.snapshots.first() else { return 0.0 };
        let scale = first.energy.abs().max(0.5 * first.grad_norm * first.grad_norm);
        self.snapshots.iter().map(|s| (s.energy - first.energy).abs() / scale).fold(0.0, f64::max)
    }
}

/// Evolves `u` in place over `cfg.t_span`, calling `observe` at every monitored step.
///
/// Stops with an error on a non-finite value or when the amplitude exceeds
/// [`BLOW_UP_FACTOR`] times its initial value.
pub fn evolve_with(
    u: &mut ComplexField2D,
    cfg: &EvolutionConfig,
    mut observe: impl FnMut(f64, &ComplexField2D) -> Result<()>,
) -> Result<RunLog> {
    cfg.validate(u)?;
    let stepper = Stepper::new(cfg.n, cfg.half_width, cfg.dt);
    let initial = u.max_abs();
    let mut log = RunLog { snapshots: Vec::new(), warnings: Vec::new() };
    let mut monitor = |t: f64, u: &ComplexField2D, log: &mut RunLog| -> Result<()> {
        let snap = conserved(u, t, stepper.spectral());
        if snap.edge_ratio > EDGE_DECAY && log.warnings.iter().all(|w| !w.starts_with("edge")) {
            log.warnings.push(format!("edge amplitude ratio {:.3e} at t = {t}; variance unreliable", snap.edge_ratio));
        }
        let aliasing = stepper.spectral().upper_third_fraction(u);
        if aliasing > ALIASING_THRESHOLD {
            log.warnings.push(format!("aliasing: upper-third spectral fraction {aliasing:.3e} at t = {t}"));
        }
        log.snapshots.push(snap);
        observe(t, u)
    };
    monitor(cfg.t_span[0], u, &mut log)?;
    let steps = cfg.steps();
    let mut done = 0;
    while done < steps {
        let m = (cfg.monitor_stride - done % cfg.monitor_stride).min(steps - done);
        stepper.advance(u, m, cfg.t_span[0] + done as f64 * cfg.dt, initial)?;
        done += m;
        monitor(cfg.t_span[0] + done as f64 * cfg.dt, u, &mut log)?;
    }
    Ok(log)
}

pub fn evolve(u: &mut ComplexField2D, cfg: &EvolutionConfig) -> Result<RunLog> {
    evolve_with(u, cfg, |_, _| Ok(()))
}

/// Result of comparing `d²V/dt²` with `16E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    /// `(t, d²V/dt²)` at every interior sample.
    pub second_derivative: Vec<(f64, f64)>,
    pub sixteen_energy: f64,
    pub max_abs_error: f64,
    /// `max |d²V/dt² − 16E| / |16E|`; infinite when `E = 0`.
    pub max_rel_error: f64,
}

/// Five-point second difference of the variance against `16E(u₀)`.
pub fn virial_check(snaps: &[ConservedSnapshot]) -> Result<VirialReport> {
    if snaps.len() < 5 {
        return Err(Error::InsufficientSamples { got: snaps.len(), required: 5 });
    }
    let h = snaps[1].t - snaps[0].t;
    if snaps.windows(2).any(|w| ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.abs().max(1e-300)) {
        return Err(Error::invalid("virial check needs uniformly spaced samples"));
    }
    let sixteen_energy = 16.0 * snaps[0].energy;
    let v: Vec<f64> = snaps.iter().map(|s| s.variance).collect();
    let second_derivative: Vec<(f64, f64)> = (2..v.len() - 2)
        .map(|i| (snaps[i].t, (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h)))
        .collect();
    let max_abs_error = second_derivative.iter().map(|(_, d)| (d - sixteen_energy).abs()).fold(0.0, f64::max);
    Ok(VirialReport { second_derivative, sixteen_energy, max_abs_error, max_rel_error: max_abs_error / sixteen_energy.abs() })
}

/// Pseudo-conformal image `v(t, x) = |t|⁻¹ u(1/|t|, x/|t|) e^{−i|x|²/(4|t|)}`.
///
/// `u` is the field at time `1/|t|`; the result lives at time `t` on the box scaled by `|t|`,
/// so the map is pointwise exact and no resampling is needed.
pub fn pseudo_conformal(u: &ComplexField2D, t: f64) -> Result<ComplexField2D> {
    if !(t != 0.0 && t.is_finite()) {
        return Err(Error::invalid("pseudo-conformal time must be finite and nonzero"));
    }
    let a = t.abs();
    let v = u.relabelled(a * u.half_width()).map_xy(|x, y, val| val * Complex64::from_polar(1.0 / a, -(x * x + y * y) / (4.0 * a)));
    let fraction = Spectral::for_field(&v).upper_third_fraction(&v);
    if fraction > ALIASING_THRESHOLD {
        return Err(Error::ResampleUnderResolved(format!(
            "chirped field carries {fraction:.3e} of its spectrum in the upper third"
        )));
    }
    Ok(v)
}

/// `S(t, x) = |t|⁻¹ Q(x/|t|) e^{−i|x|²/(4|t|)} e^{i/|t|}` on `n` nodes over `[−|t|L, |t|L)²`.
pub fn pseudo_conformal_soliton(q: &RadialProfile, t: f64, n: usize, half_width_rescaled: f64) -> Result<ComplexField2D> {
    if !(t != 0.0 && t.is_finite()) {
        return Err(Error::invalid("soliton time must be finite and nonzero"));
    }
    let a = t.abs();
    ComplexField2D::from_fn(n, a * half_width_rescaled, |x, y| {
        let r2 = x * x + y * y;
        Complex64::from_polar(q.eval(r2.sqrt() / a) / a, -r2 / (4.0 * a) + 1.0 / a)
    })
}

/// Trigonometric interpolation of a periodic field onto another grid.
///
/// The target box must lie inside the source box; values are the band-limited Fourier
/// series of the source, evaluated separably.
pub fn resample(u: &ComplexField2D, n_out: usize, half_width_out: f64) -> Result<ComplexField2D> {
    if half_width_out > u.half_width() * (1.0 + 1e-12) {
        return Err(Error::ResampleUnderResolved(format!(
            "target box {half_width_out} exceeds source box {}",
            u.half_width()
        )));
    }
    let n = u.n();
    let spectral = Spectral::for_field(u);
    let mut coeffs = u.data().to_vec();
    spectral.fft().forward(&mut coeffs);
    let scale = 1.0 / (n * n) as f64;
    let k = spectral.wavenumbers().to_vec();
    let nyq = n / 2;
    let l = u.half_width();
    let dx_out = 2.0 * half_width_out / n_out as f64;
    let x_out: Vec<f64> = (0..n_out).map(|i| -half_width_out + i as f64 * dx_out).collect();
    // basis[i][m] = e^{i k_m (x_i + L)}; the Nyquist mode is split evenly for a real-symmetric interpolant
    let basis: Vec<Vec<Complex64>> = x_out
        .iter()
        .map(|&x| {
            (0..n)
                .map(|m| if m == nyq { Complex64::new((k[m] * (x + l)).cos(), 0.0) } else { Complex64::from_polar(1.0, k[m] * (x + l)) })
                .collect()
        })
        .collect();
    // stage 1: along the second axis, for every source row of coefficients
    let stage: Vec<Complex64> = coeffs
        .par_chunks(n)
        .flat_map_iter(|row| basis.iter().map(move |b| row.iter().zip(b).map(|(c, e)| c * e).sum::<Complex64>()))
        .collect();
    // stage 2: along the first axis
    let data: Vec<Complex64> = (0..n_out * n_out)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_out, idx % n_out);
            (0..n).map(|m| stage[m * n_out + j] * basis[i][m]).sum::<Complex64>() * scale
        })
        .collect();
    ComplexField2D::from_data(n_out, half_width_out, data)
}

/// Outcome of the Gagliardo–Nirenberg comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GagliardoReport {
    /// `‖u‖⁴_{L⁴} / (‖u‖²_{L²}‖∇u‖²_{L²})`
    pub quotient: f64,
    /// Sharp value `2/∫Q²`.
    pub sharp: f64,
    pub energy: f64,
    /// `½‖∇u‖²(1 − ‖u‖²/‖Q‖²)`
    pub energy_lower_bound: f64,
}

impl GagliardoReport {
    pub fn below_sharp(&self, rel_tol: f64) -> bool {
        self.quotient <= self.sharp * (1.0 + rel_tol)
    }

    pub fn energy_bound_holds(&self, abs_tol: f64) -> bool {
        self.energy >= self.energy_lower_bound - abs_tol
    }
}

pub fn gagliardo_check(u: &ComplexField2D, q_mass: f64) -> Result<GagliardoReport> {
    let mass = u.mass();
    if !(mass > 0.0) {
        return Err(Error::invalid("Gagliardo–Nirenberg quotient needs a nonzero field"));
    }
    let grad = Spectral::for_field(u).grad_norm_sq(u);
    let quartic = u.quartic();
    Ok(GagliardoReport {
        quotient: quartic / (mass * grad),
        sharp: 2.0 / q_mass,
        energy: 0.5 * grad - 0.25 * quartic,
        energy_lower_bound: 0.5 * grad * (1.0 - mass / q_mass),
    })
}

/// Closed-form integrals of `A e^{−|x|²/(2σ²)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mass: f64,
    pub variance: f64,
    pub grad_sq: f64,
    pub quartic: f64,
    pub energy: f64,
}

impl GaussianMoments {
    pub fn new(amplitude: f64, width: f64) -> Self {
        use std::f64::consts::PI;
        let a2 = amplitude * amplitude;
        let s2 = width * width;
        let grad_sq = a2 * PI;
        let quartic = a2 * a2 * PI * s2 / 2.0;
        Self { mass: a2 * PI * s2, variance: a2 * PI * s2 * s2, grad_sq, quartic, energy: 0.5 * grad_sq - 0.25 * quartic }
    }
}

pub fn gaussian(n: usize, half_width: f64, amplitude: f64, width: f64) -> Result<ComplexField2D> {
    ComplexField2D::from_fn(n, half_width, |x, y| Complex64::new(amplitude * (-(x * x + y * y) / (2.0 * width * width)).exp(), 0.0))
}

/// Samples a radial profile on the grid as a real field.
pub fn radial_field(q: &RadialProfile, n: usize, half_width: f64) -> Result<ComplexField2D> {
    ComplexField2D::from_fn(n, half_width, |x, y| Complex64::new(q.eval((x * x + y * y).sqrt()), 0.0))
}

/// `‖u − u∘R‖_{L²}/‖u‖_{L²}` for the rotation `R` by `2π/k`.
///
/// For `k ∈ {1, 2, 4}` the rotation permutes grid nodes exactly; otherwise values at the
/// rotated nodes are obtained by local 8-point Lagrange interpolation.
pub fn rotation_defect(u: &ComplexField2D, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("rotation order must be positive"));
    }
    let n = u.n();
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let flip = |i: usize| (n - i) % n;
    let rotated = match k {
        1 => u.clone(),
        // (x₁, x₂) ↦ (−x₁, −x₂)
        2 => ComplexField2D::from_data(n, u.half_width(), (0..n * n).map(|idx| u.get(flip(idx / n), flip(idx % n))).collect())?,
        // (x₁, x₂) ↦ (−x₂, x₁)
        4 => ComplexField2D::from_data(n, u.half_width(), (0..n * n).map(|idx| u.get(flip(idx % n), idx / n)).collect())?,
        _ => {
            let (c, s) = ((2.0 * std::f64::consts::PI / k as f64).cos(), (2.0 * std::f64::consts::PI / k as f64).sin());
            u.map_xy(|x, y, _| lagrange_at(u, c * x - s * y, s * x + c * y))
        }
    };
    Ok(u.sub(&rotated).l2_norm() / norm)
}

fn lagrange_at(u: &ComplexField2D, x: f64, y: f64) -> Complex64 {
    const W: isize = 8;
    let n = u.n() as isize;
    let dx = u.dx();
    let l = u.half_width();
    let weights = |p: f64| -> (isize, [f64; 8]) {
        let f = (p + l) / dx;
        let base = f.floor() as isize - (W / 2 - 1);
        let mut w = [0.0; 8];
        for (a, wa) in w.iter_mut().enumerate() {
            let xa = (base + a as isize) as f64;
            *wa = (0..W as usize).filter(|&b| b != a).map(|b| (f - (base + b as isize) as f64) / (xa - (base + b as isize) as f64)).product();
        }
        (base, w)
    };
    let (bi, wi) = weights(x);
    let (bj, wj) = weights(y);
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, wa) in wi.iter().enumerate() {
        let i = (bi + a as isize).rem_euclid(n) as usize;
        for (b, wb) in wj.iter().enumerate() {
            let j = (bj + b as isize).rem_euclid(n) as usize;
            acc += u.get(i, j) * (wa * wb);
        }
    }
    acc
}

/// Configures the global rayon pool from `NLSLAB_THREADS` when set; returns the thread count.
pub fn init_thread_pool() -> Result<usize> {
    if let Ok(v) = std::env::var("NLSLAB_THREADS") {
        let threads: usize = v.parse().map_err(|_| Error::invalid(format!("NLSLAB_THREADS={v} is not a count")))?;
        // a second initialization is harmless; keep whichever pool exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(rayon::current_num_threads())
}
