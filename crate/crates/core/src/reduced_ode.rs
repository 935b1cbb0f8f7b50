//! Reduced modulation dynamics and the backward topological shooting on the final data.

use crate::ansatz::{ParamState, ParamVelocity};
use crate::dopri::{DenseStep, Dopri5, Tolerances};
use crate::error::{Error, Result};
use crate::interactions::GeometryConstants;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Relative tolerance of the adaptive integrator.
pub const INTEGRATOR_RTOL: f64 = 1e-10;
/// Crossing times are localized to this absolute accuracy in `s`.
pub const EVENT_TOL: f64 = 1e-10;
/// Largest accepted step as a fraction of the current `s`, so the stored trajectory is dense.
const MAX_STEP_FRACTION: f64 = 0.02;

const TOLERANCES: Tolerances = Tolerances { rtol: INTEGRATOR_RTOL, atol: 1e-300 };

/// A point of the reduced flow at rescaled time `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub s: f64,
    pub p: ParamState,
}

/// Right-hand side of the reduced system: the zero set of the modulation vector.
pub fn reduced_rhs(state: &ReducedState, consts: &GeometryConstants) -> ParamVelocity {
    rhs(&state.p, consts)
}

fn rhs(p: &ParamState, consts: &GeometryConstants) -> ParamVelocity {
    ParamVelocity {
        lambda: -p.b * p.lambda,
        z: 2.0 * p.beta + p.b * p.z,
        gamma: 1.0 + p.beta * p.beta,
        beta: -p.b * p.beta,
        b: -p.b * p.b + consts.a_of_z(p.z),
    }
}

fn rhs_array(y: &[f64; 5], consts: &GeometryConstants) -> [f64; 5] {
    rhs(&ParamState::from_array(*y), consts).to_array()
}

/// `ζ(z) = (2/(κc_a))^{1/2} z^{−3/4} e^{κz/2}`
pub fn zeta_of(z: f64, consts: &GeometryConstants) -> f64 {
    (2.0 / (consts.kappa * consts.c_a)).sqrt() * z.powf(-0.75) * (0.5 * consts.kappa * z).exp()
}

/// `ξ = (ζ − s)² s^{−2} log s`
pub fn xi_of(s: f64, z: f64, consts: &GeometryConstants) -> f64 {
    let d = zeta_of(z, consts) - s;
    d * d / (s * s) * s.ln()
}

/// One inequality band of the bootstrap tube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TubeBand {
    Zeta,
    BLower,
    BUpper,
    Beta,
}

impl TubeBand {
    pub const ALL: [TubeBand; 4] = [TubeBand::Zeta, TubeBand::BLower, TubeBand::BUpper, TubeBand::Beta];

    pub fn label(self) -> &'static str {
        match self {
            TubeBand::Zeta => "zeta",
            TubeBand::BLower => "b-lower",
            TubeBand::BUpper => "b-upper",
            TubeBand::Beta => "beta",
        }
    }
}

/// The ζ, b and β bands trapping backward solutions.
///
/// Each band is expressed as a margin that is negative strictly inside and changes sign
/// on the band boundary, so crossings can be bisected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTube {
    /// `|ζ − s| ≤ zeta_width · s log^{−1/2} s`
    pub zeta_width: f64,
    /// `b_lower · s^{−1}log^{−1}s ≤ b ≤ b_upper · s^{−1}log^{−1}s`
    pub b_lower: f64,
    pub b_upper: f64,
    /// `|β| ≤ beta_width · s^{−1}log^{−3/2}s`
    pub beta_width: f64,
}

impl Default for BootstrapTube {
    fn default() -> Self {
        Self { zeta_width: 1.0, b_lower: 0.5, b_upper: 2.0, beta_width: 1.0 }
    }
}

impl BootstrapTube {
    pub fn margin(&self, band: TubeBand, s: f64, p: &ParamState, consts: &GeometryConstants) -> f64 {
        let log = s.ln();
        match band {
            TubeBand::Zeta => xi_of(s, p.z, consts) / (self.zeta_width * self.zeta_width) - 1.0,
            TubeBand::BLower => self.b_lower - p.b * s * log,
            TubeBand::BUpper => p.b * s * log - self.b_upper,
            TubeBand::Beta => p.beta.abs() * s * log.powf(1.5) - self.beta_width,
        }
    }

    pub fn margins(&self, s: f64, p: &ParamState, consts: &GeometryConstants) -> [f64; 4] {
        TubeBand::ALL.map(|band| self.margin(band, s, p, consts))
    }

    pub fn contains(&self, s: f64, p: &ParamState, consts: &GeometryConstants) -> bool {
        self.margins(s, p, consts).iter().all(|&m| m <= 0.0)
    }
}

/// Shooting problem on `[s0, s_in]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub s_in: f64,
    pub s0: f64,
    pub zeta_sharp_interval: [f64; 2],
    pub bisection_tol: f64,
    pub tube: BootstrapTube,
}

impl ShootingConfig {
    pub fn new(s_in: f64, s0: f64, bisection_tol: f64) -> Self {
        Self { s_in, s0, zeta_sharp_interval: [-1.0, 1.0], bisection_tol, tube: BootstrapTube::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 10.0 && self.s_in > self.s0) {
            return Err(Error::invalid(format!("need s_in > s0 > 10, got s_in = {}, s0 = {}", self.s_in, self.s0)));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(Error::invalid("bisection tolerance must be positive"));
        }
        let [lo, hi] = self.zeta_sharp_interval;
        if !(-1.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::invalid(format!("zeta_sharp interval [{lo}, {hi}] must be an ordered subinterval of [-1, 1]")));
        }
        Ok(())
    }
}

/// Reference regime: `λ = log^{−1}s`, `b = s^{−1}log^{−1}s`, `β = 0`, with `z` solving
/// `κz − (3/2) ln z = ln(κc_a/2) + 2 ln s`.
///
/// The phase is not part of the reference and is returned as zero.
pub fn regime_reference(s: f64, consts: &GeometryConstants) -> Result<ParamState> {
    if !(s >= std::f64::consts::E.powi(2)) {
        return Err(Error::invalid(format!("regime reference needs s >= e^2, got {s}")));
    }
    let kappa = consts.kappa;
    let rhs = (0.5 * kappa * consts.c_a).ln() + 2.0 * s.ln();
    let f = |z: f64| kappa * z - 1.5 * z.ln() - rhs;
    // f is convex; starting right of the larger root, Newton decreases monotonically onto it
    let mut z = (rhs.abs() + 1.5 * (10.0 + rhs.abs() / kappa).ln() + 10.0) / kappa;
    while f(z) <= 0.0 {
        z *= 2.0;
    }
    let z = newton(z, f, |z| kappa - 1.5 / z, "regime reference")?;
    if z <= 1.5 / kappa {
        return Err(Error::NewtonDivergence(format!("regime reference converged to the small root z = {z}")));
    }
    let log = s.ln();
    Ok(ParamState::new(1.0 / log, z, 0.0, 0.0, 1.0 / (s * log)))
}

/// Residuals of the reference regime scaled by `s^{−2}log^{−3/2}s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeResidual {
    pub s: f64,
    /// `|ḃ_app + b_app² − a(z_app)|` with a finite-difference `ḃ_app`, divided by the envelope.
    pub conformal: f64,
    /// `|a(z_app) + s^{−2}log^{−1}s|` divided by the envelope.
    pub interaction: f64,
}

pub fn regime_residual(s: f64, consts: &GeometryConstants) -> Result<RegimeResidual> {
    let h = 1e-3 * s;
    let b_at = |t: f64| regime_reference(t, consts).map(|p| p.b);
    let bdot = (-b_at(s + 2.0 * h)? + 8.0 * b_at(s + h)? - 8.0 * b_at(s - h)? + b_at(s - 2.0 * h)?) / (12.0 * h);
    let p = regime_reference(s, consts)?;
    let a = consts.a_of_z(p.z);
    let log = s.ln();
    let envelope = 1.0 / (s * s * log.powf(1.5));
    Ok(RegimeResidual {
        s,
        conformal: (bdot + p.b * p.b - a).abs() / envelope,
        interaction: (a + 1.0 / (s * s * log)).abs() / envelope,
    })
}

/// Final data with `ζ(z_in) = s_in + ζ♯ s_in log^{−1/2}s_in`, `γ = β = 0`.
pub fn final_data(s_in: f64, zeta_sharp: f64, consts: &GeometryConstants) -> Result<ParamState> {
    if !(s_in > 10.0) {
        return Err(Error::invalid(format!("s_in must exceed 10, got {s_in}")));
    }
    if !(-1.0..=1.0).contains(&zeta_sharp) {
        return Err(Error::invalid(format!("zeta_sharp must lie in [-1, 1], got {zeta_sharp}")));
    }
    let target = s_in + zeta_sharp * s_in / s_in.ln().sqrt();
    let kappa = consts.kappa;
    let ln_target = target.ln();
    let c0 = 0.5 * (2.0 / (kappa * consts.c_a)).ln();
    // ln ζ(z) is convex in z; start right of the root
    let g = |z: f64| c0 - 0.75 * z.ln() + 0.5 * kappa * z - ln_target;
    let mut z = 2.0 * (ln_target.abs() + c0.abs() + 10.0) / kappa;
    while g(z) <= 0.0 {
        z *= 2.0;
    }
    let z = newton(z, g, |z| 0.5 * kappa - 0.75 / z, "final data")?;
    if z <= 1.5 / kappa {
        return Err(Error::NewtonDivergence(format!("final data converged to the small root z = {z}")));
    }
    let b = (2.0 * consts.c_a / kappa).sqrt() * z.powf(-0.25) * (-0.5 * kappa * z).exp();
    Ok(ParamState::new(1.0 / s_in.ln(), z, 0.0, 0.0, b))
}

fn newton(mut z: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    for _ in 0..100 {
        let step = f(z) / df(z);
        if !step.is_finite() {
            return Err(Error::NewtonDivergence(format!("{what}: non-finite step at z = {z}")));
        }
        z -= step;
        if step.abs() <= 1e-12 * z.abs().max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::NewtonDivergence(format!("{what}: no convergence in 100 iterations")))
}

/// How a backward integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExitKind {
    ReachedS0,
    TubeExit {
        s_star: f64,
        band: TubeBand,
        /// Sign of `ζ(s*) − s*`.
        sign: i32,
        /// Finite-difference `dξ/ds` at `s*`; only meaningful for ζ-band exits.
        xi_slope: f64,
    },
}

impl ExitKind {
    pub fn survived(&self) -> bool {
        matches!(self, ExitKind::ReachedS0)
    }
}

/// Stored backward trajectory: accepted steps (decreasing `s`) plus dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub states: Vec<ReducedState>,
    steps: Vec<DenseStep<5>>,
    s_in: f64,
}

impl TrajectoryRecord {
    /// State at any `s` covered by the integration, via dense output.
    pub fn eval(&self, s: f64) -> Option<ParamState> {
        // steps run with decreasing s
        let idx = self.steps.partition_point(|st| st.t1() > s);
        let step = self.steps.get(idx).or_else(|| self.steps.last())?;
        step.covers(s).then(|| ParamState::from_array(step.eval(s)))
    }

    /// `t(s) = −∫_s^{s_in} λ²(σ) dσ` at every stored state.
    pub fn times(&self) -> Vec<f64> {
        let s: Vec<f64> = self.states.iter().map(|st| st.s).collect();
        let lambda: Vec<f64> = self.states.iter().map(|st| st.p.lambda).collect();
        time_map(&s, &lambda)
    }

    pub fn to_csv(&self, consts: &GeometryConstants) -> String {
        let t = self.times();
        let mut out = String::from("s,lambda,z,gamma,beta,b,a,zeta,xi,t\n");
        for (st, t) in self.states.iter().zip(t) {
            let p = &st.p;
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                st.s,
                p.lambda,
                p.z,
                p.gamma,
                p.beta,
                p.b,
                consts.a_of_z(p.z),
                zeta_of(p.z, consts),
                xi_of(st.s, p.z, consts),
                t
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path, consts: &GeometryConstants) -> Result<()> {
        std::fs::write(path, self.to_csv(consts))?;
        Ok(())
    }
}

/// Trapezoid quadrature of `t(s) = −∫_s^{s_in} λ²`, with `s` given in decreasing order from `s_in`.
pub fn time_map(s: &[f64], lambda: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    for i in 0..s.len() {
        if i > 0 {
            acc -= 0.5 * (lambda[i] * lambda[i] + lambda[i - 1] * lambda[i - 1]) * (s[i - 1] - s[i]);
        }
        t.push(acc);
    }
    t
}

/// Integrates the reduced flow from `(s_from, p)` to `s_to` in either direction, without tube checks.
pub fn integrate(p: &ParamState, s_from: f64, s_to: f64, consts: &GeometryConstants) -> Result<ParamState> {
    let f = |_s: f64, y: &[f64; 5]| rhs_array(y, consts);
    let mut ode = Dopri5::new(f, s_from, p.to_array(), 1e-3 * (s_to - s_from).abs(), TOLERANCES);
    while ode.t() != s_to {
        let cap = ode.t() + MAX_STEP_FRACTION * ode.t().abs() * (s_to - s_from).signum();
        let target = if (s_to - s_from) > 0.0 { cap.min(s_to) } else { cap.max(s_to) };
        ode.step(target)?;
    }
    Ok(ParamState::from_array(ode.y()))
}

/// Integrates backward from the final data until `s0` or the first tube violation.
pub fn integrate_backward(cfg: &ShootingConfig, zeta_sharp: f64, consts: &GeometryConstants) -> Result<(TrajectoryRecord, ExitKind)> {
    cfg.validate()?;
    let p_in = final_data(cfg.s_in, zeta_sharp, consts)?;
    let tube = cfg.tube;
    let mut record = TrajectoryRecord { states: vec![ReducedState { s: cfg.s_in, p: p_in }], steps: Vec::new(), s_in: cfg.s_in };

    // the endpoints ζ♯ = ±1 sit on the ζ-band boundary and exit immediately
    let start = tube.margins(cfg.s_in, &p_in, consts);
    if let Some(band) = first_violated(&start, -1e-12) {
        let exit = exit_at(&record, cfg.s_in, &p_in, band, consts);
        return Ok((record, exit));
    }

    let f = |_s: f64, y: &[f64; 5]| rhs_array(y, consts);
    let mut ode = Dopri5::new(f, cfg.s_in, p_in.to_array(), -1e-3 * cfg.s_in, TOLERANCES);
    while ode.t() > cfg.s0 {
        let target = (ode.t() * (1.0 - MAX_STEP_FRACTION)).max(cfg.s0);
        let step = ode.step(target)?;
        record.steps.push(step);
        if let Some((s_star, band)) = locate_exit(&step, &tube, consts) {
            let p_star = ParamState::from_array(step.eval(s_star));
            record.states.push(ReducedState { s: s_star, p: p_star });
            let exit = exit_at(&record, s_star, &p_star, band, consts);
            return Ok((record, exit));
        }
        record.states.push(ReducedState { s: step.t1(), p: ParamState::from_array(step.end()) });
    }
    Ok((record, ExitKind::ReachedS0))
}

fn first_violated(margins: &[f64; 4], slack: f64) -> Option<TubeBand> {
    TubeBand::ALL.iter().zip(margins).find(|(_, &m)| m > slack).map(|(&b, _)| b)
}

/// Earliest (largest `s`) band crossing inside a backward step, if any.
fn locate_exit(step: &DenseStep<5>, tube: &BootstrapTube, consts: &GeometryConstants) -> Option<(f64, TubeBand)> {
    const PROBES: usize = 8;
    let margin = |band, s: f64| tube.margin(band, s, &ParamState::from_array(step.eval(s)), consts);
    let mut best: Option<(f64, TubeBand)> = None;
    for band in TubeBand::ALL {
        // first probe point past the boundary, scanning from the step start
        let mut hi = step.t0;
        let mut lo = None;
        for j in 1..=PROBES {
            let s = if j == PROBES { step.t1() } else { step.t0 + step.h * j as f64 / PROBES as f64 };
            if margin(band, s) > 0.0 {
                lo = Some(s);
                break;
            }
            hi = s;
        }
        let Some(mut lo) = lo else { continue };
        let tol = EVENT_TOL.max(4.0 * f64::EPSILON * hi.abs());
        while hi - lo > tol {
            let mid = 0.5 * (hi + lo);
            if margin(band, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best.is_none_or(|(s, _)| hi > s) {
            best = Some((hi, band));
        }
    }
    best
}

fn exit_at(record: &TrajectoryRecord, s_star: f64, p: &ParamState, band: TubeBand, consts: &GeometryConstants) -> ExitKind {
    let sign = if zeta_of(p.z, consts) - s_star >= 0.0 { 1 } else { -1 };
    let xi_slope = xi_slope(record, s_star, consts);
    ExitKind::TubeExit { s_star, band, sign, xi_slope }
}

/// Finite-difference `dξ/ds` along the stored dense trajectory.
fn xi_slope(record: &TrajectoryRecord, s: f64, consts: &GeometryConstants) -> f64 {
    let xi = |t: f64| record.eval(t).map(|p| xi_of(t, p.z, consts));
    let h = 1e-5 * s;
    match (xi(s + h), xi(s - h)) {
        (Some(a), Some(b)) => (a - b) / (2.0 * h),
        (Some(a), None) => match xi(s) {
            Some(c) => (a - c) / h,
            None => f64::NAN,
        },
        // at s = s_in only the flow itself is available
        _ => {
            let p = record.eval(s).unwrap_or(record.states[0].p);
            let dzeta = zeta_of(p.z, consts) * (0.5 * consts.kappa - 0.75 / p.z) * rhs(&p, consts).z;
            let d = zeta_of(p.z, consts) - s;
            let log = s.ln();
            2.0 * d * (dzeta - 1.0) * log / (s * s) + d * d * (1.0 - 2.0 * log) / (s * s * s)
        }
    }
}

/// One evaluation of the shooting map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub zeta_sharp: f64,
    pub exit: ExitKind,
}

impl Shot {
    /// `−1`/`+1` for exits, `0` for survivors.
    pub fn sign(&self) -> i32 {
        match self.exit {
            ExitKind::ReachedS0 => 0,
            ExitKind::TubeExit { sign, .. } => sign,
        }
    }
}

/// Result of the bisection on `ζ♯`.
#[derive(Debug, Clone)]
pub struct ShootOutcome {
    pub zeta_sharp_star: f64,
    pub trajectory: TrajectoryRecord,
    pub survived: bool,
    /// Final bracket; both endpoints exit with opposite signs unless a survivor was found.
    pub bracket: [f64; 2],
    pub history: Vec<Shot>,
}

impl ShootOutcome {
    /// Whether the exit sign is non-decreasing in `ζ♯` over the whole history.
    pub fn sign_monotone(&self) -> bool {
        let mut shots = self.history.clone();
        shots.sort_by(|a, b| a.zeta_sharp.total_cmp(&b.zeta_sharp));
        shots.windows(2).all(|w| w[0].sign() <= w[1].sign())
    }

    /// ζ-band exits in the history whose `dξ/ds` is not negative.
    pub fn transversality_failures(&self) -> Vec<Shot> {
        self.history
            .iter()
            .filter(|shot| matches!(shot.exit, ExitKind::TubeExit { band: TubeBand::Zeta, xi_slope, .. } if !(xi_slope < 0.0)))
            .copied()
            .collect()
    }
}

/// Bisection on `ζ♯` by the sign of the tube exit.
pub fn shoot(cfg: &ShootingConfig, consts: &GeometryConstants) -> Result<ShootOutcome> {
    cfg.validate()?;
    let mut history = Vec::new();
    let run = |zs: f64, history: &mut Vec<Shot>| -> Result<(TrajectoryRecord, i32)> {
        let (traj, exit) = integrate_backward(cfg, zs, consts)?;
        let shot = Shot { zeta_sharp: zs, exit };
        history.push(shot);
        Ok((traj, shot.sign()))
    };
    let [mut lo, mut hi] = cfg.zeta_sharp_interval;
    let (lo_traj, lo_sign) = run(lo, &mut history)?;
    if lo_sign == 0 {
        return Ok(ShootOutcome { zeta_sharp_star: lo, trajectory: lo_traj, survived: true, bracket: [lo, hi], history });
    }
    let (hi_traj, hi_sign) = run(hi, &mut history)?;
    if hi_sign == 0 {
        return Ok(ShootOutcome { zeta_sharp_star: hi, trajectory: hi_traj, survived: true, bracket: [lo, hi], history });
    }
    if lo_sign == hi_sign {
        return Err(Error::SameSignEndpoints { sign: lo_sign });
    }
    let mut last = lo_traj;
    while hi - lo > cfg.bisection_tol {
        let mid = 0.5 * (lo + hi);
        let (traj, sign) = run(mid, &mut history)?;
        if sign == 0 {
            return Ok(ShootOutcome { zeta_sharp_star: mid, trajectory: traj, survived: true, bracket: [lo, hi], history });
        }
        if sign == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        last = traj;
    }
    Ok(ShootOutcome { zeta_sharp_star: 0.5 * (lo + hi), trajectory: last, survived: false, bracket: [lo, hi], history })
}
