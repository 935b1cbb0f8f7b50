use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::profile::RadialProfile;

/// Radius at which the forward shot is handed over to the inward tail integration.
const MATCH_RADIUS: f64 = 8.0;
const MAX_BISECTIONS: usize = 200;
const MAX_WIDENINGS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    /// Crosses zero: the initial value was too large.
    Overshoot,
    /// Turns back up before reaching zero: the initial value was too small.
    Undershoot,
    /// Stays positive and decreasing to the end of the grid.
    Decays,
}

fn rhs(r: f64, q: f64, p: f64) -> (f64, f64) {
    if r == 0.0 {
        (p, 0.5 * (q - q * q * q))
    } else {
        (p, -p / r + q - q * q * q)
    }
}

fn rk4(r: f64, q: f64, p: f64, h: f64) -> (f64, f64) {
    let (a1, b1) = rhs(r, q, p);
    let (a2, b2) = rhs(r + 0.5 * h, q + 0.5 * h * a1, p + 0.5 * h * b1);
    let (a3, b3) = rhs(r + 0.5 * h, q + 0.5 * h * a2, p + 0.5 * h * b2);
    let (a4, b4) = rhs(r + h, q + h * a3, p + h * b3);
    (q + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), p + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4))
}

fn classify(grid: &RadialGrid, q0: f64) -> Fate {
    let h = grid.h();
    let (mut q, mut p) = (q0, 0.0);
    for i in 0..grid.len() - 1 {
        let next = rk4(grid.r(i), q, p, h);
        q = next.0;
        p = next.1;
        if q < 0.0 {
            return Fate::Overshoot;
        }
        if p > 0.0 {
            return Fate::Undershoot;
        }
    }
    // a shot that neither crosses zero nor turns up must also have decayed; the
    // constant solution Q ≡ 1 is the degenerate undershoot
    if q < 1e-3 {
        Fate::Decays
    } else {
        Fate::Undershoot
    }
}

/// Bisects the peak value `Q(0)` until the bracket is narrower than `tol`.
pub fn shoot_peak(grid: &RadialGrid, tol: f64) -> Result<f64> {
    if !(tol >= 0.0) {
        return Err(Error::invalid("tolerance must be non-negative"));
    }
    let (mut lo, mut hi) = (1.0_f64, 4.0_f64);
    let mut widenings = 0;
    loop {
        let flo = classify(grid, lo);
        let fhi = classify(grid, hi);
        if flo == Fate::Decays {
            return Ok(lo);
        }
        if fhi == Fate::Decays {
            return Ok(hi);
        }
        if flo == Fate::Undershoot && fhi == Fate::Overshoot {
            break;
        }
        if widenings == MAX_WIDENINGS {
            return Err(Error::BracketNotFound { lo, hi });
        }
        widenings += 1;
        if flo != Fate::Undershoot {
            lo *= 0.5;
        }
        if fhi != Fate::Overshoot {
            hi *= 2.0;
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo < tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        match classify(grid, mid) {
            Fate::Overshoot => hi = mid,
            Fate::Undershoot => lo = mid,
            Fate::Decays => return Ok(mid),
        }
    }
    Err(Error::NonConvergence { what: format!("Q(0) bisection, bracket width {:e}", hi - lo), iterations: MAX_BISECTIONS })
}

/// Leading terms of `K0(r) e^r sqrt(2r/pi)` and of `-K0'(r) e^r sqrt(2r/pi)`.
fn bessel_k_tail(r: f64) -> (f64, f64) {
    let x = 1.0 / r;
    let k0 = 1.0 - x / 8.0 + 9.0 * x * x / 128.0 - 225.0 * x * x * x / 3072.0;
    let k1 = 1.0 + 3.0 * x / 8.0 - 15.0 * x * x / 128.0 + 315.0 * x * x * x / 3072.0;
    let env = r.powf(-0.5) * (-r).exp();
    (env * k0, -env * k1)
}

/// Ground state `Q` with slopes `Q'` on `grid`.
///
/// The peak is found by bisection on the shooting dichotomy. Since the forward shot
/// loses the decaying branch at large r, the profile beyond `MATCH_RADIUS` is rebuilt
/// by integrating the same ODE inward from Bessel-tail data, whose amplitude is
/// matched to the forward shot.
pub fn solve_ground_state(grid: &RadialGrid, tol: f64) -> Result<RadialProfile> {
    let q0 = shoot_peak(grid, tol)?;
    let n = grid.len();
    let h = grid.h();
    let ic = grid.nearest(MATCH_RADIUS);
    let mut q = vec![0.0; n];
    let mut p = vec![0.0; n];
    q[0] = q0;
    for i in 0..ic {
        let (a, b) = rk4(grid.r(i), q[i], p[i], h);
        q[i + 1] = a;
        p[i + 1] = b;
    }
    let (q_match, p_match) = (q[ic], p[ic]);
    let mut tail_q = vec![0.0; n];
    let mut tail_p = vec![0.0; n];
    let mut amplitude = q_match / bessel_k_tail(grid.r(ic)).0;
    for _ in 0..50 {
        let (k0, k1) = bessel_k_tail(grid.r_max());
        tail_q[n - 1] = amplitude * k0;
        tail_p[n - 1] = amplitude * k1;
        for i in (ic..n - 1).rev() {
            let (a, b) = rk4(grid.r(i + 1), tail_q[i + 1], tail_p[i + 1], -h);
            tail_q[i] = a;
            tail_p[i] = b;
        }
        let ratio = q_match / tail_q[ic];
        amplitude *= ratio;
        if (ratio - 1.0).abs() < 1e-15 {
            break;
        }
    }
    q[ic..].copy_from_slice(&tail_q[ic..]);
    p[ic + 1..].copy_from_slice(&tail_p[ic + 1..]);
    p[ic] = 0.5 * (p_match + tail_p[ic]);
    let profile = RadialProfile::new(*grid, q, p)?;
    check_ground_state_shape(&profile)?;
    Ok(profile)
}

fn check_ground_state_shape(q: &RadialProfile) -> Result<()> {
    let v = q.values();
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::invalid("ground state is not strictly positive"));
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("ground state is not strictly decreasing"));
    }
    if *v.last().unwrap() >= 1e-12 {
        return Err(Error::invalid("ground state does not decay below 1e-12 at r_max"));
    }
    Ok(())
}
