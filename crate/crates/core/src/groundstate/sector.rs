use crate::error::{Error, Result};
use crate::profile::RadialProfile;
use serde::{Deserialize, Serialize};

/// Which linearized operator a sector discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    /// `L₊ = −Δ + 1 − 3Q²`
    Plus,
    /// `L₋ = −Δ + 1 − Q²`
    Minus,
}

impl OperatorKind {
    fn coupling(self) -> f64 {
        match self {
            OperatorKind::Plus => 3.0,
            OperatorKind::Minus => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OperatorKind::Plus => "plus",
            OperatorKind::Minus => "minus",
        }
    }
}

/// Symmetric banded matrix with two off-diagonals.
#[derive(Debug, Clone)]
pub(crate) struct Band5 {
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Band5 {
    fn zeros(n: usize) -> Self {
        Self { d0: vec![0.0; n], d1: vec![0.0; n.saturating_sub(1)], d2: vec![0.0; n.saturating_sub(2)] }
    }

    pub fn len(&self) -> usize {
        self.d0.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        match b - a {
            0 => self.d0[a],
            1 => self.d1[a],
            2 => self.d2[a],
            _ => 0.0,
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.d0[i] * x[i];
            if i >= 1 {
                acc += self.d1[i - 1] * x[i - 1];
            }
            if i >= 2 {
                acc += self.d2[i - 2] * x[i - 2];
            }
            if i + 1 < n {
                acc += self.d1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc += self.d2[i] * x[i + 2];
            }
            y[i] = acc;
        }
        y
    }
}

/// `LDLᵀ` factorization of a symmetric pentadiagonal matrix without pivoting.
///
/// The signs of `D` give the inertia by Sylvester's law; exact zero pivots are nudged.
pub(crate) struct BandLdl {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandLdl {
    pub fn factor(a: &Band5, shift: f64, mass: &[f64]) -> Self {
        let n = a.len();
        let mut d = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        let tiny = f64::MIN_POSITIVE.sqrt();
        for i in 0..n {
            let mut diag = a.d0[i] - shift * mass[i];
            if i >= 2 {
                l2[i] = a.d2[i - 2] / d[i - 2];
                diag -= l2[i] * l2[i] * d[i - 2];
            }
            if i >= 1 {
                let mut off = a.d1[i - 1];
                if i >= 2 {
                    off -= l2[i] * l1[i - 1] * d[i - 2];
                }
                l1[i] = off / d[i - 1];
                diag -= l1[i] * l1[i] * d[i - 1];
            }
            d[i] = if diag == 0.0 { tiny } else { diag };
        }
        Self { d, l1, l2 }
    }

    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.d.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n {
            if i >= 1 {
                y[i] -= self.l1[i] * y[i - 1];
            }
            if i >= 2 {
                y[i] -= self.l2[i] * y[i - 2];
            }
        }
        for (yi, di) in y.iter_mut().zip(&self.d) {
            *yi /= di;
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                y[i] -= self.l1[i + 1] * y[i + 1];
            }
            if i + 2 < n {
                y[i] -= self.l2[i + 2] * y[i + 2];
            }
        }
        y
    }
}

/// Discretization of `−∂rr − (1/r)∂r + m²/r² + 1 − cQ²` in angular sector `m`.
///
/// The radial Laplacian is the Richardson combination `(4 A_h − A_2h)/3` of two
/// conservative flux stencils with spacings `h` and `2h`; each is symmetric in the
/// `r dr` measure, so the combination is a symmetric pentadiagonal matrix of fourth
/// order. Unknowns are the nodes `first..n−1`: the outer node carries the Dirichlet
/// condition, node 0 is free for `m = 0` (Neumann) and pinned for `m ≥ 1`.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    harmonic: usize,
    kind: OperatorKind,
    h: f64,
    first: usize,
    stiffness: Band5,
    weights: Vec<f64>,
    potential: Vec<f64>,
}

impl SectorOperator {
    pub fn new(q: &RadialProfile, harmonic: usize, kind: OperatorKind) -> Self {
        let grid = q.grid();
        let n_all = grid.len();
        let h = grid.h();
        let first = if harmonic == 0 { 0 } else { 1 };
        let n = n_all - 1 - first;
        let mut k = Band5::zeros(n);
        // local index of a global node, None for pinned nodes
        let local = |g: usize| -> Option<usize> { (g >= first && g < n_all - 1).then(|| g - first) };
        let mut add_face = |a: usize, b: usize, coef: f64| {
            let (la, lb) = (local(a), local(b));
            if let Some(i) = la {
                k.d0[i] += coef;
            }
            if let Some(j) = lb {
                k.d0[j] += coef;
            }
            if let (Some(i), Some(j)) = (la, lb) {
                match j - i {
                    1 => k.d1[i] -= coef,
                    2 => k.d2[i] -= coef,
                    _ => unreachable!(),
                }
            }
        };
        for a in 0..n_all - 1 {
            let r_face = (a as f64 + 0.5) * h;
            add_face(a, a + 1, 4.0 / 3.0 * r_face / h);
        }
        for a in 0..n_all - 1 {
            let r_face = (a + 1) as f64 * h;
            add_face(a, a + 2, -r_face / (12.0 * h));
        }
        let m2 = (harmonic * harmonic) as f64;
        let c = kind.coupling();
        let qv = q.values();
        let mut weights = Vec::with_capacity(n);
        let mut potential = Vec::with_capacity(n);
        for g in first..n_all - 1 {
            let r = grid.r(g);
            if g == 0 {
                weights.push(h * h / 12.0);
                potential.push(1.0 - c * qv[0] * qv[0]);
            } else {
                weights.push(h * r);
                potential.push(m2 / (r * r) + 1.0 - c * qv[g] * qv[g]);
            }
        }
        Self { harmonic, kind, h, first, stiffness: k, weights, potential }
    }

    pub fn harmonic(&self) -> usize {
        self.harmonic
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Global grid index of the first unknown.
    pub fn first_node(&self) -> usize {
        self.first
    }

    /// Quadrature weights of the unknowns (without the 2π factor).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `W·A` as a symmetric band matrix.
    pub(crate) fn weighted(&self) -> Band5 {
        let mut m = self.stiffness.clone();
        for i in 0..self.dim() {
            m.d0[i] += self.weights[i] * self.potential[i];
        }
        m
    }

    /// Restricts a full-grid nodal vector to the unknowns.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        full[self.first..self.first + self.dim()].to_vec()
    }

    /// Extends unknowns to a full-grid vector with zeros at pinned nodes.
    pub fn extend(&self, u: &[f64], n_all: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_all];
        out[self.first..self.first + u.len()].copy_from_slice(u);
        out
    }

    /// Applies the operator to a vector of unknowns.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let ku = self.stiffness.mul(u);
        ku.iter()
            .zip(&self.weights)
            .zip(u.iter().zip(&self.potential))
            .map(|((k, w), (x, v))| k / w + v * x)
            .collect()
    }

    /// `2π Σ w_i f_i g_i`
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        2.0 * std::f64::consts::PI * self.weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| w * a * b).sum::<f64>()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// Solves `A u = f` by banded `LDLᵀ`.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let m = self.weighted();
        let ldl = BandLdl::factor(&m, 0.0, &self.weights);
        let scale = m.d0.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if ldl.min_abs_pivot() < 1e-13 * scale {
            return Err(Error::SingularSystem(format!(
                "sector m={} ({}) has a near-zero pivot",
                self.harmonic,
                self.kind.label()
            )));
        }
        let rhs: Vec<f64> = f.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        Ok(ldl.solve(&rhs))
    }

    /// Symmetric form `W^{1/2} A W^{-1/2}` as a dense row-major matrix (for oracles).
    pub fn symmetric_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let m = self.weighted();
        let s: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                out[i * n + j] = m.entry(i, j) / (s[i] * s[j]);
            }
        }
        out
    }

    /// Gershgorin interval of the symmetric form.
    fn spectrum_bounds(&self) -> (f64, f64) {
        let m = self.weighted();
        let n = self.dim();
        let s: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let mut radius = 0.0;
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                if j != i {
                    radius += (m.entry(i, j) / (s[i] * s[j])).abs();
                }
            }
            let c = m.d0[i] / self.weights[i];
            lo = lo.min(c - radius);
            hi = hi.max(c + radius);
        }
        (lo, hi)
    }

    /// Number of eigenvalues below `lambda` of the operator restricted to the
    /// orthogonal complement of `constraints` (nodal vectors over the unknowns).
    pub fn count_below(&self, lambda: f64, constraints: &[Vec<f64>]) -> usize {
        let m = self.weighted();
        let ldl = BandLdl::factor(&m, lambda, &self.weights);
        let mut count = ldl.negative_count() as isize;
        let k = constraints.len();
        if k > 0 {
            let cols: Vec<Vec<f64>> = constraints
                .iter()
                .map(|c| c.iter().zip(&self.weights).map(|(x, w)| x * w).collect())
                .collect();
            let sols: Vec<Vec<f64>> = cols.iter().map(|c| ldl.solve(c)).collect();
            let mut g = vec![0.0; k * k];
            for a in 0..k {
                for b in 0..k {
                    g[a * k + b] = cols[a].iter().zip(&sols[b]).map(|(x, y)| x * y).sum();
                }
            }
            count += positive_eigen_count(&g, k) as isize - k as isize;
        }
        count.max(0) as usize
    }

    /// Smallest eigenvalue of the (optionally constrained) operator by inertia bisection.
    pub fn min_eigenvalue(&self, constraints: &[Vec<f64>], tol: f64) -> f64 {
        let (mut lo, mut hi) = self.spectrum_bounds();
        lo -= 1.0;
        hi += 1.0;
        while hi - lo > tol * (1.0 + lo.abs().min(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid, constraints) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Number of positive eigenvalues of a small symmetric matrix (k ≤ 2 in practice).
fn positive_eigen_count(g: &[f64], k: usize) -> usize {
    match k {
        0 => 0,
        1 => (g[0] > 0.0) as usize,
        2 => {
            let sym = 0.5 * (g[1] + g[2]);
            let tr = g[0] + g[3];
            let det = g[0] * g[3] - sym * sym;
            if det < 0.0 {
                1
            } else if tr > 0.0 {
                2
            } else {
                0
            }
        }
        _ => {
            let m = nalgebra::DMatrix::from_fn(k, k, |i, j| 0.5 * (g[i * k + j] + g[j * k + i]));
            m.symmetric_eigenvalues().iter().filter(|&&x| x > 0.0).count()
        }
    }
}
