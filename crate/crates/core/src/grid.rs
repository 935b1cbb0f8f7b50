use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform radial grid `r_i = i h` on `[0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    n_points: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_max >= 20.0) || !r_max.is_finite() {
            return Err(Error::invalid(format!("r_max must be >= 20, got {r_max}")));
        }
        if n_points < 3 {
            return Err(Error::invalid("radial grid needs at least 3 nodes"));
        }
        Ok(Self { r_max, n_points })
    }

    /// Grid with spacing as close as possible to `h`.
    pub fn with_spacing(r_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("spacing must be positive"));
        }
        Self::new(r_max, (r_max / h).round() as usize + 1)
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn h(&self) -> f64 {
        self.r_max / (self.n_points - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.r(i)).collect()
    }

    /// Index of the node closest to `r`, clamped to the grid.
    pub fn nearest(&self, r: f64) -> usize {
        ((r / self.h()).round().max(0.0) as usize).min(self.n_points - 1)
    }

    /// Composite Simpson weights for `∫ f(r) 2πr dr` (trapezoid on a trailing odd interval).
    pub fn area_weights(&self) -> Vec<f64> {
        let n = self.n_points;
        let h = self.h();
        let mut w = vec![0.0; n];
        let intervals = n - 1;
        let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 2 };
        for i in (0..simpson_end).step_by(2) {
            w[i] += h / 3.0;
            w[i + 1] += 4.0 * h / 3.0;
            w[i + 2] += h / 3.0;
        }
        if simpson_end < n - 1 {
            w[n - 2] += h / 2.0;
            w[n - 1] += h / 2.0;
        }
        for (i, wi) in w.iter_mut().enumerate() {
            *wi *= 2.0 * std::f64::consts::PI * self.r(i);
        }
        w
    }
}
