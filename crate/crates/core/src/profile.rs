use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use std::io::{BufRead, Write};

/// Radial function sampled on a [`RadialGrid`] together with its r-derivative.
///
/// Off-grid values come from piecewise cubic Hermite interpolation; the profile is
/// treated as even in `r` and identically zero beyond `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || slopes.len() != grid.len() {
            return Err(Error::invalid("profile length does not match grid"));
        }
        if values.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return Err(Error::invalid("profile contains non-finite values"));
        }
        Ok(Self { grid, values, slopes })
    }

    /// Builds a profile of an even function, estimating slopes with fourth-order differences.
    pub fn from_values(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        let slopes = even_slopes(&values, grid.h());
        Self::new(grid, values, slopes)
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()], slopes: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Applies `f(r, value)` node by node and re-estimates slopes.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let v = self.values.iter().enumerate().map(|(i, &v)| f(self.grid.r(i), v)).collect();
        Self::from_values(self.grid, v)
    }

    /// Interpolated value at radius `r` (any sign; even extension).
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_slope(r).0
    }

    /// Interpolated value and r-derivative at `r >= 0`.
    pub fn eval_with_slope(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let h = self.grid.h();
        let last = self.grid.len() - 1;
        let x = r / h;
        if x >= last as f64 {
            return if x == last as f64 { (self.values[last], self.slopes[last]) } else { (0.0, 0.0) };
        }
        let i = x as usize;
        let t = x - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
        let dh00 = 6.0 * t2 - 6.0 * t;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = -6.0 * t2 + 6.0 * t;
        let dh11 = 3.0 * t2 - 2.0 * t;
        let dv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
        (v, dv)
    }

    /// `∫ f² dx` over the plane.
    pub fn l2_sq(&self) -> f64 {
        self.inner(self)
    }

    /// Real 2D pairing `∫ f g dx` of two radial profiles on the same grid.
    pub fn inner(&self, other: &RadialProfile) -> f64 {
        self.grid
            .area_weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.grid.r(i), v)?;
        }
        Ok(())
    }

    /// Reads a `r,value` table written by [`RadialProfile::write_csv`]; `#` lines are skipped.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rs = Vec::new();
        let mut vs = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !seen_header {
                seen_header = true;
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing field", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            rs.push(next()?);
            vs.push(next()?);
        }
        if rs.len() < 3 {
            return Err(Error::Parse("profile needs at least 3 rows".into()));
        }
        let grid = RadialGrid::new(*rs.last().unwrap(), rs.len())?;
        Self::from_values(grid, vs)
    }
}

/// Fourth-order central slopes of an even function sampled at `r_i = i h`; the last node is one-sided.
pub(crate) fn even_slopes(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let at = |j: isize| -> f64 {
        if j < 0 {
            v[(-j) as usize]
        } else if (j as usize) < n {
            v[j as usize]
        } else {
            // linear extrapolation past the outer node
            let k = n - 1;
            let e = j as usize - k;
            v[k] + e as f64 * (v[k] - v[k - 1])
        }
    };
    (0..n as isize)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h)
            }
        })
        .collect()
}
