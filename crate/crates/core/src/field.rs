//! Complex fields on a uniform periodic square grid and their spectral calculus.

use crate::error::{Error, Result};
use crate::fft::Radix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// `n × n` complex samples on `[−L, L)²`, stored row-major.
///
/// Entry `(i, j)` sits at `(x₁, x₂) = (−L + i·dx, −L + j·dx)` with `dx = 2L/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    n: usize,
    half_width: f64,
    data: Vec<Complex64>,
}

impl ComplexField2D {
    pub fn zeros(n: usize, half_width: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("grid size {n} must be a power of two >= 4")));
        }
        if !(half_width > 0.0) {
            return Err(Error::invalid("box half-width must be positive"));
        }
        Ok(Self { n, half_width, data: vec![Complex64::new(0.0, 0.0); n * n] })
    }

    /// Samples `f(x₁, x₂)` at every node (rows in parallel).
    pub fn from_fn(n: usize, half_width: f64, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Result<Self> {
        let mut out = Self::zeros(n, half_width)?;
        let dx = out.dx();
        let l = half_width;
        out.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let x1 = -l + i as f64 * dx;
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(x1, -l + j as f64 * dx);
            }
        });
        Ok(out)
    }

    pub fn from_data(n: usize, half_width: f64, data: Vec<Complex64>) -> Result<Self> {
        let mut out = Self::zeros(n, half_width)?;
        if data.len() != n * n {
            return Err(Error::invalid("field data length is not n*n"));
        }
        out.data = data;
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Same samples reinterpreted on a box of a different half-width.
    pub fn relabelled(&self, half_width: f64) -> Self {
        Self { n: self.n, half_width, data: self.data.clone() }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        Self { n: self.n, half_width: self.half_width, data: self.data.par_iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise `f(x₁, x₂, value)`.
    pub fn map_xy(&self, f: impl Fn(f64, f64, Complex64) -> Complex64 + Sync) -> Self {
        let n = self.n;
        let dx = self.dx();
        let l = self.half_width;
        let mut out = self.clone();
        out.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let x1 = -l + i as f64 * dx;
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(x1, -l + j as f64 * dx, *v);
            }
        });
        out
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64 + Sync) -> Self {
        debug_assert!(self.same_grid(other));
        Self {
            n: self.n,
            half_width: self.half_width,
            data: self.data.par_iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    /// `Σ f(x₁, x₂, u) dx²`, summed row by row in a fixed order.
    pub fn integrate(&self, f: impl Fn(f64, f64, Complex64) -> f64 + Sync) -> f64 {
        let n = self.n;
        let dx = self.dx();
        let l = self.half_width;
        let rows: Vec<f64> = self
            .data
            .par_chunks(n)
            .enumerate()
            .map(|(i, row)| {
                let x1 = -l + i as f64 * dx;
                row.iter().enumerate().map(|(j, &v)| f(x1, -l + j as f64 * dx, v)).sum()
            })
            .collect();
        rows.iter().sum::<f64>() * dx * dx
    }

    /// Real pairing `Re ∫ u v̄`.
    pub fn pairing(&self, other: &Self) -> f64 {
        debug_assert!(self.same_grid(other));
        let n = self.n;
        let rows: Vec<f64> = self
            .data
            .par_chunks(n)
            .zip(other.data.par_chunks(n))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum())
            .collect();
        rows.iter().sum::<f64>() * self.dx() * self.dx()
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, _, u| u.norm_sqr())
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn quartic(&self) -> f64 {
        self.integrate(|_, _, u| u.norm_sqr() * u.norm_sqr())
    }

    pub fn variance(&self) -> f64 {
        self.integrate(|x, y, u| (x * x + y * y) * u.norm_sqr())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.par_iter().map(|z| z.norm()).reduce(|| 0.0, f64::max)
    }

    /// Largest modulus on the outermost ring of nodes.
    pub fn edge_max(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0_f64;
        for k in 0..n {
            for (i, j) in [(0, k), (k, 0), (n - 1, k), (k, n - 1)] {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    /// Little-endian interleaved `(re, im)` f64 samples, row-major.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::with_capacity(16 * self.data.len());
        for z in &self.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R, n: usize, half_width: f64) -> Result<Self> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        if buf.len() != 16 * n * n {
            return Err(Error::Parse(format!("binary field has {} bytes, expected {}", buf.len(), 16 * n * n)));
        }
        let data = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Self::from_data(n, half_width, data)
    }

    /// Writes the binary samples to `path` and a JSON sidecar `path.json`.
    pub fn save(&self, path: &Path, extra: serde_json::Value) -> Result<()> {
        self.write_binary(std::io::BufWriter::new(std::fs::File::create(path)?))?;
        let meta = FieldMeta { n: self.n, half_width: self.half_width, extra };
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(side, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    /// Writes `x1,x2,value` rows for a real-valued view of the field.
    pub fn write_heatmap<W: Write>(&self, mut out: W, view: impl Fn(Complex64) -> f64) -> Result<()> {
        writeln!(out, "x1,x2,value")?;
        for i in 0..self.n {
            for j in 0..self.n {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", self.coord(i), self.coord(j), view(self.get(i, j)))?;
            }
        }
        Ok(())
    }
}

/// JSON sidecar of a binary field dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMeta {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(flatten)]
    pub extra: serde_json::Value,
}

/// 2D FFT for one grid size: row transforms plus a tiled transpose.
#[derive(Debug, Clone)]
pub struct Fft2 {
    n: usize,
    forward: Radix2,
    inverse: Radix2,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        Self { n, forward: Radix2::new(n, -1.0), inverse: Radix2::new(n, 1.0) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn rows(&self, data: &mut [Complex64], plan: &Radix2) {
        data.par_chunks_mut(self.n).for_each(|row| plan.process(row));
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.rows(data, &self.forward);
        self.forward.process_columns(data);
    }

    /// Inverse transform in place, including the `1/n²` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.rows(data, &self.inverse);
        self.inverse.process_columns(data);
        let s = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|z| *z *= s);
    }
}

/// Angular wavenumbers of an `n`-point periodic grid of length `2L`.
pub fn wavenumbers(n: usize, half_width: f64) -> Vec<f64> {
    let base = std::f64::consts::PI / half_width;
    (0..n).map(|j| if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * base).collect()
}

/// Spectral differentiation helpers bound to one grid.
#[derive(Debug, Clone)]
pub struct Spectral {
    fft: Fft2,
    k: Vec<f64>,
}

impl Spectral {
    pub fn new(n: usize, half_width: f64) -> Self {
        Self { fft: Fft2::new(n), k: wavenumbers(n, half_width) }
    }

    pub fn for_field(u: &ComplexField2D) -> Self {
        Self::new(u.n(), u.half_width())
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Multiplies the spectrum by `symbol(k₁, k₂)`.
    pub fn apply_symbol(&self, u: &ComplexField2D, symbol: impl Fn(f64, f64) -> Complex64 + Sync) -> ComplexField2D {
        let n = u.n();
        let mut data = u.data().to_vec();
        self.fft.forward(&mut data);
        let k = &self.k;
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= symbol(k[i], k[j]);
            }
        });
        self.fft.inverse(&mut data);
        ComplexField2D { n, half_width: u.half_width(), data }
    }

    pub fn laplacian(&self, u: &ComplexField2D) -> ComplexField2D {
        self.apply_symbol(u, |a, b| Complex64::new(-(a * a + b * b), 0.0))
    }

    /// `(∂₁u, ∂₂u)`; the Nyquist mode is dropped.
    pub fn gradient(&self, u: &ComplexField2D) -> (ComplexField2D, ComplexField2D) {
        let n = u.n();
        let nyq = self.k[n / 2];
        let odd = move |k: f64| if k == nyq { 0.0 } else { k };
        (
            self.apply_symbol(u, |a, _| Complex64::new(0.0, odd(a))),
            self.apply_symbol(u, |_, b| Complex64::new(0.0, odd(b))),
        )
    }

    /// `∫|∇u|²` by Parseval.
    pub fn grad_norm_sq(&self, u: &ComplexField2D) -> f64 {
        let n = u.n();
        let mut data = u.data().to_vec();
        self.fft.forward(&mut data);
        let k = &self.k;
        let rows: Vec<f64> = data
            .par_chunks(n)
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, v)| (k[i] * k[i] + k[j] * k[j]) * v.norm_sqr()).sum())
            .collect();
        let dx = u.dx();
        rows.iter().sum::<f64>() * dx * dx / (n * n) as f64
    }

    /// Fraction of `∫|û|²` carried by modes with `max(|k₁|, |k₂|)` in the upper third.
    pub fn upper_third_fraction(&self, u: &ComplexField2D) -> f64 {
        let n = u.n();
        let mut data = u.data().to_vec();
        self.fft.forward(&mut data);
        let kmax = self.k[n / 2].abs();
        let cut = 2.0 * kmax / 3.0;
        let k = &self.k;
        let (hi, total) = data
            .par_chunks(n)
            .enumerate()
            .map(|(i, row)| {
                let mut h = 0.0;
                let mut t = 0.0;
                for (j, v) in row.iter().enumerate() {
                    let e = v.norm_sqr();
                    t += e;
                    if k[i].abs().max(k[j].abs()) > cut {
                        h += e;
                    }
                }
                (h, t)
            })
            .collect::<Vec<_>>()
            .iter()
            .fold((0.0, 0.0), |(a, b), (h, t)| (a + h, b + t));
        if total == 0.0 {
            0.0
        } else {
            hi / total
        }
    }
}
