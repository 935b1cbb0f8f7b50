//! In-place radix-2 FFT for power-of-two lengths.
//!
//! Twiddles are evaluated directly for every stage and nudged so their modulus is 1 to the
//! last bit; the trivial rotations by ±1 and ±i are applied exactly. This keeps the
//! round-trip free of the systematic norm drift that fixed-constant butterflies introduce.

use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct Radix2 {
    n: usize,
    /// Stage twiddles laid out stage by stage: for half-length `h`, entries `h−1 .. 2h−1`.
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Radix2 {
    /// `sign = −1` for the forward transform, `+1` for the inverse.
    pub fn new(n: usize, sign: f64) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "radix-2 FFT needs a power of two >= 2");
        let mut twiddles = vec![Complex64::new(1.0, 0.0); n.max(2) - 1];
        let mut half = 1;
        while half < n {
            for k in 0..half {
                let theta = sign * std::f64::consts::PI * k as f64 / half as f64;
                twiddles[half - 1 + k] = exact_twiddle(k, half, sign).unwrap_or_else(|| unit_phase(theta));
            }
            half <<= 1;
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) }).collect();
        Self { n, twiddles, bitrev }
    }

    /// Unnormalized transform of one row.
    pub fn process(&self, a: &mut [Complex64]) {
        debug_assert_eq!(a.len(), self.n);
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                a.swap(i, j);
            }
        }
        // the first stage has unit twiddles only
        for pair in a.chunks_exact_mut(2) {
            let (x, y) = (pair[0], pair[1]);
            pair[0] = x + y;
            pair[1] = x - y;
        }
        let mut half = 2;
        while half < self.n {
            let w = &self.twiddles[half - 1..2 * half - 1];
            for block in a.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((x, y), &t) in lo.iter_mut().zip(hi.iter_mut()).zip(w) {
                    let v = *y * t;
                    *y = *x - v;
                    *x += v;
                }
            }
            half <<= 1;
        }
    }
}

impl Radix2 {
    /// Transforms along the first axis of a row-major `n × n` block, one stage at a time over
    /// whole rows so the inner loops run over contiguous memory.
    pub fn process_columns(&self, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                let (head, tail) = data.split_at_mut(j * n);
                head[i * n..(i + 1) * n].swap_with_slice(&mut tail[..n]);
            }
        }
        let mut half = 1;
        while half < n {
            let w = &self.twiddles[half - 1..2 * half - 1];
            data.par_chunks_mut(2 * half * n).for_each(|block| {
                let (lo, hi) = block.split_at_mut(half * n);
                for ((xs, ys), &t) in lo.chunks_exact_mut(n).zip(hi.chunks_exact_mut(n)).zip(w) {
                    if t == Complex64::new(1.0, 0.0) {
                        for (x, y) in xs.iter_mut().zip(ys.iter_mut()) {
                            let v = *y;
                            *y = *x - v;
                            *x += v;
                        }
                    } else {
                        for (x, y) in xs.iter_mut().zip(ys.iter_mut()) {
                            let v = *y * t;
                            *y = *x - v;
                            *x += v;
                        }
                    }
                }
            });
            half <<= 1;
        }
    }
}

/// Rotations by multiples of π/2 are exact in floating point.
fn exact_twiddle(k: usize, half: usize, sign: f64) -> Option<Complex64> {
    if k == 0 {
        Some(Complex64::new(1.0, 0.0))
    } else if 2 * k == half {
        Some(Complex64::new(0.0, sign))
    } else {
        None
    }
}

/// `e^{iθ}` with `cos` and `sin` nudged by a few ulps so that `c² + s²` is as close to 1 as
/// the format allows.
pub(crate) fn unit_phase(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    let defect = |c: f64, s: f64| {
        let (hc, hs) = (c * c, s * s);
        let (lc, ls) = (c.mul_add(c, -hc), s.mul_add(s, -hs));
        ((hc - 1.0) + hs) + (lc + ls)
    };
    let nudge = |x: f64, k: i32| match k {
        -2 => x.next_down().next_down(),
        -1 => x.next_down(),
        1 => x.next_up(),
        2 => x.next_up().next_up(),
        _ => x,
    };
    let mut best = (defect(c, s).abs(), c, s);
    for i in -2..=2 {
        for j in -2..=2 {
            let (ci, sj) = (nudge(c, i), nudge(s, j));
            let d = defect(ci, sj).abs();
            if d < best.0 {
                best = (d, ci, sj);
            }
        }
    }
    Complex64::new(best.1, best.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(a: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = a.len();
        (0..n)
            .map(|k| {
                a.iter()
                    .enumerate()
                    .map(|(j, &x)| x * Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [2usize, 4, 8, 64, 256] {
            let a: Vec<Complex64> = (0..n).map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos())).collect();
            for sign in [-1.0, 1.0] {
                let mut b = a.clone();
                Radix2::new(n, sign).process(&mut b);
                let want = naive_dft(&a, sign);
                let err = b.iter().zip(&want).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(err < 1e-12 * n as f64, "n = {n}: {err}");
            }
        }
    }

    #[test]
    fn unit_phase_has_unit_modulus() {
        for k in 0..1000 {
            let z = unit_phase(k as f64 * 0.0123);
            assert!((z.norm_sqr() - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
    }
}
