use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor grid `r_i = r0 + i·dr` (`i < n_r`) times `θ_k = 2πk/n_theta`.
///
/// Samples are stored θ-major: index `k·n_r + i`, so each radial line is
/// contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub r0: f64,
    pub dr: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Grid {
    pub fn new(r0: f64, dr: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(dr > 0.0) || !r0.is_finite() || n_r < 4 || n_theta == 0 {
            return Err(Error::Resolution(format!(
                "degenerate grid r0 = {r0}, dr = {dr}, n_r = {n_r}, n_theta = {n_theta}"
            )));
        }
        Ok(Self { r0, dr, n_r, n_theta })
    }

    /// Periodic radial grid for the free line: `n_r` cells covering `[r_min, r_max)`.
    pub fn periodic(r_min: f64, r_max: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        Self::new(r_min, (r_max - r_min) / n_r as f64, n_r, n_theta)
    }

    /// Interior nodes of `[r_a, r_b]`, endpoints excluded (Dirichlet nodes).
    pub fn dirichlet(r_a: f64, r_b: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        let dr = (r_b - r_a) / (n_r + 1) as f64;
        Self::new(r_a + dr, dr, n_r, n_theta)
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.dr
    }

    pub fn r_last(&self) -> f64 {
        self.r(self.n_r - 1)
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }

    pub fn index(&self, k: usize, i: usize) -> usize {
        k * self.n_r + i
    }

    /// Area element of the product quadrature.
    pub fn cell(&self) -> f64 {
        self.dr * self.dtheta()
    }

    /// Radial angular wavenumbers of the periodic FFT on `n_r` points.
    pub fn radial_wavenumbers(&self) -> Vec<f64> {
        wavenumbers(self.n_r, self.dr)
    }

    /// Offset of `other`'s first node in units of `self.dr`, if the radial
    /// nodes of `other` are a subset of ours.
    pub fn aligned_offset(&self, other: &Grid) -> Result<usize> {
        if self.n_theta != other.n_theta {
            return Err(Error::GridMismatch(format!(
                "angular resolutions differ ({} vs {})",
                self.n_theta, other.n_theta
            )));
        }
        if (self.dr - other.dr).abs() > 1e-12 * self.dr {
            return Err(Error::GridMismatch(format!("radial steps differ ({} vs {})", self.dr, other.dr)));
        }
        let s = (other.r0 - self.r0) / self.dr;
        let k = s.round();
        if (s - k).abs() > 1e-8 || k < 0.0 || k as usize + other.n_r > self.n_r {
            return Err(Error::GridMismatch(format!(
                "radial nodes of [{}, {}] are not a subset of [{}, {}]",
                other.r0,
                other.r_last(),
                self.r0,
                self.r_last()
            )));
        }
        Ok(k as usize)
    }
}

/// FFT-ordered angular wavenumbers `2π·j/(n·d)` with the Nyquist entry zeroed.
pub(crate) fn wavenumbers(n: usize, d: f64) -> Vec<f64> {
    let scale = TAU / (n as f64 * d);
    (0..n)
        .map(|j| {
            if 2 * j == n {
                0.0
            } else if 2 * j < n {
                j as f64 * scale
            } else {
                (j as f64 - n as f64) * scale
            }
        })
        .collect()
}

/// Integer angular modes in FFT order, Nyquist zeroed.
pub(crate) fn angular_modes(n: usize) -> Vec<f64> {
    wavenumbers(n, TAU / n as f64)
}

/// Wraps an angle difference into `(−π, π]`.
fn is_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

/// Smallest `n ≥ min` whose only prime factors are 2, 3 and 5.
pub fn fft_size(min: usize) -> usize {
    (min.max(1)..).find(|&n| is_smooth(n)).expect("smooth numbers are unbounded")
}

/// Smallest `n ≥ min` for which the sine-series length `2(n + 1)` is
/// FFT-friendly.
pub fn dirichlet_size(min: usize) -> usize {
    (min.max(4)..).find(|&n| is_smooth(n + 1)).expect("smooth numbers are unbounded")
}

pub(crate) fn wrap(d: f64) -> f64 {
    let w = d.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Transposes θ-major samples into r-major order and back.
pub(crate) fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for a in 0..rows {
        for b in 0..cols {
            out[b * rows + a] = data[a * cols + b];
        }
    }
    out
}

/// Angular Fourier coefficients per radius: returns `modes[m_index·n_r + i]`
/// with `m_index` in FFT order, normalised so that a pure `e^{imθ}` has
/// coefficient 1.
pub(crate) fn to_modes(grid: &Grid, data: &[Complex64], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut t = transpose(data, grid.n_theta, grid.n_r);
    let fft = planner.plan_fft_forward(grid.n_theta);
    fft.process(&mut t);
    let inv = 1.0 / grid.n_theta as f64;
    t.iter_mut().for_each(|z| *z *= inv);
    transpose(&t, grid.n_r, grid.n_theta)
}

pub(crate) fn from_modes(grid: &Grid, modes: &[Complex64], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut t = transpose(modes, grid.n_theta, grid.n_r);
    let fft = planner.plan_fft_inverse(grid.n_theta);
    fft.process(&mut t);
    transpose(&t, grid.n_r, grid.n_theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_fft_order() {
        let k = wavenumbers(4, 0.5);
        let s = TAU / 2.0;
        assert_eq!(k, vec![0.0, s, 0.0, -s]);
        assert_eq!(angular_modes(5), vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }

    #[test]
    fn alignment() {
        let a = Grid::new(-2.0, 0.1, 100, 8).unwrap();
        let b = Grid::new(1.0, 0.1, 20, 8).unwrap();
        assert_eq!(a.aligned_offset(&b).unwrap(), 30);
        let c = Grid::new(1.05, 0.1, 20, 8).unwrap();
        assert!(matches!(a.aligned_offset(&c), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn mode_round_trip() {
        let g = Grid::new(1.0, 0.1, 5, 8).unwrap();
        let mut planner = FftPlanner::new();
        let data: Vec<Complex64> = (0..g.len())
            .map(|n| {
                let (k, i) = (n / g.n_r, n % g.n_r);
                Complex64::from_polar(g.r(i), 3.0 * g.theta(k))
            })
            .collect();
        let m = to_modes(&g, &data, &mut planner);
        assert!((m[g.index(3, 2)] - Complex64::new(g.r(2), 0.0)).norm() < 1e-13);
        let back = from_modes(&g, &m, &mut planner);
        for (a, b) in back.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
