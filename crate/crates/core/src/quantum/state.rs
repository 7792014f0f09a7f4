use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{angular_modes, to_modes, Grid};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMetric, ScatteringMetric, CHART_EDGE};

/// A state on `M_free = ℝ × S¹` with inner product `∫ u v̄ √h dr dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeState {
    pub grid: Grid,
    pub boundary: BoundaryMetric,
    pub data: Vec<Complex64>,
}

/// A state on the end `(r, θ)`, `r > 1`, with inner product `∫ u v̄ √g dr dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvedState {
    pub grid: Grid,
    pub data: Vec<Complex64>,
    /// `√g` at every node, θ-major like `data`.
    pub weight: Vec<f64>,
}

fn weighted_inner(a: &[Complex64], b: &[Complex64], w: impl Fn(usize) -> f64, cell: f64) -> Complex64 {
    a.iter().zip(b).enumerate().map(|(n, (x, y))| x * y.conj() * w(n)).sum::<Complex64>() * cell
}

impl FreeState {
    pub fn zeros(grid: Grid, boundary: BoundaryMetric) -> Self {
        Self { grid, boundary, data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, boundary: BoundaryMetric, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let data = (0..grid.len()).map(|n| f(grid.r(n % grid.n_r), grid.theta(n / grid.n_r))).collect();
        Self { grid, boundary, data }
    }

    /// `√h(θ_k)` per angular node.
    pub fn sqrt_h(&self) -> Vec<f64> {
        (0..self.grid.n_theta).map(|k| self.boundary.h(self.grid.theta(k)).sqrt()).collect()
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.boundary.h(self.grid.theta(n / self.grid.n_r)).sqrt()
    }

    pub fn inner(&self, other: &FreeState) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("free states live on different grids".into()));
        }
        let s = self.sqrt_h();
        let n_r = self.grid.n_r;
        Ok(weighted_inner(&self.data, &other.data, |n| s[n / n_r], self.grid.cell()))
    }

    pub fn norm(&self) -> f64 {
        let s = self.sqrt_h();
        let n_r = self.grid.n_r;
        weighted_inner(&self.data, &self.data, |n| s[n / n_r], self.grid.cell()).re.sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|z| *z *= c);
    }

    /// `(⟨r⟩, ⟨θ⟩)` under `|u|²√h`, the angle as a circular mean.
    pub fn position_expectation(&self) -> (f64, f64) {
        let s = self.sqrt_h();
        position_moments(&self.grid, &self.data, |n| s[n / self.grid.n_r])
    }

    /// `(⟨ε D_r⟩, ⟨ε D_θ⟩)` from the discrete Fourier transform.
    pub fn momentum_expectation(&self, eps: f64) -> (f64, f64) {
        let s = self.sqrt_h();
        momentum_moments(&self.grid, &self.data, |n| s[n / self.grid.n_r], eps)
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        write_snapshot(path, "free", &self.grid, &self.data)
    }
}

impl CurvedState {
    pub fn zeros(metric: &ScatteringMetric, grid: Grid) -> Result<Self> {
        Self::from_fn(metric, grid, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn from_fn(metric: &ScatteringMetric, grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        if !(grid.r0 - grid.dr > CHART_EDGE) {
            return Err(Error::Domain(format!(
                "curved grid must stay in r > {CHART_EDGE}, first Dirichlet node at {}",
                grid.r0 - grid.dr
            )));
        }
        let mut data = Vec::with_capacity(grid.len());
        let mut weight = Vec::with_capacity(grid.len());
        for k in 0..grid.n_theta {
            let th = grid.theta(k);
            for i in 0..grid.n_r {
                let r = grid.r(i);
                data.push(f(r, th));
                weight.push(metric.sqrt_det(r, th));
            }
        }
        Ok(Self { grid, data, weight })
    }

    pub fn inner(&self, other: &CurvedState) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("curved states live on different grids".into()));
        }
        Ok(weighted_inner(&self.data, &other.data, |n| self.weight[n], self.grid.cell()))
    }

    pub fn norm(&self) -> f64 {
        weighted_inner(&self.data, &self.data, |n| self.weight[n], self.grid.cell()).re.sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|z| *z *= c);
    }

    pub fn position_expectation(&self) -> (f64, f64) {
        position_moments(&self.grid, &self.data, |n| self.weight[n])
    }

    /// `(⟨r cos θ⟩, ⟨r sin θ⟩)` under `|u|²√g`.
    pub fn cartesian_expectation(&self) -> [f64; 2] {
        let (mut x, mut y, mut m) = (0.0, 0.0, 0.0);
        for (n, z) in self.data.iter().enumerate() {
            let (k, i) = (n / self.grid.n_r, n % self.grid.n_r);
            let p = z.norm_sqr() * self.weight[n];
            let (s, c) = self.grid.theta(k).sin_cos();
            x += p * self.grid.r(i) * c;
            y += p * self.grid.r(i) * s;
            m += p;
        }
        [x / m, y / m]
    }

    /// Fraction of `Σ|u|²` carried by angular modes `|m| > m_cut`.
    pub fn angular_tail(&self, m_cut: usize) -> f64 {
        angular_tail(&self.grid, &self.data, m_cut)
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        write_snapshot(path, "curved", &self.grid, &self.data)
    }
}

fn position_moments(grid: &Grid, data: &[Complex64], w: impl Fn(usize) -> f64) -> (f64, f64) {
    let (mut r, mut c, mut s, mut m) = (0.0, 0.0, 0.0, 0.0);
    for (n, z) in data.iter().enumerate() {
        let p = z.norm_sqr() * w(n);
        let th = grid.theta(n / grid.n_r);
        r += p * grid.r(n % grid.n_r);
        c += p * th.cos();
        s += p * th.sin();
        m += p;
    }
    (r / m, s.atan2(c).rem_euclid(std::f64::consts::TAU))
}

fn momentum_moments(grid: &Grid, data: &[Complex64], w: impl Fn(usize) -> f64, eps: f64) -> (f64, f64) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(grid.n_r);
    let k = grid.radial_wavenumbers();
    let (mut num, mut den) = (0.0, 0.0);
    for row in 0..grid.n_theta {
        let mut line: Vec<Complex64> = data[row * grid.n_r..(row + 1) * grid.n_r].to_vec();
        fft.process(&mut line);
        let wt = w(row * grid.n_r);
        for (z, kk) in line.iter().zip(&k) {
            num += wt * kk * z.norm_sqr();
            den += wt * z.norm_sqr();
        }
    }
    let rho = eps * num / den;
    // angular part by the spectral derivative, weight kept pointwise
    let modes = to_modes(grid, data, &mut planner);
    let m = angular_modes(grid.n_theta);
    let mut dtheta = modes.clone();
    for (j, mj) in m.iter().enumerate() {
        for i in 0..grid.n_r {
            dtheta[grid.index(j, i)] *= Complex64::new(0.0, *mj);
        }
    }
    let dtheta = super::grid::from_modes(grid, &dtheta, &mut planner);
    let (mut a, mut b) = (0.0, 0.0);
    for (n, (u, du)) in data.iter().zip(&dtheta).enumerate() {
        a += w(n) * (u.conj() * du * Complex64::new(0.0, -1.0)).re;
        b += w(n) * u.norm_sqr();
    }
    (rho, eps * a / b)
}

pub(crate) fn angular_tail(grid: &Grid, data: &[Complex64], m_cut: usize) -> f64 {
    let mut planner = FftPlanner::new();
    let modes = to_modes(grid, data, &mut planner);
    let m = angular_modes(grid.n_theta);
    let (mut tail, mut total) = (0.0, 0.0);
    for (j, mj) in m.iter().enumerate() {
        let e: f64 = modes[j * grid.n_r..(j + 1) * grid.n_r].iter().map(|z| z.norm_sqr()).sum();
        total += e;
        // the zeroed Nyquist entry counts as the top mode
        if mj.abs() > m_cut as f64 || (2 * j == grid.n_theta) {
            tail += e;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// CSV dump: a `#` header with the grid, then `mode,r,re,im` per angular
/// Fourier coefficient.
fn write_snapshot(path: &Path, kind: &str, grid: &Grid, data: &[Complex64]) -> Result<()> {
    let mut planner = FftPlanner::new();
    let modes = to_modes(grid, data, &mut planner);
    let m = angular_modes(grid.n_theta);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# {kind} r0={} dr={} n_r={} n_theta={}", grid.r0, grid.dr, grid.n_r, grid.n_theta)?;
    writeln!(f, "mode,r,re,im")?;
    for (j, mj) in m.iter().enumerate() {
        let mode = if 2 * j == grid.n_theta { grid.n_theta as i64 / 2 } else { *mj as i64 };
        for i in 0..grid.n_r {
            let z = modes[grid.index(j, i)];
            writeln!(f, "{mode},{},{:e},{:e}", grid.r(i), z.re, z.im)?;
        }
    }
    f.flush()?;
    Ok(())
}
