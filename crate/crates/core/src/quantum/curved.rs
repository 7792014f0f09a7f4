use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::chebyshev;
use super::grid::{angular_modes, from_modes, to_modes, transpose, Grid};
use super::operator::{Coefficients, SpectralOperator};
use super::state::CurvedState;
use super::tridiag;
use crate::error::{Error, Result};
use crate::geometry::{Potential, ScatteringMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Second-order differences in `r`, Crank–Nicolson in time, angular
    /// coupling by Strang splitting.
    CrankNicolson,
    /// Sine/Fourier pseudo-spectral in space, Chebyshev expansion in time.
    Spectral,
}

/// Complex absorbing potential `−iW` on a layer at each radial end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Absorber {
    /// Layer width as a fraction of the radial domain.
    pub width_frac: f64,
    /// Peak of `W` at the domain ends; `W` rises quadratically across the layer.
    pub strength: f64,
}

impl Default for Absorber {
    fn default() -> Self {
        Self { width_frac: 0.1, strength: 50.0 }
    }
}

impl Absorber {
    pub fn profile(&self, grid: &Grid, r: f64) -> f64 {
        let (lo, hi) = (grid.r0 - grid.dr, grid.r_last() + grid.dr);
        let w = self.width_frac * (hi - lo);
        let d = ((lo + w - r).max(r - (hi - w))).max(0.0) / w;
        self.strength * d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Outer time step (absorber splitting and Crank–Nicolson step).
    pub dt: f64,
    pub t_total: f64,
    pub scheme: Scheme,
    pub absorber: Option<Absorber>,
    /// Largest admissible `dt·λ` over the resolved band (8 points per
    /// wavelength) for Crank–Nicolson.
    pub phase_budget: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_total: 1.0, scheme: Scheme::Spectral, absorber: None, phase_budget: 0.5 }
    }
}

enum Engine {
    CrankNicolson,
    Spectral(SpectralOperator),
}

/// `e^{−itH}` for `H = −Δ_g + V` on a fixed Dirichlet grid. Immutable after setup.
pub struct CurvedPropagator {
    co: Coefficients,
    cfg: EvolutionConfig,
    engine: Engine,
    w_abs: Vec<f64>,
    bounds: (f64, f64),
}

/// Iteration cap of the angular Crank–Nicolson solve.
const ANGULAR_ITER: usize = 200;

impl CurvedPropagator {
    pub fn new(metric: &ScatteringMetric, potential: Option<&Potential>, grid: Grid, cfg: EvolutionConfig) -> Result<Self> {
        if !(cfg.dt > 0.0) || !(cfg.phase_budget > 0.0) {
            return Err(Error::Config(format!("dt and phase budget must be positive, got {} and {}", cfg.dt, cfg.phase_budget)));
        }
        if let Some(a) = cfg.absorber {
            if !(a.width_frac > 0.0 && a.width_frac < 0.5 && a.strength >= 0.0) {
                return Err(Error::Config(format!("absorber needs width in (0, 0.5) and strength >= 0, got {a:?}")));
            }
        }
        let co = Coefficients::new(metric, potential, grid)?;
        let w_abs = (0..grid.len())
            .map(|n| cfg.absorber.map_or(0.0, |a| a.profile(&grid, grid.r(n % grid.n_r))))
            .collect();
        let mut bounds = co.spectral_bounds();
        let engine = match cfg.scheme {
            Scheme::CrankNicolson => {
                let res = co.symbol_bound(PI / (4.0 * grid.dr), (grid.n_theta / 8) as f64);
                let required = cfg.phase_budget / res;
                if cfg.dt > required {
                    return Err(Error::Budget { dt: cfg.dt, required });
                }
                Engine::CrankNicolson
            }
            Scheme::Spectral => {
                let op = SpectralOperator::new(co.clone());
                // the symbol estimate can miss variable-coefficient effects
                bounds.1 = bounds.1.max(1.1 * op.power_estimate(60));
                Engine::Spectral(op)
            }
        };
        Ok(Self { co, cfg, engine, w_abs, bounds })
    }

    pub fn grid(&self) -> Grid {
        self.co.grid
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.cfg
    }

    /// `w = g^{1/4} u`.
    fn to_half_density(&self, u: &CurvedState) -> Result<Vec<Complex64>> {
        if u.grid != self.co.grid {
            return Err(Error::GridMismatch("state and propagator grids differ".into()));
        }
        Ok(u.data.iter().zip(&self.co.a).map(|(z, a)| z / a).collect())
    }

    fn from_half_density(&self, w: &[Complex64], like: &CurvedState) -> CurvedState {
        let mut out = like.clone();
        out.data.iter_mut().zip(w.iter().zip(&self.co.a)).for_each(|(o, (z, a))| *o = z * a);
        out
    }

    /// `e^{−itH} u`; negative `t` runs backwards (the absorber still damps).
    pub fn evolve(&self, u: &CurvedState, t: f64) -> Result<CurvedState> {
        Ok(self.evolve_sampled(u, &[t])?.pop().expect("one sample"))
    }

    /// States at the given times, which must be monotone away from `0`.
    pub fn evolve_sampled(&self, u: &CurvedState, times: &[f64]) -> Result<Vec<CurvedState>> {
        let sign = times.iter().find(|t| **t != 0.0).map_or(1.0, |t| t.signum());
        let mut prev = 0.0;
        for &t in times {
            if t * sign < prev * sign || (t != 0.0 && t.signum() != sign) {
                return Err(Error::Domain("sample times must move monotonically away from 0".into()));
            }
            prev = t;
        }
        let mut w = self.to_half_density(u)?;
        let mut modes = false;
        let mut planner = FftPlanner::new();
        let mut now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let span = t - now;
            if span != 0.0 {
                let steps = (span.abs() / self.cfg.dt).ceil().max(1.0) as usize;
                let tau = span / steps as f64;
                match &self.engine {
                    Engine::Spectral(op) => {
                        for _ in 0..steps {
                            self.spectral_step(op, tau, &mut w);
                        }
                    }
                    Engine::CrankNicolson if self.co.rotational => {
                        if !modes {
                            w = to_modes(&self.co.grid, &w, &mut planner);
                            modes = true;
                        }
                        self.cn_modes(tau, steps, &mut w);
                    }
                    Engine::CrankNicolson => {
                        for _ in 0..steps {
                            self.cn_split_step(tau, &mut w, &mut planner)?;
                        }
                    }
                }
                now = t;
            }
            let snapshot = if modes { from_modes(&self.co.grid, &w, &mut planner) } else { w.clone() };
            out.push(self.from_half_density(&snapshot, u));
        }
        Ok(out)
    }

    fn damp(&self, tau: f64, w: &mut [Complex64]) {
        if self.cfg.absorber.is_some() {
            w.iter_mut().zip(&self.w_abs).for_each(|(z, a)| *z *= (-tau.abs() * a).exp());
        }
    }

    fn spectral_step(&self, op: &SpectralOperator, tau: f64, w: &mut [Complex64]) {
        self.damp(0.5 * tau, w);
        let apply = |src: &[Complex64], dst: &mut [Complex64]| op.apply(src, dst);
        chebyshev::propagate(&apply, self.bounds.0, self.bounds.1, tau, w);
        self.damp(0.5 * tau, w);
    }

    /// Radial tridiagonal `H̃` on θ line `row` plus `extra` on the diagonal;
    /// returns `(off, diag)`.
    fn radial_line(&self, row: usize, extra: &[f64], tau: f64) -> (Vec<f64>, Vec<Complex64>) {
        let g = self.co.grid;
        let n = g.n_r;
        let base = row * n;
        let a = &self.co.a[base..base + n];
        let b = &self.co.b_half[row * (n + 1)..(row + 1) * (n + 1)];
        let h2 = g.dr * g.dr;
        let s = tau.signum();
        let off: Vec<f64> = (0..n - 1).map(|i| -b[i + 1] * a[i] * a[i + 1] / h2).collect();
        let diag: Vec<Complex64> = (0..n)
            .map(|i| {
                let re = (b[i] + b[i + 1]) * a[i] * a[i] / h2 + self.co.v[base + i] + extra[i];
                Complex64::new(re, -s * self.w_abs[base + i])
            })
            .collect();
        (off, diag)
    }

    /// One Crank–Nicolson step `(1 + iτH/2) w' = (1 − iτH/2) w` on a line.
    fn cn_line(off: &[f64], diag: &[Complex64], tau: f64, w: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = diag.len();
        let half = Complex64::new(0.0, 0.5 * tau);
        let offc: Vec<Complex64> = off.iter().map(|o| half * o).collect();
        let lhs_diag: Vec<Complex64> = diag.iter().map(|d| 1.0 + half * d).collect();
        let mut hw = vec![Complex64::new(0.0, 0.0); n];
        let offr: Vec<Complex64> = off.iter().map(|&o| Complex64::new(o, 0.0)).collect();
        tridiag::apply(&offr, diag, &offr, w, &mut hw);
        w.iter_mut().zip(&hw).for_each(|(x, y)| *x -= half * y);
        tridiag::solve_in_place(&offc, &lhs_diag, &offc, w, scratch);
    }

    /// Rotationally symmetric case: every angular mode evolves by its own
    /// radial Crank–Nicolson step, no splitting.
    fn cn_modes(&self, tau: f64, steps: usize, w: &mut [Complex64]) {
        let g = self.co.grid;
        let n = g.n_r;
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        for (j, m) in angular_modes(g.n_theta).iter().enumerate() {
            let extra: Vec<f64> = (0..n).map(|i| m * m * self.co.a[i] * self.co.a[i] * self.co.c[i]).collect();
            let (off, diag) = self.radial_line(0, &extra, tau);
            let line = &mut w[j * n..(j + 1) * n];
            for _ in 0..steps {
                Self::cn_line(&off, &diag, tau, line, &mut scratch);
            }
        }
    }

    /// Strang step: angular half step, radial step per θ line, angular half step.
    fn cn_split_step(&self, tau: f64, w: &mut Vec<Complex64>, planner: &mut FftPlanner<f64>) -> Result<()> {
        let g = self.co.grid;
        self.cn_angular(0.5 * tau, w, planner)?;
        let n = g.n_r;
        let zero = vec![0.0; n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        for row in 0..g.n_theta {
            let (off, diag) = self.radial_line(row, &zero, tau);
            Self::cn_line(&off, &diag, tau, &mut w[row * n..(row + 1) * n], &mut scratch);
        }
        self.cn_angular(0.5 * tau, w, planner)
    }

    /// Crank–Nicolson for `−a∂_θ(c∂_θ(a·))` on every radius, solved by a
    /// fixed-point iteration preconditioned with the θ-averaged operator.
    fn cn_angular(&self, tau: f64, w: &mut Vec<Complex64>, planner: &mut FftPlanner<f64>) -> Result<()> {
        let g = self.co.grid;
        let (n, nt) = (g.n_r, g.n_theta);
        if nt == 1 {
            return Ok(());
        }
        let fwd = planner.plan_fft_forward(nt);
        let inv = planner.plan_fft_inverse(nt);
        let m = angular_modes(nt);
        let half = Complex64::new(0.0, 0.5 * tau);
        let mut wt = transpose(w, nt, n);
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        let spectral_d = |v: &mut [Complex64]| {
            fwd.process(v);
            let s = 1.0 / nt as f64;
            v.iter_mut().zip(&m).for_each(|(z, mm)| *z *= Complex64::new(0.0, mm * s));
            inv.process(v);
        };
        for i in 0..n {
            let a: Vec<f64> = (0..nt).map(|k| self.co.a[k * n + i]).collect();
            let c: Vec<f64> = (0..nt).map(|k| self.co.c[k * n + i]).collect();
            let mean = a.iter().zip(&c).map(|(x, y)| x * x * y).sum::<f64>() / nt as f64;
            let mut apply = |src: &[Complex64], dst: &mut [Complex64]| {
                buf.iter_mut().zip(src.iter().zip(&a)).for_each(|(b, (s, x))| *b = s * x);
                spectral_d(&mut buf);
                buf.iter_mut().zip(&c).for_each(|(b, x)| *b *= x);
                spectral_d(&mut buf);
                dst.iter_mut().zip(buf.iter().zip(&a)).for_each(|(d, (b, x))| *d = -b * x);
            };
            let line = &mut wt[i * nt..(i + 1) * nt];
            let mut aw = vec![Complex64::new(0.0, 0.0); nt];
            apply(line, &mut aw);
            let rhs: Vec<Complex64> = line.iter().zip(&aw).map(|(x, y)| x - half * y).collect();
            // precondition with P = 1 + iτ/2·mean·m², diagonal in modes
            let precond = |v: &mut Vec<Complex64>| {
                fwd.process(v);
                let s = 1.0 / nt as f64;
                v.iter_mut().zip(&m).for_each(|(z, mm)| *z *= s / (1.0 + half * mean * mm * mm));
                inv.process(v);
            };
            let mut x: Vec<Complex64> = rhs.clone();
            precond(&mut x);
            let scale = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
            let mut converged = false;
            for _ in 0..ANGULAR_ITER {
                apply(&x, &mut aw);
                // r = rhs − (1 + iτ/2 A) x, update x += P⁻¹ r
                let mut res: Vec<Complex64> =
                    rhs.iter().zip(x.iter().zip(&aw)).map(|(b, (xx, ax))| b - xx - half * ax).collect();
                let rn = res.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if rn <= 1e-14 * scale {
                    converged = true;
                    break;
                }
                precond(&mut res);
                x.iter_mut().zip(&res).for_each(|(a, b)| *a += b);
            }
            if !converged {
                return Err(Error::Budget { dt: 2.0 * tau.abs(), required: tau.abs() });
            }
            line.copy_from_slice(&x);
        }
        *w = transpose(&wt, n, nt);
        Ok(())
    }
}
