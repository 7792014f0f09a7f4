//! `H = −Δ_g + V` on a Dirichlet grid, written for the half-density
//! `w = g^{1/4} u` so that the weighted inner product becomes a plain sum:
//! `H̃ w = −a ∂_r(b ∂_r(a w)) − a ∂_θ(c ∂_θ(a w)) + V w` with
//! `a = g^{-1/4}`, `b = g^{rr}√g`, `c = g^{θθ}√g`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{angular_modes, transpose, wavenumbers, Grid};
use crate::error::{Error, Result};
use crate::geometry::{Potential, ScatteringMetric};

/// Node values of the half-density coefficients.
#[derive(Debug, Clone)]
pub(crate) struct Coefficients {
    pub grid: Grid,
    /// `g^{-1/4}` at nodes, θ-major.
    pub a: Vec<f64>,
    /// `g^{θθ}√g` at nodes, θ-major.
    pub c: Vec<f64>,
    pub v: Vec<f64>,
    /// `g^{rr}√g` at half nodes `r0 + (i − ½)dr`, `i = 0..=n_r`, per θ line.
    pub b_half: Vec<f64>,
    /// `g^{rr}√g` at the nodes including both Dirichlet nodes, `n_r + 2` per line.
    pub b_node: Vec<f64>,
    pub rotational: bool,
}

impl Coefficients {
    pub fn new(metric: &ScatteringMetric, potential: Option<&Potential>, grid: Grid) -> Result<Self> {
        if metric.has_order(1) {
            return Err(Error::Unsupported(
                "mixed dr dθ terms (m¹) are not supported by the wave propagators".into(),
            ));
        }
        let (n_r, n_t) = (grid.n_r, grid.n_theta);
        let flux = |r: f64, th: f64| -> Result<(f64, f64, f64)> {
            let [m0, _, m2, h] = metric.components(r, th);
            let delta = (1.0 + m0) * (h + m2);
            if !(delta > 0.0 && 1.0 + m0 > 0.0) || !delta.is_finite() {
                return Err(Error::MetricValidity(format!("degenerate metric at r = {r}, theta = {th}")));
            }
            let sd = delta.sqrt();
            // (g^{rr}√g, g^{θθ}√g, √g)
            Ok((r * (h + m2) / sd, (1.0 + m0) / (r * sd), r * sd))
        };
        let mut a = Vec::with_capacity(grid.len());
        let mut c = Vec::with_capacity(grid.len());
        let mut v = Vec::with_capacity(grid.len());
        let mut b_half = Vec::with_capacity(n_t * (n_r + 1));
        let mut b_node = Vec::with_capacity(n_t * (n_r + 2));
        for k in 0..n_t {
            let th = grid.theta(k);
            for i in 0..n_r {
                let r = grid.r(i);
                let (_, cc, sg) = flux(r, th)?;
                a.push(sg.powf(-0.5));
                c.push(cc);
                v.push(potential.map_or(0.0, |p| p.eval(r, th)));
            }
            for i in 0..=n_r {
                b_half.push(flux(grid.r0 + (i as f64 - 0.5) * grid.dr, th)?.0);
            }
            for i in 0..n_r + 2 {
                b_node.push(flux(grid.r0 + (i as f64 - 1.0) * grid.dr, th)?.0);
            }
        }
        let rotational = metric.is_rotationally_symmetric() && potential.map_or(true, |p| p.angular.is_constant());
        Ok(Self { grid, a, c, v, b_half, b_node, rotational })
    }

    fn min_of(v: &[f64]) -> f64 {
        v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Symbol size `g^{rr}k² + g^{θθ}m² + V`, maximised over the nodes.
    pub fn symbol_bound(&self, k: f64, m: f64) -> f64 {
        let g = self.grid;
        let mut best = f64::NEG_INFINITY;
        for row in 0..g.n_theta {
            for i in 0..g.n_r {
                let n = g.index(row, i);
                let a2 = self.a[n] * self.a[n];
                let b = self.b_node[row * (g.n_r + 2) + i + 1];
                best = best.max(a2 * (b * k * k + self.c[n] * m * m) + self.v[n].max(0.0));
            }
        }
        best
    }

    /// Spectral enclosure estimate from the symbol at the grid cutoffs.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let g = self.grid;
        let k = PI / g.dr;
        let m = (g.n_theta / 2) as f64;
        let lo = Self::min_of(&self.v).min(0.0);
        (lo, 1.05 * self.symbol_bound(k, m) + 1e-12)
    }
}

/// Pseudo-spectral `H̃`: sine series in `r` (odd reflection at both
/// Dirichlet nodes), Fourier series in `θ`.
pub(crate) struct SpectralOperator {
    pub co: Coefficients,
    n_ext: usize,
    k_ext: Vec<f64>,
    m: Vec<f64>,
    fwd_r: Arc<dyn Fft<f64>>,
    inv_r: Arc<dyn Fft<f64>>,
    fwd_t: Arc<dyn Fft<f64>>,
    inv_t: Arc<dyn Fft<f64>>,
    /// `a`, `c` transposed to r-major for the angular lines.
    a_t: Vec<f64>,
    c_t: Vec<f64>,
}

impl SpectralOperator {
    pub fn new(co: Coefficients) -> Self {
        let g = co.grid;
        let n_ext = 2 * (g.n_r + 1);
        let mut planner = FftPlanner::new();
        let to_c = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
        let re = |v: Vec<Complex64>| v.into_iter().map(|z| z.re).collect::<Vec<_>>();
        let a_t = re(transpose(&to_c(&co.a), g.n_theta, g.n_r));
        let c_t = re(transpose(&to_c(&co.c), g.n_theta, g.n_r));
        Self {
            n_ext,
            k_ext: wavenumbers(n_ext, g.dr),
            m: angular_modes(g.n_theta),
            fwd_r: planner.plan_fft_forward(n_ext),
            inv_r: planner.plan_fft_inverse(n_ext),
            fwd_t: planner.plan_fft_forward(g.n_theta),
            inv_t: planner.plan_fft_inverse(g.n_theta),
            a_t,
            c_t,
            co,
        }
    }

    fn derivative(fwd: &dyn Fft<f64>, inv: &dyn Fft<f64>, k: &[f64], buf: &mut [Complex64]) {
        fwd.process(buf);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().zip(k).for_each(|(z, kk)| *z *= Complex64::new(0.0, kk * s));
        inv.process(buf);
    }

    /// `out = H̃ w` (θ-major).
    pub fn apply(&self, w: &[Complex64], out: &mut [Complex64]) {
        let g = self.co.grid;
        let (n, ne) = (g.n_r, self.n_ext);
        let mut ext = vec![Complex64::new(0.0, 0.0); ne];
        for row in 0..g.n_theta {
            let base = row * n;
            let a = &self.co.a[base..base + n];
            let b = &self.co.b_node[row * (n + 2)..(row + 1) * (n + 2)];
            ext[0] = Complex64::new(0.0, 0.0);
            ext[n + 1] = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let z = w[base + i] * a[i];
                ext[i + 1] = z;
                ext[ne - 1 - i] = -z;
            }
            Self::derivative(&*self.fwd_r, &*self.inv_r, &self.k_ext, &mut ext);
            for (j, z) in ext.iter_mut().enumerate() {
                *z *= b[if j <= n + 1 { j } else { ne - j }];
            }
            Self::derivative(&*self.fwd_r, &*self.inv_r, &self.k_ext, &mut ext);
            for i in 0..n {
                out[base + i] = -ext[i + 1] * a[i] + w[base + i] * self.co.v[base + i];
            }
        }
        if g.n_theta == 1 {
            return;
        }
        let nt = g.n_theta;
        let mut wt = transpose(w, nt, n);
        for i in 0..n {
            let line = &mut wt[i * nt..(i + 1) * nt];
            let a = &self.a_t[i * nt..(i + 1) * nt];
            let c = &self.c_t[i * nt..(i + 1) * nt];
            line.iter_mut().zip(a).for_each(|(z, x)| *z *= x);
            Self::derivative(&*self.fwd_t, &*self.inv_t, &self.m, line);
            line.iter_mut().zip(c).for_each(|(z, x)| *z *= x);
            Self::derivative(&*self.fwd_t, &*self.inv_t, &self.m, line);
            line.iter_mut().zip(a).for_each(|(z, x)| *z *= -x);
        }
        let ang = transpose(&wt, n, nt);
        out.iter_mut().zip(&ang).for_each(|(o, x)| *o += x);
    }

    /// Largest eigenvalue estimate by power iteration from a fixed
    /// deterministic start vector.
    pub fn power_estimate(&self, iters: usize) -> f64 {
        let n = self.co.grid.len();
        let mut x: Vec<Complex64> = (0..n).map(|j| Complex64::new((j as f64 * 1.618_033_988_7).sin(), 0.0)).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        let mut lam = 0.0;
        for _ in 0..iters {
            let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            x.iter_mut().for_each(|z| *z /= nx);
            self.apply(&x, &mut y);
            lam = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
            std::mem::swap(&mut x, &mut y);
        }
        lam
    }
}
