//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use conic_scatter::classical::PhasePoint;
use conic_scatter::geometry::{AngularProfile, MetricSpec, ScatteringMetric};
use conic_scatter::quantum::{CurvedPropagator, CurvedState, EvolutionConfig, Grid, Scheme};
use num_complex::Complex64;

pub fn bump_metric() -> ScatteringMetric {
    MetricSpec::Bump { eps: 0.1, mu: 0.5, angular: AngularProfile::cosine(1) }.build().unwrap()
}

/// Rotationally symmetric metric `(1 + ε r^{−1−μ}) dr² + r² dθ²`.
pub fn radial_metric(eps: f64, mu: f64) -> ScatteringMetric {
    MetricSpec::Radial { eps, mu, angular: AngularProfile::CONSTANT }.build().unwrap()
}

/// Symmetric tridiagonal `(diag, off)` of the second-order discretisation of
/// `−(p u′)′ + q u = λ w u` on `N` interior nodes of `[a, b]`, after the
/// similarity `v = w^{1/2} u`.
pub struct SturmLiouville {
    pub nodes: Vec<f64>,
    pub weight: Vec<f64>,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SturmLiouville {
    pub fn new(p: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64, w: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / (n + 1) as f64;
        let nodes: Vec<f64> = (1..=n).map(|i| a + i as f64 * h).collect();
        let weight: Vec<f64> = nodes.iter().map(|&x| w(x)).collect();
        let diag = nodes
            .iter()
            .zip(&weight)
            .map(|(&x, wt)| ((p(x - 0.5 * h) + p(x + 0.5 * h)) / (h * h) + q(x)) / wt)
            .collect();
        let off = (0..n - 1)
            .map(|i| -p(nodes[i] + 0.5 * h) / (h * h) / (weight[i] * weight[i + 1]).sqrt())
            .collect();
        Self { nodes, weight, diag, off }
    }

    /// Number of eigenvalues below `x` (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `k`-th smallest eigenvalue (from 0) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenfunction `u` for the eigenvalue near `lambda` by inverse iteration.
    pub fn eigenfunction(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let mut v = vec![1.0; n];
        for _ in 0..4 {
            v = thomas(&self.off, &self.diag.iter().map(|d| d - lambda).collect::<Vec<_>>(), &v);
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= s);
        }
        v.iter().zip(&self.weight).map(|(x, w)| x / w.sqrt()).collect()
    }
}

/// Solves the symmetric tridiagonal system `(off, diag, off) x = rhs`.
fn thomas(off: &[f64], diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    d[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = off[i - 1] / beta;
        beta = diag[i] - off[i - 1] * c[i - 1];
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// The angular-mode-`m` radial problem of `−Δ_g` for `g = a(r) dr² + r² dθ²`.
pub fn radial_problem(a: impl Fn(f64) -> f64 + Copy, m: f64, r_a: f64, r_b: f64, n: usize) -> SturmLiouville {
    SturmLiouville::new(move |r| r / a(r).sqrt(), move |r| m * m * a(r).sqrt() / r, move |r| r * a(r).sqrt(), r_a, r_b, n)
}

/// Lowest eigenvalue extrapolated from three dyadic resolutions; the
/// error expansion is in even powers of the mesh width.
pub fn extrapolated_ground_state(a: impl Fn(f64) -> f64 + Copy, m: f64, r_a: f64, r_b: f64, n0: usize) -> f64 {
    let lam = |k: usize| radial_problem(a, m, r_a, r_b, (n0 + 1) * k - 1).eigenvalue(0);
    let (l1, l2, l4) = (lam(1), lam(2), lam(4));
    let r1 = (4.0 * l2 - l1) / 3.0;
    let r2 = (4.0 * l4 - l2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Straight-line flat flow `x(t) = x₀ + 2tξ` in polar coordinates.
pub fn flat_flow(start: PhasePoint, t: f64) -> PhasePoint {
    let (x, xi) = start.to_cartesian();
    PhasePoint::from_cartesian([x[0] + 2.0 * t * xi[0], x[1] + 2.0 * t * xi[1]], xi)
}

/// Scattering data of a straight line, from the asymptotics of
/// `x(t) = x₀ + 2tξ` for `t → −∞`.
pub fn line_oracle(start: PhasePoint) -> [f64; 4] {
    let (x, xi) = start.to_cartesian();
    let n = xi[0].hypot(xi[1]);
    let e = [-xi[0] / n, -xi[1] / n];
    [x[0] * e[0] + x[1] * e[1], e[1].atan2(e[0]), -n, x[0] * xi[1] - x[1] * xi[0]]
}

pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

pub const RADIAL_EPS: f64 = 0.3;
pub const RADIAL_MU: f64 = 0.5;

pub fn radial_a(r: f64) -> f64 {
    1.0 + RADIAL_EPS * r.powf(-1.0 - RADIAL_MU)
}

/// Curved Dirichlet grid on `[1.05, 9.05]` and an aligned periodic free grid.
pub fn aligned_grids(n_theta: usize) -> (Grid, Grid) {
    let curved = Grid::dirichlet(1.05, 9.05, 255, n_theta).unwrap();
    let free = Grid::new(curved.r0 - 64.0 * curved.dr, curved.dr, 512, n_theta).unwrap();
    (curved, free)
}

pub fn packet_sum(params: &[(f64, f64, f64, f64)], r: f64, theta: f64) -> Complex64 {
    params
        .iter()
        .map(|&(c, k, m, phase)| {
            let x = r - c;
            Complex64::from_polar((-x * x).exp(), k * x + m.round() * theta + phase)
        })
        .sum()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Autocorrelation phase of the ground state of angular mode `m`.
pub fn eigenmode_phase_error(scheme: Scheme, dt: f64, t: f64) -> f64 {
    let metric = radial_metric(RADIAL_EPS, RADIAL_MU);
    let m = 2.0;
    let cg = Grid::dirichlet(1.05, 9.05, 255, 8).unwrap();
    let lambda = extrapolated_ground_state(radial_a, m, 1.05, 9.05, 2047);
    // oracle eigenfunction on a mesh containing the propagator nodes
    let k = 16;
    let sl = radial_problem(radial_a, m, 1.05, 9.05, (cg.n_r + 1) * k - 1);
    let phi = sl.eigenfunction(sl.eigenvalue(0));
    let u = CurvedState::from_fn(&metric, cg, |r, th| {
        let i = ((r - 1.05) / cg.dr).round() as usize * k - 1;
        Complex64::from_polar(phi[i], m * th)
    })
    .unwrap();
    let cfg = EvolutionConfig { dt, t_total: t, scheme, absorber: None, ..Default::default() };
    let prop = CurvedPropagator::new(&metric, None, cg, cfg).unwrap();
    let ut = prop.evolve(&u, t).unwrap();
    let ratio = ut.inner(&u).unwrap() / u.inner(&u).unwrap();
    (ratio - Complex64::from_polar(1.0, -lambda * t)).norm()
}

