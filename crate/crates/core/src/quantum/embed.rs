use num_complex::Complex64;

use super::state::{CurvedState, FreeState};
use crate::error::Result;
use crate::geometry::ScatteringMetric;

/// Start and end of the cutoff's transition.
pub const CUTOFF_START: f64 = 1.5;
pub const CUTOFF_END: f64 = 2.0;

/// The `C^∞` step `j`: `0` for `r ≤ 3/2`, `1` for `r ≥ 2`, monotone between.
pub fn cutoff_j(r: f64) -> f64 {
    crate::smooth::step((r - CUTOFF_START) / (CUTOFF_END - CUTOFF_START))
}

/// Density factor `g^{-1/4} h^{1/4}` of `J` at a node.
fn density(metric: &ScatteringMetric, r: f64, theta: f64) -> f64 {
    (metric.boundary.h(theta) / metric.sqrt_det(r, theta).powi(2)).sqrt().sqrt()
}

/// `(Ju)(r, θ) = j(r) g^{-1/4} h^{1/4} u(r, θ)` restricted to the curved grid,
/// whose radial nodes must be a subset of the free grid's.
pub fn j_embed(u: &FreeState, metric: &ScatteringMetric, target: &CurvedState) -> Result<CurvedState> {
    let off = u.grid.aligned_offset(&target.grid)?;
    let g = target.grid;
    let mut out = target.clone();
    for k in 0..g.n_theta {
        let th = g.theta(k);
        for i in 0..g.n_r {
            let r = g.r(i);
            let src = u.data[u.grid.index(k, i + off)];
            out.data[g.index(k, i)] = src * (cutoff_j(r) * density(metric, r, th));
        }
    }
    Ok(out)
}

/// `(J*v)(r, θ) = j(r) g^{1/4} h^{-1/4} v(r, θ)`, zero off the curved grid.
pub fn j_adjoint(v: &CurvedState, metric: &ScatteringMetric, target: &FreeState) -> Result<FreeState> {
    let off = target.grid.aligned_offset(&v.grid)?;
    let g = v.grid;
    let mut out = target.clone();
    out.data.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for k in 0..g.n_theta {
        let th = g.theta(k);
        for i in 0..g.n_r {
            let r = g.r(i);
            let n = target.grid.index(k, i + off);
            out.data[n] = v.data[g.index(k, i)] * (cutoff_j(r) / density(metric, r, th));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_plateaus_and_monotone() {
        assert_eq!(cutoff_j(1.2), 0.0);
        assert_eq!(cutoff_j(1.5), 0.0);
        assert_eq!(cutoff_j(2.0), 1.0);
        assert_eq!(cutoff_j(7.0), 1.0);
        assert!((cutoff_j(1.75) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for n in 0..=1000 {
            let v = cutoff_j(1.5 + 0.5 * n as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn flat_density_is_r_to_minus_half() {
        let m = ScatteringMetric::flat();
        for r in [1.3, 2.0, 9.0] {
            assert!((density(&m, r, 0.4) - r.powf(-0.5)).abs() < 1e-15);
        }
    }
}
