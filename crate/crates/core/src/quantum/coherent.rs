use std::f64::consts::TAU;

use num_complex::Complex64;

use super::grid::{wrap, Grid};
use super::state::{CurvedState, FreeState};
use crate::classical::FreePhasePoint;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMetric, ScatteringMetric};

/// A Gaussian packet concentrated at a phase-space point at scale `ε_sc`.
///
/// In `r` it is `exp(−(r−r₀)²/(2ε) + iρ₀(r−r₀)/ε)`; in `θ` the periodic
/// analogue `exp((cos(θ−θ₀) − 1)/ε) e^{i m₀(θ−θ₀)}` with the integer mode
/// `m₀ = round(ω₀/ε)`, so `|u|²` has variance `ε/2` in each position variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentState {
    pub center: FreePhasePoint,
    pub eps: f64,
}

impl CoherentState {
    pub fn new(center: FreePhasePoint, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Domain(format!("semiclassical scale must lie in (0, 1], got {eps}")));
        }
        Ok(Self { center, eps })
    }

    pub fn angular_mode(&self) -> f64 {
        (self.center.omega / self.eps).round()
    }

    /// Unnormalised profile.
    pub fn profile(&self, r: f64, theta: f64, angular: bool) -> Complex64 {
        let c = &self.center;
        let x = r - c.r;
        let mut e = Complex64::new(-x * x / (2.0 * self.eps), c.rho * x / self.eps);
        if angular {
            let d = wrap(theta - c.theta);
            e += Complex64::new((d.cos() - 1.0) / self.eps, self.angular_mode() * d);
        }
        e.exp()
    }

    /// Checks that the grid resolves the oscillation with at least 8 points
    /// and the packet with 6 widths of margin.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let c = &self.center;
        let width = self.eps.sqrt();
        if c.rho != 0.0 && TAU * self.eps / c.rho.abs() < 8.0 * grid.dr {
            return Err(Error::Resolution(format!(
                "radial wavelength {:.3e} needs dr <= {:.3e}, have {:.3e}",
                TAU * self.eps / c.rho.abs(),
                TAU * self.eps / c.rho.abs() / 8.0,
                grid.dr
            )));
        }
        if width < 2.0 * grid.dr {
            return Err(Error::Resolution(format!("packet width {width:.3e} below two radial cells")));
        }
        if grid.n_theta > 1 {
            let m = self.angular_mode().abs() + 6.0 / width;
            if 2.0 * m + 4.0 > grid.n_theta as f64 {
                return Err(Error::Resolution(format!(
                    "angular content up to mode {m:.0} needs n_theta >= {:.0}",
                    2.0 * m + 4.0
                )));
            }
        }
        if c.r - 6.0 * width < grid.r0 || c.r + 6.0 * width > grid.r_last() {
            return Err(Error::Truncation(format!(
                "packet at r = {} with width {width:.3} leaves [{}, {}]",
                c.r,
                grid.r0,
                grid.r_last()
            )));
        }
        Ok(())
    }

    pub fn free_state(&self, grid: Grid, boundary: BoundaryMetric) -> Result<FreeState> {
        self.check_grid(&grid)?;
        let ang = grid.n_theta > 1;
        let mut u = FreeState::from_fn(grid, boundary, |r, th| self.profile(r, th, ang));
        let n = u.norm();
        u.scale(1.0 / n);
        Ok(u)
    }

    pub fn curved_state(&self, metric: &ScatteringMetric, grid: Grid) -> Result<CurvedState> {
        self.check_grid(&grid)?;
        let ang = grid.n_theta > 1;
        let mut u = CurvedState::from_fn(metric, grid, |r, th| self.profile(r, th, ang))?;
        let n = u.norm();
        u.scale(1.0 / n);
        Ok(u)
    }
}
