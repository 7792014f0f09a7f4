//! Semiclassical detectors for the wave front set, the frequency set and
//! the radially homogeneous wave front set, and the escape function that
//! drives the smoothing estimate.

mod escape;
mod symbol;
mod verdict;
mod weyl;

use num_complex::Complex64;

pub use escape::{escape_phi, escape_phi_lagrange, EscapeFunction, EscapeParams};
pub use symbol::{Scaling, SymbolCutoff, Window};
pub use verdict::{decide, Decision, DetectorConfig, LadderPoint, WFVerdict};
pub use weyl::{bump_transform, weyl_apply};

use crate::classical::FreePhasePoint;
use crate::error::Result;
use crate::quantum::{CurvedState, FreeState, Grid};

/// A sampled state seen through its half-density, in which the weighted
/// norm becomes the plain `L²(dr dθ)` norm.
pub trait HalfDensity {
    fn grid(&self) -> Grid;
    /// `g^{1/4} u` on the end, `h^{1/4} u` on `M_free`.
    fn half_density(&self) -> Vec<Complex64>;
    fn norm(&self) -> f64;
}

impl HalfDensity for FreeState {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn half_density(&self) -> Vec<Complex64> {
        self.data.iter().enumerate().map(|(n, z)| z * self.weight(n).sqrt()).collect()
    }

    fn norm(&self) -> f64 {
        FreeState::norm(self)
    }
}

impl HalfDensity for CurvedState {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn half_density(&self) -> Vec<Complex64> {
        self.data.iter().zip(&self.weight).map(|(z, w)| z * w.sqrt()).collect()
    }

    fn norm(&self) -> f64 {
        CurvedState::norm(self)
    }
}

impl DetectorConfig {
    pub fn symbol(&self, point: FreePhasePoint) -> Result<SymbolCutoff> {
        let mut a = SymbolCutoff::new(point, self.widths)?;
        a.alpha = self.alpha;
        Ok(a)
    }
}

/// `‖ψ Op_ε(a) ψ w‖` for one state and scale.
pub fn sandwich<S: HalfDensity + ?Sized>(u: &S, point: FreePhasePoint, eps: f64, scaling: Scaling, cfg: &DetectorConfig) -> Result<f64> {
    let a = cfg.symbol(point)?;
    weyl::sandwich_norm(&a, eps, scaling, &cfg.window, &u.grid(), &u.half_density())
}

fn fixed_state_test<S: HalfDensity>(u: &S, point: FreePhasePoint, scaling: Scaling, cfg: &DetectorConfig) -> Result<WFVerdict> {
    cfg.validate()?;
    let w = u.half_density();
    let a = cfg.symbol(point)?;
    let grid = u.grid();
    let ladder = cfg
        .scales()
        .into_iter()
        .map(|eps| Ok(LadderPoint { eps, norm: weyl::sandwich_norm(&a, eps, scaling, &cfg.window, &grid, &w)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(decide(point, ladder, u.norm(), scaling, cfg))
}

/// Frequency-set test of an `ε`-indexed family: `family(ε)` is sampled at
/// every ladder scale and sandwiched at that same scale.
pub fn fs_test<S: HalfDensity>(family: impl Fn(f64) -> Result<S>, point: FreePhasePoint, cfg: &DetectorConfig) -> Result<WFVerdict> {
    cfg.validate()?;
    let a = cfg.symbol(point)?;
    let mut reference = 0.0f64;
    let mut ladder = Vec::with_capacity(cfg.levels);
    for eps in cfg.scales() {
        let u = family(eps)?;
        reference = reference.max(u.norm());
        let norm = weyl::sandwich_norm(&a, eps, Scaling::Standard, &cfg.window, &u.grid(), &u.half_density())?;
        ladder.push(LadderPoint { eps, norm });
    }
    Ok(decide(point, ladder, reference, Scaling::Standard, cfg))
}

/// Wave front set test of a fixed state.
pub fn wf_test<S: HalfDensity>(u: &S, point: FreePhasePoint, cfg: &DetectorConfig) -> Result<WFVerdict> {
    fixed_state_test(u, point, Scaling::Standard, cfg)
}

/// Radially homogeneous wave front set test: the radial window follows the
/// scaled support `εr ∈ supp a`, so the grid must reach `(r₀ + 3w)/ε_min`.
pub fn wf_rh_test<S: HalfDensity>(u: &S, point: FreePhasePoint, cfg: &DetectorConfig) -> Result<WFVerdict> {
    fixed_state_test(u, point, Scaling::RadiallyHomogeneous, cfg)
}
