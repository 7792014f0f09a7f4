use serde::{Deserialize, Serialize};

use crate::classical::FreePhasePoint;
use crate::error::{Error, Result};
use crate::quantum::grid::wrap;
use crate::quantum::Grid;
use crate::smooth::{bump, plateau};

/// How the symbol's variables are scaled by `ε_sc` before quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// `a(r, θ, ερ, εω)`.
    #[default]
    Standard,
    /// `a(εr, θ, ερ, εω)`.
    RadiallyHomogeneous,
}

/// Tensorised bump `a = χ_r χ_θ χ_ρ χ_ω` centred at a phase-space point.
///
/// Each factor is `bump((x − x₀)/w, α)`, supported in `|x − x₀| < w`.
/// An infinite width drops the dependence on that variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolCutoff {
    pub center: FreePhasePoint,
    /// Half-widths in `(r, θ, ρ, ω)`.
    pub widths: [f64; 4],
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    1.0
}

impl SymbolCutoff {
    pub fn new(center: FreePhasePoint, widths: [f64; 4]) -> Result<Self> {
        if widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config(format!("symbol widths must be positive, got {widths:?}")));
        }
        if widths[1].is_finite() && widths[1] >= std::f64::consts::PI {
            return Err(Error::Config("angular width must stay below π".into()));
        }
        Ok(Self { center, widths, alpha: 1.0 })
    }

    /// One factor `χ((x − c)/w)`; the angular offset is wrapped into `(−π, π]`.
    pub fn factor(&self, axis: usize, x: f64) -> f64 {
        let w = self.widths[axis];
        if w.is_infinite() {
            return 1.0;
        }
        let c = self.center.to_array()[axis];
        let d = if axis == 1 { wrap(x - c) } else { x - c };
        bump(d / w, self.alpha)
    }

    pub fn value(&self, p: FreePhasePoint) -> f64 {
        let x = p.to_array();
        (0..4).map(|k| self.factor(k, x[k])).product()
    }
}

/// Position cutoff `ψ(r, θ)` for the sandwich `ψ Op(a) ψ`.
///
/// In each position variable it equals `1` within `plateau·w` of the symbol's
/// (scaled) centre and vanishes beyond `support·w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub plateau: f64,
    pub support: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { plateau: 1.5, support: 3.0 }
    }
}

/// Index ranges and weights of `ψ` on a grid for one symbol and scale.
#[derive(Debug, Clone)]
pub(crate) struct WindowSamples {
    /// Radial node indices `[i0, i1)` where `ψ_r > 0` and its values.
    pub i0: usize,
    pub psi_r: Vec<f64>,
    /// Angular node indices with `ψ_θ > 0` and their values.
    pub ks: Vec<usize>,
    pub psi_t: Vec<f64>,
}

impl Window {
    pub(crate) fn sample(&self, a: &SymbolCutoff, eps: f64, scaling: Scaling, grid: &Grid) -> Result<WindowSamples> {
        if !(self.plateau > 0.0 && self.support > self.plateau) {
            return Err(Error::Config(format!("window needs 0 < plateau < support, got {self:?}")));
        }
        let wr = a.widths[0];
        let (i0, psi_r) = if wr.is_infinite() {
            (0, vec![1.0; grid.n_r])
        } else {
            let (c, w) = match scaling {
                Scaling::Standard => (a.center.r, wr),
                Scaling::RadiallyHomogeneous => (a.center.r / eps, wr / eps),
            };
            let (lo, hi) = (c - self.support * w, c + self.support * w);
            if lo < grid.r0 - grid.dr || hi > grid.r_last() + grid.dr {
                return Err(Error::Truncation(format!(
                    "cutoff window [{lo:.4}, {hi:.4}] leaves the grid [{:.4}, {:.4}]",
                    grid.r0,
                    grid.r_last()
                )));
            }
            let first = ((lo - grid.r0) / grid.dr).floor().max(0.0) as usize;
            let last = (((hi - grid.r0) / grid.dr).ceil() as usize).min(grid.n_r - 1);
            (first, (first..=last).map(|i| plateau(grid.r(i) - c, self.plateau * w, self.support * w)).collect())
        };
        let (mut ks, mut psi_t) = (Vec::new(), Vec::new());
        let wt = a.widths[1];
        for k in 0..grid.n_theta {
            let v = if wt.is_infinite() || grid.n_theta == 1 {
                1.0
            } else {
                plateau(wrap(grid.theta(k) - a.center.theta), self.plateau * wt, self.support * wt)
            };
            if v > 0.0 {
                ks.push(k);
                psi_t.push(v);
            }
        }
        Ok(WindowSamples { i0, psi_r, ks, psi_t })
    }
}
