//! End-to-end comparison of the wave front set of `e^{−it₀H}u₀` at a phase
//! point with that of the free evolution `e^{−it₀H₀}J*u₀` at the point's
//! scattering data.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{extract_scattering_data, ExtrapolationLadder, FreePhasePoint, PhasePoint, ScatteringData};
use crate::error::{Error, Result};
use crate::geometry::{Potential, ScatteringMetric};
use crate::microlocal::{wf_rh_test, wf_test, Decision, DetectorConfig, HalfDensity, WFVerdict};
use crate::quantum::grid::wrap;
use crate::quantum::{
    dirichlet_size, fft_size, free_evolve, j_adjoint, j_embed, CurvedPropagator, CurvedState, EvolutionConfig, FreeState,
    Grid, Scheme,
};
use crate::smooth::{plateau, step};

/// Which member of the test family seeds `u₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// A jump across the line conormal to `(ρ⁻, ω⁻)` through `(r₋, θ₋)`.
    Singular,
    /// The same jump smoothed by a Gaussian of width `mollifier`.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoremCheckConfig {
    pub t0: f64,
    pub state: InitialState,
    pub mollifier: f64,
    /// Plateau half-widths `(r, θ)` of the cutoff around the jump; the
    /// cutoff vanishes beyond twice these.
    pub support: [f64; 2],
    pub detector: DetectorConfig,
    /// Ladder for the radially homogeneous check on `u₀`; skipped if absent.
    pub rh_detector: Option<DetectorConfig>,
    pub n_theta: usize,
    /// Inner Dirichlet radius of the curved grid.
    pub r_inner: f64,
    /// Frequencies up to `keep` times the largest probed one survive the
    /// outer taper of `u₀`.
    pub keep: f64,
    pub ladder: ExtrapolationLadder,
}

impl Default for TheoremCheckConfig {
    fn default() -> Self {
        Self {
            t0: 0.5,
            state: InitialState::Singular,
            mollifier: 0.5,
            support: [4.0, 0.5],
            detector: DetectorConfig {
                eps0: 1.0 / 32.0,
                levels: 5,
                ratio: 0.5f64.powf(0.25),
                widths: [1.0, 0.15, 0.1, 0.1],
                alpha: 8.0,
                ..DetectorConfig::default()
            },
            rh_detector: None,
            n_theta: 32,
            r_inner: 1.05,
            keep: 1.5,
            ladder: ExtrapolationLadder::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agreement {
    Agree,
    Inconclusive,
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremDiagnostics {
    pub curved_grid: Grid,
    pub free_grid: Grid,
    /// Radii between which `u₀` is tapered to zero.
    pub taper: [f64; 2],
    pub u0_norm: f64,
    pub evolved_norm: f64,
    pub free_norm: Option<f64>,
    /// Largest radial frequency the ladders probe.
    pub probed_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheckReport {
    pub start: PhasePoint,
    pub scattering: ScatteringData,
    pub left: WFVerdict,
    pub right: WFVerdict,
    pub agreement: Agreement,
    pub rh: Option<WFVerdict>,
    pub diagnostics: TheoremDiagnostics,
}

fn probed(cfg: &DetectorConfig, rho: f64, omega: f64) -> (f64, f64) {
    let eps_min = cfg.scales().last().copied().unwrap_or(cfg.eps0);
    ((rho.abs() + cfg.widths[2]) / eps_min, (omega.abs() + cfg.widths[3]) / eps_min)
}

pub fn agreement(left: Decision, right: Decision) -> Agreement {
    match (left, right) {
        (Decision::Marginal, _) | (_, Decision::Marginal) => Agreement::Inconclusive,
        (a, b) if a == b => Agreement::Agree,
        _ => Agreement::Contradiction,
    }
}

/// The seed `s` on `M_free`: a cut-off jump or its mollification.
fn seed(cfg: &TheoremCheckConfig, sd: &ScatteringData, r: f64, theta: f64) -> f64 {
    let (rho, omega) = (sd.rho_minus, sd.omega_minus);
    let d = wrap(theta - sd.theta_minus);
    let n = rho.hypot(omega);
    // signed distance to the jump line in the (r, θ) chart
    let z = (rho * (r - sd.r_minus) + omega * d) / n;
    let jump = match cfg.state {
        InitialState::Singular => {
            if z > 0.0 {
                1.0
            } else if z == 0.0 {
                0.5
            } else {
                0.0
            }
        }
        InitialState::Smooth => 0.5 * libm::erfc(-z / (std::f64::consts::SQRT_2 * cfg.mollifier)),
    };
    let [ar, at] = cfg.support;
    jump * plateau(r - sd.r_minus, ar, 2.0 * ar) * plateau(d, at, 2.0 * at)
}

/// `u₀` and the grids it lives on.
struct Prepared {
    sd: ScatteringData,
    curved_grid: Grid,
    free_grid: Grid,
    taper: [f64; 2],
    k_r: f64,
    u0: CurvedState,
}

fn prepare(metric: &ScatteringMetric, potential: Option<&Potential>, start: PhasePoint, cfg: &TheoremCheckConfig) -> Result<Prepared> {
    if !(cfg.t0 > 0.0) || !(cfg.mollifier > 0.0) || !(cfg.keep >= 1.0) {
        return Err(Error::Config("theorem check needs t0 > 0, mollifier > 0 and keep >= 1".into()));
    }
    if !(cfg.support[0] > 0.0 && cfg.support[1] > 0.0 && cfg.support[1] < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Config(format!("seed support {:?} must be positive with an angular part below π/2", cfg.support)));
    }
    cfg.detector.validate()?;
    let sd = extract_scattering_data(metric, potential, start, &cfg.ladder)?;
    let target = sd.point();

    // resolution for both sides of the ladder, and for the optional rh ladder
    let (mut k_r, mut k_t) = probed(&cfg.detector, start.rho, start.omega);
    let (kr2, kt2) = probed(&cfg.detector, target.rho, target.omega);
    k_r = k_r.max(kr2);
    k_t = k_t.max(kt2);
    let mut r_reach = 0.0f64;
    if let Some(rh) = &cfg.rh_detector {
        rh.validate()?;
        let (a, b) = probed(rh, target.rho, target.omega);
        k_r = k_r.max(a);
        k_t = k_t.max(b);
        let eps_min = rh.scales().last().copied().unwrap_or(rh.eps0);
        r_reach = (2.0 * cfg.t0 * target.rho.abs() + rh.window.support * rh.widths[0]) / eps_min;
    }
    let dr_max = TAU / (8.0 * k_r * 1.02);
    let n_theta = {
        let n = (2.0 * k_t).ceil() as usize + 2;
        let n = n.max(cfg.n_theta);
        n + n % 2
    };

    // u₀ keeps the frequencies the ladders need, then is tapered away
    let taper_start = (sd.r_minus + 2.0 * cfg.t0 * cfg.keep * k_r).max(start.r + 3.0 * cfg.detector.widths[0] + 1.0);
    let taper = [taper_start, taper_start + 3.0];
    let r_outer = (taper[1] + 1.0).max(r_reach + 1.0);
    let n_r = dirichlet_size(((r_outer - cfg.r_inner) / dr_max).ceil() as usize);
    let curved_grid = Grid::dirichlet(cfg.r_inner, r_outer, n_r, n_theta)?;
    let dr = curved_grid.dr;

    // free grid aligned with the curved one, wide enough that e^{it₀H₀}
    // does not wrap the Nyquist band around
    let reach = 2.0 * cfg.t0 * std::f64::consts::PI / dr + 2.0 * cfg.support[0] + 2.0;
    let lo = (sd.r_minus - reach).min(cfg.r_inner);
    let hi = (sd.r_minus + reach).max(r_outer);
    let below = ((curved_grid.r0 - lo) / dr).ceil() as usize;
    let n_free = fft_size(below + ((hi - curved_grid.r0) / dr).ceil() as usize);
    let free_grid = Grid::new(curved_grid.r0 - below as f64 * dr, dr, n_free, n_theta)?;

    let s = FreeState::from_fn(free_grid, metric.boundary, |r, th| Complex64::new(seed(cfg, &sd, r, th), 0.0));
    let backward = free_evolve(&s, -cfg.t0);
    let mut u0 = j_embed(&backward, metric, &CurvedState::zeros(metric, curved_grid)?)?;
    for (n, z) in u0.data.iter_mut().enumerate() {
        let r = curved_grid.r(n % curved_grid.n_r);
        *z *= 1.0 - step((r - taper[0]) / (taper[1] - taper[0]));
    }
    Ok(Prepared { sd, curved_grid, free_grid, taper, k_r, u0 })
}

fn evolve_curved(metric: &ScatteringMetric, potential: Option<&Potential>, p: &Prepared, t0: f64) -> Result<CurvedState> {
    let prop = CurvedPropagator::new(
        metric,
        potential,
        p.curved_grid,
        EvolutionConfig { dt: t0, t_total: t0, scheme: Scheme::Spectral, absorber: None, ..Default::default() },
    )?;
    prop.evolve(&p.u0, t0)
}

fn rh_point(cfg: &TheoremCheckConfig, target: FreePhasePoint) -> FreePhasePoint {
    FreePhasePoint::new(-2.0 * cfg.t0 * target.rho, target.theta, target.rho, target.omega)
}

pub fn theorem_check(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    cfg: &TheoremCheckConfig,
) -> Result<TheoremCheckReport> {
    let p = prepare(metric, potential, start, cfg)?;
    let target = p.sd.point();
    let rh = match &cfg.rh_detector {
        Some(rh) => Some(wf_rh_test(&p.u0, rh_point(cfg, target), rh)?),
        None => None,
    };
    let evolved = evolve_curved(metric, potential, &p, cfg.t0)?;
    let free = free_evolve(&j_adjoint(&p.u0, metric, &FreeState::zeros(p.free_grid, metric.boundary))?, cfg.t0);

    let left = wf_test(&evolved, FreePhasePoint::from(start), &cfg.detector)?;
    let right = wf_test(&free, target, &cfg.detector)?;
    let agreement = agreement(left.decision, right.decision);
    Ok(TheoremCheckReport {
        start,
        left,
        right,
        agreement,
        rh,
        diagnostics: TheoremDiagnostics {
            curved_grid: p.curved_grid,
            free_grid: p.free_grid,
            taper: p.taper,
            u0_norm: HalfDensity::norm(&p.u0),
            evolved_norm: HalfDensity::norm(&evolved),
            free_norm: Some(HalfDensity::norm(&free)),
            probed_frequency: p.k_r,
        },
        scattering: p.sd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub start: PhasePoint,
    pub scattering: ScatteringData,
    /// Radially homogeneous verdict on `u₀` at `(−2t₀ρ⁻, θ₋, ρ⁻, ω⁻)`.
    pub initial: WFVerdict,
    /// Verdict on `e^{−it₀H}u₀` at the start point.
    pub evolved: WFVerdict,
    /// False only when `u₀` is rh-absent but the evolved state is not absent.
    pub consistent: bool,
    pub diagnostics: TheoremDiagnostics,
}

/// Smoothing check: an rh-absent `u₀` must evolve to a state whose wave
/// front set misses the start point.
pub fn smoothing_check(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    cfg: &TheoremCheckConfig,
) -> Result<SmoothingReport> {
    let rh = cfg.rh_detector.ok_or_else(|| Error::Config("smoothing check needs rh_detector".into()))?;
    let p = prepare(metric, potential, start, cfg)?;
    let initial = wf_rh_test(&p.u0, rh_point(cfg, p.sd.point()), &rh)?;
    let evolved_state = evolve_curved(metric, potential, &p, cfg.t0)?;
    let evolved = wf_test(&evolved_state, FreePhasePoint::from(start), &cfg.detector)?;
    let consistent = !(initial.decision == Decision::Absent && evolved.decision != Decision::Absent);
    Ok(SmoothingReport {
        start,
        initial,
        evolved,
        consistent,
        diagnostics: TheoremDiagnostics {
            curved_grid: p.curved_grid,
            free_grid: p.free_grid,
            taper: p.taper,
            u0_norm: HalfDensity::norm(&p.u0),
            evolved_norm: HalfDensity::norm(&evolved_state),
            free_norm: None,
            probed_frequency: p.k_r,
        },
        scattering: p.sd,
    })
}
