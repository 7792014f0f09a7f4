//! Versioned JSON scenario files.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::theorem::TheoremCheckConfig;
use crate::classical::{DiffeoWindow, ExtrapolationLadder, FlowOptions, FreePhasePoint, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, Potential, ScatteringMetric};
use crate::microlocal::{DetectorConfig, Scaling};
use crate::quantum::{EvolutionConfig, Grid};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub metric: MetricSpec,
    #[serde(default)]
    pub potential: Option<Potential>,
    pub experiment: Experiment,
}

/// Seeded random phase points: `r`, `θ`, `ρ`, `ω` drawn uniformly from the
/// given closed ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStarts {
    pub count: usize,
    pub r: [f64; 2],
    pub theta: [f64; 2],
    pub rho: [f64; 2],
    pub omega: [f64; 2],
}

impl RandomStarts {
    fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [("r", self.r), ("theta", self.theta), ("rho", self.rho), ("omega", self.omega)] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("random {name} range [{lo}, {hi}] is empty or not finite")));
            }
        }
        if !(self.r[0] > 1.0) {
            return Err(Error::Config("random starts need r > 1".into()));
        }
        Ok(())
    }

    pub fn draw(&self, seed: u64) -> Vec<PhasePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |[lo, hi]: [f64; 2]| if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        (0..self.count)
            .map(|_| {
                let (r, theta, rho, omega) = (pick(self.r), pick(self.theta), pick(self.rho), pick(self.omega));
                PhasePoint::new(r, theta, rho, omega)
            })
            .collect()
    }
}

/// Explicit start points followed by seeded random ones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Starts {
    #[serde(default)]
    pub points: Vec<PhasePoint>,
    #[serde(default)]
    pub random: Option<RandomStarts>,
}

impl Starts {
    fn validate(&self) -> Result<()> {
        if let Some(r) = &self.random {
            r.validate()?;
        }
        if self.points.is_empty() && self.random.map_or(true, |r| r.count == 0) {
            return Err(Error::Config("no start points given".into()));
        }
        if let Some(p) = self.points.iter().find(|p| !(p.r > 1.0)) {
            return Err(Error::Config(format!("start point {p:?} lies outside the end r > 1")));
        }
        Ok(())
    }

    pub fn resolve(&self, seed: u64) -> Vec<PhasePoint> {
        let mut out = self.points.clone();
        if let Some(r) = &self.random {
            out.extend(r.draw(seed));
        }
        out
    }
}

/// Uniform radial grid `[r_min, r_max]` with `n_theta` angular nodes;
/// periodic in `r` on `M_free`, Dirichlet on the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl GridSpec {
    pub fn periodic(&self) -> Result<Grid> {
        Grid::periodic(self.r_min, self.r_max, self.n_r, self.n_theta)
    }

    pub fn dirichlet(&self) -> Result<Grid> {
        Grid::dirichlet(self.r_min, self.r_max, self.n_r, self.n_theta)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_max > self.r_min) || self.n_r < 4 || self.n_theta == 0 {
            return Err(Error::Config(format!("grid {self:?} needs r_max > r_min, n_r >= 4 and n_theta >= 1")));
        }
        Ok(())
    }
}

/// A coherent packet at `center` on scale `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: FreePhasePoint,
    pub eps: f64,
}

/// Where a wf-test state lives and how it was evolved before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Free,
    Curved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Trajectory {
        start: PhasePoint,
        t_end: f64,
        #[serde(default)]
        flow: FlowOptions,
    },
    ScatterData {
        starts: Starts,
        #[serde(default)]
        ladder: ExtrapolationLadder,
    },
    DiffeoCheck {
        window: DiffeoWindow,
        times: Vec<f64>,
        #[serde(default)]
        flow: FlowOptions,
    },
    /// `times` are classical; the propagator runs for `packet.eps · t`.
    EvolveFree {
        packet: PacketSpec,
        grid: GridSpec,
        times: Vec<f64>,
    },
    EvolveCurved {
        packet: PacketSpec,
        grid: GridSpec,
        times: Vec<f64>,
        evolution: EvolutionConfig,
    },
    /// Test a packet, optionally evolved by the quantum time `time`, at `point`.
    WfTest {
        packet: PacketSpec,
        grid: GridSpec,
        space: Space,
        #[serde(default)]
        time: f64,
        #[serde(default)]
        evolution: Option<EvolutionConfig>,
        point: FreePhasePoint,
        #[serde(default)]
        scaling: Scaling,
        #[serde(default)]
        detector: DetectorConfig,
    },
    SmoothingCheck {
        starts: Starts,
        #[serde(default)]
        check: TheoremCheckConfig,
    },
    TheoremCheck {
        starts: Starts,
        #[serde(default)]
        check: TheoremCheckConfig,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Trajectory { .. } => "trajectory",
            Experiment::ScatterData { .. } => "scatter-data",
            Experiment::DiffeoCheck { .. } => "diffeo-check",
            Experiment::EvolveFree { .. } => "evolve-free",
            Experiment::EvolveCurved { .. } => "evolve-curved",
            Experiment::WfTest { .. } => "wf-test",
            Experiment::SmoothingCheck { .. } => "smoothing-check",
            Experiment::TheoremCheck { .. } => "theorem-check",
        }
    }
}

pub const EXPERIMENT_KINDS: [&str; 8] = [
    "trajectory",
    "scatter-data",
    "diffeo-check",
    "evolve-free",
    "evolve-curved",
    "wf-test",
    "smoothing-check",
    "theorem-check",
];

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("times must be a nonempty list of finite values".into()));
    }
    Ok(())
}

fn check_flow(flow: &FlowOptions) -> Result<()> {
    if !(flow.tol > 0.0) || flow.samples < 2 {
        return Err(Error::Config(format!("flow needs tol > 0 and at least 2 samples, got {flow:?}")));
    }
    Ok(())
}

fn check_packet(p: &PacketSpec) -> Result<()> {
    if !(p.eps > 0.0 && p.eps <= 1.0) {
        return Err(Error::Config(format!("packet eps must lie in (0, 1], got {}", p.eps)));
    }
    Ok(())
}

fn check_evolution(e: &EvolutionConfig) -> Result<()> {
    if !(e.dt > 0.0) || !(e.phase_budget > 0.0) {
        return Err(Error::Config(format!("evolution needs dt > 0 and phase_budget > 0, got {e:?}")));
    }
    Ok(())
}

impl Scenario {
    /// Parses a scenario; malformed JSON becomes a config error carrying the
    /// line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    /// Checks the fields every experiment kind needs; returns the metric.
    pub fn validate(&self) -> Result<ScatteringMetric> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("scenario name {:?} must be a nonempty file stem", self.name)));
        }
        let metric = self.metric.build().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(v) = &self.potential {
            Potential::new(v.coupling, v.decay_mu3, v.angular).map_err(|e| Error::Config(e.to_string()))?;
        }
        match &self.experiment {
            Experiment::Trajectory { start, t_end, flow } => {
                check_flow(flow)?;
                if !(start.r > 1.0) || !(*t_end < 0.0) {
                    return Err(Error::Config("trajectory needs r > 1 and t_end < 0".into()));
                }
            }
            Experiment::ScatterData { starts, ladder } => {
                starts.validate()?;
                check_flow(&ladder.flow)?;
                if !(ladder.t0 > 0.0) || ladder.doublings < 2 {
                    return Err(Error::Config("ladder needs t0 > 0 and at least 2 doublings".into()));
                }
            }
            Experiment::DiffeoCheck { window, times, flow } => {
                check_flow(flow)?;
                check_times(times)?;
                if times.iter().any(|&t| t >= 0.0) || window.half_widths.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::Config("diffeo check needs negative times and nonnegative half widths".into()));
                }
            }
            Experiment::EvolveFree { packet, grid, times } => {
                check_packet(packet)?;
                grid.validate()?;
                check_times(times)?;
            }
            Experiment::EvolveCurved { packet, grid, times, evolution } => {
                check_packet(packet)?;
                grid.validate()?;
                check_times(times)?;
                check_evolution(evolution)?;
            }
            Experiment::WfTest { packet, grid, space, time, evolution, detector, .. } => {
                check_packet(packet)?;
                grid.validate()?;
                detector.validate()?;
                if !time.is_finite() {
                    return Err(Error::Config("wf-test time must be finite".into()));
                }
                if *space == Space::Curved && *time != 0.0 {
                    check_evolution(evolution.as_ref().ok_or_else(|| Error::Config("curved evolution needs an evolution block".into()))?)?;
                }
            }
            Experiment::SmoothingCheck { starts, check } | Experiment::TheoremCheck { starts, check } => {
                starts.validate()?;
                check.detector.validate()?;
                if let Some(rh) = &check.rh_detector {
                    rh.validate()?;
                }
                if matches!(self.experiment, Experiment::SmoothingCheck { .. }) && check.rh_detector.is_none() {
                    return Err(Error::Config("smoothing check needs rh_detector".into()));
                }
                if !(check.t0 > 0.0) || !(check.mollifier > 0.0) || !(check.keep >= 1.0) {
                    return Err(Error::Config("theorem check needs t0 > 0, mollifier > 0 and keep >= 1".into()));
                }
            }
        }
        Ok(metric)
    }
}
