use serde::{Deserialize, Serialize};

use super::ode::{self, Dopri5Options};
use super::variational::flow_jacobian;
use super::PhasePoint;
use crate::error::{Error, Result};
use crate::geometry::{check_radius, Potential, ScatteringMetric};

/// Integration stops once `r` drops to this radius.
pub const CHART_EXIT_RADIUS: f64 = 1.05;

/// `(ṙ, θ̇, ρ̇, ω̇)` for the symbol `p`, plus `-∇V` when a potential is
/// passed in.
pub fn hamilton_rhs(metric: &ScatteringMetric, potential: Option<&Potential>, s: &PhasePoint) -> Result<[f64; 4]> {
    check_radius(s.r)?;
    let jet = metric.coeff_jet(s.r, s.theta);
    let [a0, a1, a2, h_inv] = jet.val;
    let [a0_r, a1_r, a2_r, _] = jet.dr;
    let [a0_t, a1_t, a2_t, h_inv_t] = jet.dtheta;
    let (r, rho, w) = (s.r, s.rho, s.omega);
    let r2 = r * r;
    let r3 = r2 * r;
    let r_dot = 2.0 * rho + 2.0 * a0 * rho + a1 * w / r;
    let theta_dot = 2.0 * h_inv * w / r2 + a1 * rho / r + 2.0 * a2 * w / r2;
    let mut rho_dot = 2.0 * h_inv * w * w / r3 - a0_r * rho * rho + a1 * rho * w / r2 - a1_r * rho * w / r
        + 2.0 * a2 * w * w / r3
        - a2_r * w * w / r2;
    let mut omega_dot = -h_inv_t * w * w / r2 - a0_t * rho * rho - a1_t * rho * w / r - a2_t * w * w / r2;
    if let Some(v) = potential {
        let (vr, vt) = v.gradient(r, s.theta);
        rho_dot -= vr;
        omega_dot -= vt;
    }
    Ok([r_dot, theta_dot, rho_dot, omega_dot])
}

/// The conserved quantity of the flow: `p`, or `p + V` when the potential
/// takes part.
pub fn energy(metric: &ScatteringMetric, potential: Option<&Potential>, s: &PhasePoint) -> f64 {
    metric.symbol(s.r, s.theta, s.rho, s.omega) + potential.map_or(0.0, |v| v.eval(s.r, s.theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    pub tol: f64,
    /// Number of uniformly spaced output samples on `[t_end, 0]`.
    pub samples: usize,
    pub chart_exit_radius: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { tol: 1e-10, samples: 1001, chart_exit_radius: CHART_EXIT_RADIUS }
    }
}

impl FlowOptions {
    pub(crate) fn ode(&self) -> Dopri5Options {
        Dopri5Options::with_tol(self.tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: PhasePoint,
    pub p_rel_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Times decrease from `0` towards `t_span[0]`.
    pub samples: Vec<TrajectorySample>,
    pub energy_drift: f64,
    pub t_span: [f64; 2],
    pub p0: f64,
    /// Time of the last accepted state if the chart edge was reached.
    pub chart_exit: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least the start sample")
    }
}

fn relative_drift(e: f64, e0: f64) -> f64 {
    if e0.abs() > 0.0 {
        ((e - e0) / e0).abs()
    } else {
        (e - e0).abs()
    }
}

/// Backward flow from `start` with uniform samples on `[t_end, 0]`.
pub fn integrate_flow(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    t_end: f64,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if !(t_end < 0.0) {
        return Err(Error::Domain(format!("backward integration needs t_end < 0, got {t_end}")));
    }
    let n = opts.samples.max(2);
    let times: Vec<f64> = (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect();
    integrate_flow_at(metric, potential, start, &times, opts)
}

/// Flow sampled at the given decreasing times (the first may be `0`).
pub fn integrate_flow_at(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    times: &[f64],
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    check_radius(start.r)?;
    let t_end = times.iter().copied().fold(0.0, f64::min);
    if times.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Domain("sample times must decrease".into()));
    }
    let e0 = energy(metric, potential, &start);
    let rhs = |_: f64, y: &[f64; 4]| hamilton_rhs(metric, potential, &PhasePoint::from_array(*y));
    let edge = opts.chart_exit_radius;
    let sol = ode::integrate(rhs, 0.0, start.to_array(), t_end, times, &opts.ode(), |_, y| y[0] <= edge)?;

    let mut samples: Vec<TrajectorySample> = sol
        .samples
        .iter()
        .filter(|(_, y)| y[0] > edge)
        .map(|&(t, y)| {
            let point = PhasePoint::from_array(y);
            TrajectorySample { t, point, p_rel_drift: relative_drift(energy(metric, potential, &point), e0) }
        })
        .collect();
    let chart_exit = sol.stopped.then_some(sol.t_last);
    if samples.is_empty() {
        samples.push(TrajectorySample { t: 0.0, point: start, p_rel_drift: 0.0 });
    }
    let energy_drift = samples.iter().map(|s| s.p_rel_drift).fold(0.0, f64::max);
    Ok(Trajectory { samples, energy_drift, t_span: [t_end, 0.0], p0: e0, chart_exit })
}

/// `exp(tH_p)` of a point for either sign of `t`; forward times use the
/// reversibility `(x, ξ, t) ↦ (x, −ξ, −t)` of the flow.
pub fn flow_to(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    t: f64,
    opts: &FlowOptions,
) -> Result<PhasePoint> {
    if t == 0.0 {
        return Ok(start);
    }
    let flip = |p: PhasePoint| PhasePoint { rho: -p.rho, omega: -p.omega, ..p };
    let s = if t > 0.0 { flip(start) } else { start };
    let traj = integrate_flow_at(metric, potential, s, &[-t.abs()], opts)?;
    if let Some(te) = traj.chart_exit {
        return Err(Error::ChartExit { t: if t > 0.0 { -te } else { te } });
    }
    let end = traj.last().point;
    Ok(if t > 0.0 { flip(end) } else { end })
}

/// `d²(r²)/dt² = 2(ṙ² + r r̈)` at a phase point.
pub fn virial(metric: &ScatteringMetric, potential: Option<&Potential>, s: &PhasePoint) -> Result<f64> {
    let f = hamilton_rhs(metric, potential, s)?;
    let df = flow_jacobian(metric, potential, s)?;
    let r_ddot: f64 = (0..4).map(|j| df[0][j] * f[j]).sum();
    Ok(2.0 * (f[0] * f[0] + s.r * r_ddot))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrappingStatus {
    Nontrapped,
    Trapped,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappingVerdict {
    pub status: TrappingStatus,
    /// First sampled time with `r > R_esc`.
    pub escape_time: Option<f64>,
    /// Smallest `C` with `r(t) ≥ |t|/C − C` on every sample.
    pub c_fit: Option<f64>,
    /// `sup |d²(r²)/dt² − 8p₀| r^μ` over the tail beyond `R_esc / 2`.
    pub virial_constant: Option<f64>,
    pub chart_exit: Option<f64>,
    pub t_reached: f64,
}

/// Smallest `C ≥ 1` such that `r ≥ |t|/C − C` holds on all samples.
fn fit_escape_constant(samples: &[TrajectorySample]) -> f64 {
    let holds = |c: f64| samples.iter().all(|s| s.point.r >= s.t.abs() / c - c);
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
    }
    if hi == 1.0 {
        return 1.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Backward escape test: the trajectory is declared nontrapped once it
/// passes `R_esc` moving outward with a convex `r²`.
pub fn detect_nontrapping(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    t_max: f64,
    r_esc: f64,
    opts: &FlowOptions,
) -> Result<TrappingVerdict> {
    if !(t_max > 0.0) || !(r_esc > metric.r_conic) {
        return Err(Error::Domain(format!("need T_max > 0 and R_esc > R_conic, got {t_max}, {r_esc}")));
    }
    check_radius(start.r)?;
    let edge = opts.chart_exit_radius;
    let e0 = energy(metric, potential, &start);
    let n = opts.samples.max(2);
    let times: Vec<f64> = (0..n).map(|k| -t_max * k as f64 / (n - 1) as f64).collect();
    let rhs = |_: f64, y: &[f64; 4]| hamilton_rhs(metric, potential, &PhasePoint::from_array(*y));
    let escaped = |y: &[f64; 4]| {
        let s = PhasePoint::from_array(*y);
        y[0] > r_esc
            && hamilton_rhs(metric, potential, &s).map_or(false, |f| f[0] < 0.0)
            && virial(metric, potential, &s).map_or(false, |v| v > 4.0 * e0)
    };
    let sol = ode::integrate(rhs, 0.0, start.to_array(), -t_max, &times, &opts.ode(), |_, y| {
        y[0] <= edge || escaped(y)
    })?;
    let mut samples: Vec<TrajectorySample> = sol
        .samples
        .iter()
        .filter(|(_, y)| y[0] > edge)
        .map(|&(t, y)| TrajectorySample { t, point: PhasePoint::from_array(y), p_rel_drift: 0.0 })
        .collect();
    let last = PhasePoint::from_array(sol.y_last);
    if sol.y_last[0] > edge {
        samples.push(TrajectorySample { t: sol.t_last, point: last, p_rel_drift: 0.0 });
    }

    let mut verdict = TrappingVerdict {
        status: TrappingStatus::Undecided,
        escape_time: None,
        c_fit: None,
        virial_constant: None,
        chart_exit: None,
        t_reached: sol.t_last,
    };
    if sol.stopped && sol.y_last[0] <= edge {
        verdict.chart_exit = Some(sol.t_last);
        return Ok(verdict);
    }
    if sol.stopped {
        verdict.status = TrappingStatus::Nontrapped;
        verdict.escape_time =
            Some(samples.iter().find(|s| s.point.r > r_esc).map_or(sol.t_last, |s| s.t));
        verdict.c_fit = Some(fit_escape_constant(&samples));
        let mut c_vir: f64 = 0.0;
        for s in samples.iter().filter(|s| s.point.r > 0.5 * r_esc) {
            let v = virial(metric, potential, &s.point)?;
            c_vir = c_vir.max((v - 8.0 * e0).abs() * s.point.r.powf(metric.mu));
        }
        verdict.virial_constant = Some(c_vir);
        return Ok(verdict);
    }
    // Ran to -T_max inside R_esc: trapped if the radius shows no outward
    // trend between the two halves of the run.
    let half = samples.len() / 2;
    let sup = |s: &[TrajectorySample]| s.iter().map(|x| x.point.r).fold(0.0, f64::max);
    if half > 0 && sup(&samples[half..]) <= 1.01 * sup(&samples[..half]) {
        verdict.status = TrappingStatus::Trapped;
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_rhs_examples() {
        let m = ScatteringMetric::flat();
        let f = hamilton_rhs(&m, None, &PhasePoint::new(1.5, 0.0, 0.0, 1.0)).unwrap();
        let want = [0.0, 2.0 / 2.25, 2.0 / 3.375, 0.0];
        for i in 0..4 {
            assert!((f[i] - want[i]).abs() < 1e-15);
        }
        let f = hamilton_rhs(&m, None, &PhasePoint::new(3.0, 1.0, -0.7, 0.0)).unwrap();
        assert_eq!(f, [-1.4, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rhs_rejects_chart_edge() {
        let m = ScatteringMetric::flat();
        assert!(hamilton_rhs(&m, None, &PhasePoint::new(1.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn flat_radial_line() {
        let m = ScatteringMetric::flat();
        let tr = integrate_flow(&m, None, PhasePoint::new(5.0, 0.0, -1.0, 0.0), -10.0, &FlowOptions::default())
            .unwrap();
        let end = tr.last();
        assert_eq!(end.t, -10.0);
        assert!((end.point.r - 25.0).abs() < 1e-9);
        assert_eq!(end.point.rho, -1.0);
        assert!(tr.chart_exit.is_none());
    }

    #[test]
    fn inward_radial_line_exits_the_chart() {
        let m = ScatteringMetric::flat();
        let tr = integrate_flow(&m, None, PhasePoint::new(5.0, 0.0, 1.0, 0.0), -10.0, &FlowOptions::default())
            .unwrap();
        let t_exit = tr.chart_exit.expect("chart exit");
        assert!(t_exit < -1.9 && t_exit > -2.0);
        let v = detect_nontrapping(&m, None, PhasePoint::new(5.0, 0.0, 1.0, 0.0), 1e4, 1e3, &FlowOptions::default())
            .unwrap();
        assert_eq!(v.status, TrappingStatus::Undecided);
        assert!(v.chart_exit.is_some());
    }

    #[test]
    fn flat_escape() {
        let m = ScatteringMetric::flat();
        let v = detect_nontrapping(&m, None, PhasePoint::new(5.0, 0.0, -1.0, 0.0), 1e4, 1e3, &FlowOptions::default())
            .unwrap();
        assert_eq!(v.status, TrappingStatus::Nontrapped);
        let t = v.escape_time.unwrap();
        assert!(t < -497.0 && t > -520.0);
        assert!(v.c_fit.unwrap() <= 1.0 + 1e-9);
        assert!(v.virial_constant.unwrap() < 1e-6);
    }
}
