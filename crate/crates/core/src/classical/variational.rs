use nalgebra::{Matrix4, SVector};
use num_dual::{hessian, Dual2SVec64};
use serde::{Deserialize, Serialize};

use super::flow::{hamilton_rhs, FlowOptions};
use super::ode;
use super::scattering::scattering_map_s_t;
use super::PhasePoint;
use crate::error::{Error, Result};
use crate::geometry::{check_radius, Potential, ScatteringMetric};

/// Derivative of the Hamiltonian vector field, `DF = Ω ∇²H`.
pub(crate) fn flow_jacobian(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    s: &PhasePoint,
) -> Result<[[f64; 4]; 4]> {
    check_radius(s.r)?;
    let x = SVector::<f64, 4>::from(s.to_array());
    let (_, _, hess) = hessian(
        |z: SVector<Dual2SVec64<4>, 4>| {
            let mut e = metric.symbol(z[0], z[1], z[2], z[3]);
            if let Some(v) = potential {
                e += v.value(z[0], z[1]);
            }
            e
        },
        &x,
    );
    let mut df = [[0.0; 4]; 4];
    for j in 0..4 {
        df[0][j] = hess[(2, j)];
        df[1][j] = hess[(3, j)];
        df[2][j] = -hess[(0, j)];
        df[3][j] = -hess[(1, j)];
    }
    Ok(df)
}

/// Shear `(r, θ, ρ, ω) ↦ (r − 2tρ, θ, ρ, ω)` applied to a Jacobian.
fn shear(t: f64, y: &Matrix4<f64>) -> Matrix4<f64> {
    let mut j = *y;
    for c in 0..4 {
        j[(0, c)] = y[(0, c)] - 2.0 * t * y[(2, c)];
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub t: f64,
    /// `S_t` of the start point.
    pub point: PhasePoint,
    /// `∂(R, θ, ρ, ω)(t) / ∂(R₀, θ₀, ρ⁰, ω⁰)` with `R = r − 2tρ`.
    pub jacobian: [[f64; 4]; 4],
}

impl VariationalState {
    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.jacobian[i][j])
    }

    /// Induced 2-norm of `J − I`.
    pub fn deviation_norm(&self) -> f64 {
        (self.matrix() - Matrix4::identity()).singular_values().max()
    }
}

fn pack(z: &[f64; 4], y: &Matrix4<f64>) -> [f64; 20] {
    let mut out = [0.0; 20];
    out[..4].copy_from_slice(z);
    for i in 0..4 {
        for j in 0..4 {
            out[4 + 4 * i + j] = y[(i, j)];
        }
    }
    out
}

fn unpack(v: &[f64; 20]) -> (PhasePoint, Matrix4<f64>) {
    (PhasePoint::new(v[0], v[1], v[2], v[3]), Matrix4::from_fn(|i, j| v[4 + 4 * i + j]))
}

/// Flow plus linearised flow, sampled at decreasing times.
fn variational_samples(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    times: &[f64],
    opts: &FlowOptions,
) -> Result<Vec<VariationalState>> {
    check_radius(start.r)?;
    let t_end = times.iter().copied().fold(0.0, f64::min);
    let rhs = |_: f64, v: &[f64; 20]| -> Result<[f64; 20]> {
        let (s, y) = unpack(v);
        let f = hamilton_rhs(metric, potential, &s)?;
        let df = flow_jacobian(metric, potential, &s)?;
        let dfm = Matrix4::from_fn(|i, j| df[i][j]);
        Ok(pack(&f, &(dfm * y)))
    };
    let edge = opts.chart_exit_radius;
    // the error control sees the Jacobian entries too, which keeps them
    // as accurate as the orbit itself
    let sol = ode::integrate(rhs, 0.0, pack(&start.to_array(), &Matrix4::identity()), t_end, times, &opts.ode(), |_, v| {
        v[0] <= edge
    })?;
    if sol.stopped {
        return Err(Error::ChartExit { t: sol.t_last });
    }
    Ok(sol
        .samples
        .iter()
        .map(|(t, v)| {
            let (s, y) = unpack(v);
            let j = shear(*t, &y);
            VariationalState {
                t: *t,
                point: PhasePoint::new(s.r - 2.0 * t * s.rho, s.theta, s.rho, s.omega),
                jacobian: std::array::from_fn(|i| std::array::from_fn(|k| j[(i, k)])),
            }
        })
        .collect())
}

/// Jacobian of the sheared map `S_t` from the variational equations.
pub fn jacobian_s_t(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    t: f64,
    opts: &FlowOptions,
) -> Result<VariationalState> {
    if t > 0.0 {
        return Err(Error::Domain(format!("S_t is defined for t <= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(VariationalState {
            t,
            point: start,
            jacobian: std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 })),
        });
    }
    Ok(variational_samples(metric, potential, start, &[t], opts)?.remove(0))
}

/// Central-difference Jacobian of `S_t` with step `step` per coordinate.
pub fn finite_difference_jacobian(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    start: PhasePoint,
    t: f64,
    step: f64,
    opts: &FlowOptions,
) -> Result<[[f64; 4]; 4]> {
    let mut jac = [[0.0; 4]; 4];
    let base = start.to_array();
    for c in 0..4 {
        let mut plus = base;
        let mut minus = base;
        plus[c] += step;
        minus[c] -= step;
        let fp = scattering_map_s_t(metric, potential, PhasePoint::from_array(plus), t, opts)?.to_array();
        let fm = scattering_map_s_t(metric, potential, PhasePoint::from_array(minus), t, opts)?.to_array();
        for r in 0..4 {
            jac[r][c] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Box `center ± half_widths` sampled on a tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffeoWindow {
    pub center: PhasePoint,
    pub half_widths: [f64; 4],
    /// Points per axis (1 samples the center only).
    pub per_axis: usize,
}

impl DiffeoWindow {
    pub fn points(&self) -> Vec<PhasePoint> {
        let n = self.per_axis.max(1);
        let offs = |k: usize| if n == 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (n - 1) as f64 };
        let c = self.center.to_array();
        let mut out = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    for e in 0..n {
                        let idx = [a, b, d, e];
                        out.push(PhasePoint::from_array(std::array::from_fn(|i| {
                            c[i] + offs(idx[i]) * self.half_widths[i]
                        })));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub t: f64,
    /// `sup ‖J(t) − I‖` over the window points that stayed in the chart.
    pub sup_norm: f64,
    pub failed_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffeoReport {
    pub entries: Vec<WindowEntry>,
    /// Window points whose trajectories left the chart.
    pub chart_exits: Vec<PhasePoint>,
    /// `sup` over the window of `‖J(t_k) − J(t_{k−1})‖` per ladder step.
    pub increments: Vec<f64>,
    pub convergent: bool,
    pub passed: bool,
}

/// Checks `‖J(t) − I‖ < 1/2` over a phase-space window along a ladder of
/// negative times.
pub fn check_local_diffeo(
    metric: &ScatteringMetric,
    potential: Option<&Potential>,
    window: &DiffeoWindow,
    t_ladder: &[f64],
    opts: &FlowOptions,
) -> Result<DiffeoReport> {
    let mut ladder: Vec<f64> = t_ladder.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    if ladder.iter().any(|&t| t >= 0.0) {
        return Err(Error::Domain("ladder times must be negative".into()));
    }
    let mut sup = vec![0.0_f64; ladder.len()];
    let mut increments = vec![0.0_f64; ladder.len().saturating_sub(1)];
    let mut chart_exits = Vec::new();
    for p in window.points() {
        match variational_samples(metric, potential, p, &ladder, opts) {
            Ok(states) => {
                for (k, s) in states.iter().enumerate() {
                    sup[k] = sup[k].max(s.deviation_norm());
                    if k > 0 {
                        let d = (s.matrix() - states[k - 1].matrix()).singular_values().max();
                        increments[k - 1] = increments[k - 1].max(d);
                    }
                }
            }
            Err(Error::ChartExit { .. }) | Err(Error::Domain(_)) => chart_exits.push(p),
            Err(e) => return Err(e),
        }
    }
    let failed = chart_exits.len();
    let entries: Vec<WindowEntry> = ladder
        .iter()
        .zip(&sup)
        .map(|(&t, &s)| WindowEntry { t, sup_norm: s, failed_points: failed })
        .collect();
    let convergent = match (increments.first(), increments.last()) {
        (Some(&a), Some(&b)) if increments.len() > 1 => b <= 0.5 * a || b < 1e-3,
        _ => true,
    };
    let passed = failed == 0 && convergent && sup.iter().all(|&s| s < 0.5);
    Ok(DiffeoReport { entries, chart_exits, increments, convergent, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_time_zero() {
        let m = ScatteringMetric::flat();
        let v = jacobian_s_t(&m, None, PhasePoint::new(5.0, 0.2, -1.0, 0.5), 0.0, &FlowOptions::default()).unwrap();
        assert_eq!(v.matrix(), Matrix4::identity());
    }

    #[test]
    fn flat_radial_family_is_identity() {
        let m = ScatteringMetric::flat();
        let v = jacobian_s_t(&m, None, PhasePoint::new(5.0, 0.0, -1.0, 0.0), -20.0, &FlowOptions::default()).unwrap();
        assert!((v.jacobian[0][0] - 1.0).abs() < 1e-12);
        assert!(v.jacobian[0][2].abs() < 1e-10);
    }

    #[test]
    fn flat_flow_jacobian_matches_hand_formula() {
        // F = (2ρ, 2ω/r², 2ω²/r³, 0)
        let m = ScatteringMetric::flat();
        let (r, w) = (2.0, 0.5);
        let df = flow_jacobian(&m, None, &PhasePoint::new(r, 0.3, -1.0, w)).unwrap();
        let want = [
            [0.0, 0.0, 2.0, 0.0],
            [-4.0 * w / r.powi(3), 0.0, 0.0, 2.0 / (r * r)],
            [-6.0 * w * w / r.powi(4), 0.0, 0.0, 4.0 * w / r.powi(3)],
            [0.0; 4],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((df[i][j] - want[i][j]).abs() < 1e-14, "({i},{j})");
            }
        }
    }
}
