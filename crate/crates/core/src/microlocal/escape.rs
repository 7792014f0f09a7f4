use serde::{Deserialize, Serialize};

use crate::classical::{flow_to, hamilton_rhs, integrate_flow_at, FlowOptions, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::ScatteringMetric;
use crate::quantum::grid::wrap;
use crate::smooth::{step, step_derivative};

/// `χ(τ)`: `1` for `τ ≤ 1`, `0` for `τ ≥ 2`, nonincreasing.
fn chi(tau: f64) -> f64 {
    1.0 - step(tau - 1.0)
}

fn chi_prime(tau: f64) -> f64 {
    -step_derivative(tau - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EscapeParams {
    pub c: f64,
    pub delta_prime: f64,
    /// Defaults to `3δ′/4`; must lie in `(δ′/2, δ′)`.
    pub delta0: Option<f64>,
    /// Defaults to `−(2C/δ′)^{1/μ}`.
    pub t0: Option<f64>,
}

impl Default for EscapeParams {
    fn default() -> Self {
        Self { c: 50.0, delta_prime: 0.1, delta0: None, t0: None }
    }
}

/// Product of four cutoffs following `exp((t + T₀)H_p)` of a start point:
/// `φ = χ(|r−r(t)|/5δ₀s) χ(|θ−θ(t)|/W) χ(|ρ−ρ(t)|/W₃) χ(|ω−ω(t)|/W)` with
/// `s = |t + T₀|`, `W = δ₀ − Cs^{−μ}` and `W₃ = δ₀ − Cs^{−μ−1}`.
#[derive(Debug, Clone)]
pub struct EscapeFunction {
    pub metric: ScatteringMetric,
    pub start: PhasePoint,
    pub c: f64,
    pub delta0: f64,
    pub t0: f64,
    pub mu: f64,
    pub flow: FlowOptions,
}

impl EscapeFunction {
    pub fn new(metric: ScatteringMetric, start: PhasePoint, params: EscapeParams) -> Result<Self> {
        let mu = metric.mu;
        let EscapeParams { c, delta_prime, .. } = params;
        if !(c > 0.0 && delta_prime > 0.0 && mu > 0.0) {
            return Err(Error::Config("escape function needs C, δ′ and μ positive".into()));
        }
        let delta0 = params.delta0.unwrap_or(0.75 * delta_prime);
        if !(delta0 > 0.5 * delta_prime && delta0 < delta_prime) {
            return Err(Error::Config(format!("δ₀ = {delta0} must lie in (δ′/2, δ′)")));
        }
        let t_min = (2.0 * c / delta_prime).powf(1.0 / mu);
        let t0 = params.t0.unwrap_or(-t_min);
        if !(t0 <= -t_min) {
            return Err(Error::Config(format!("T₀ = {t0} must satisfy T₀ ≤ −{t_min:.6e}")));
        }
        Ok(Self { metric, start, c, delta0, t0, mu, flow: FlowOptions::default() })
    }

    fn check_time(t: f64) -> Result<()> {
        if t > 0.0 {
            return Err(Error::Domain(format!("escape function is defined for t <= 0, got {t}")));
        }
        Ok(())
    }

    /// Reference point `exp((t + T₀)H_p)(start)`.
    pub fn reference(&self, t: f64) -> Result<PhasePoint> {
        Self::check_time(t)?;
        flow_to(&self.metric, None, self.start, t + self.t0, &self.flow)
    }

    /// Reference points at decreasing times `ts ≤ 0` from one integration.
    pub fn references(&self, ts: &[f64]) -> Result<Vec<PhasePoint>> {
        ts.iter().try_for_each(|&t| Self::check_time(t))?;
        let mut times = vec![0.0];
        times.extend(ts.iter().map(|t| t + self.t0));
        let traj = integrate_flow_at(&self.metric, None, self.start, &times, &self.flow)?;
        if let Some(t) = traj.chart_exit {
            return Err(Error::ChartExit { t });
        }
        Ok(traj.samples[1..].iter().map(|s| s.point).collect())
    }

    /// Window widths and their time derivatives at `t`.
    fn widths(&self, t: f64) -> ([f64; 4], [f64; 4]) {
        let s = -(t + self.t0);
        let (c, mu, d) = (self.c, self.mu, self.delta0);
        let w = d - c * s.powf(-mu);
        let w3 = d - c * s.powf(-mu - 1.0);
        let dw = -c * mu * s.powf(-mu - 1.0);
        let dw3 = -c * (mu + 1.0) * s.powf(-mu - 2.0);
        ([5.0 * d * s, w, w3, w], [-5.0 * d, dw, dw3, dw])
    }

    fn offsets(reference: &PhasePoint, state: &PhasePoint) -> [f64; 4] {
        [
            state.r - reference.r,
            wrap(state.theta - reference.theta),
            state.rho - reference.rho,
            state.omega - reference.omega,
        ]
    }

    /// `φ` given the reference point at `t`.
    pub fn phi_with(&self, t: f64, reference: &PhasePoint, state: &PhasePoint) -> f64 {
        let (w, _) = self.widths(t);
        let d = Self::offsets(reference, state);
        (0..4).map(|i| chi(d[i].abs() / w[i])).product()
    }

    /// `Dφ/Dt = ∂_t φ + {p, φ}` given the reference point at `t`, from the
    /// chain rule through each `τ_i = |d_i|/W_i`.
    pub fn lagrange_with(&self, t: f64, reference: &PhasePoint, state: &PhasePoint) -> Result<f64> {
        let (w, dw) = self.widths(t);
        let d = Self::offsets(reference, state);
        let tau: [f64; 4] = std::array::from_fn(|i| d[i].abs() / w[i]);
        let c: [f64; 4] = tau.map(chi);
        let cp: [f64; 4] = tau.map(chi_prime);
        if cp.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        let v = hamilton_rhs(&self.metric, None, state)?;
        let v_ref = hamilton_rhs(&self.metric, None, reference)?;
        let mut total = 0.0;
        for i in 0..4 {
            if cp[i] == 0.0 {
                continue;
            }
            let others: f64 = (0..4).filter(|&j| j != i).map(|j| c[j]).product();
            if others == 0.0 {
                continue;
            }
            let dtau = d[i].signum() * (v[i] - v_ref[i]) / w[i] - tau[i] * dw[i] / w[i];
            total += cp[i] * dtau * others;
        }
        Ok(total)
    }
}

pub fn escape_phi(ef: &EscapeFunction, t: f64, state: &PhasePoint) -> Result<f64> {
    Ok(ef.phi_with(t, &ef.reference(t)?, state))
}

pub fn escape_phi_lagrange(ef: &EscapeFunction, t: f64, state: &PhasePoint) -> Result<f64> {
    ef.lagrange_with(t, &ef.reference(t)?, state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_profile() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(2.5), 0.0);
        assert!(chi_prime(1.5) < 0.0);
    }

    #[test]
    fn parameter_checks() {
        let m = ScatteringMetric::flat();
        let p = PhasePoint::new(5.0, 0.0, -1.0, 0.5);
        assert!(EscapeFunction::new(m.clone(), p, EscapeParams { delta0: Some(0.04), ..Default::default() }).is_err());
        assert!(EscapeFunction::new(m.clone(), p, EscapeParams { t0: Some(-10.0), ..Default::default() }).is_err());
        let ef = EscapeFunction::new(m, p, EscapeParams::default()).unwrap();
        assert!(ef.t0 <= -(1000.0f64).powf(1.0 / ef.mu));
    }
}
