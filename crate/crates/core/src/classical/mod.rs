//! Hamiltonian flow of the kinetic symbol in polar phase space.

mod flow;
pub mod ode;
mod scattering;
mod variational;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

pub use flow::{
    detect_nontrapping, energy, flow_to, hamilton_rhs, integrate_flow, integrate_flow_at, virial, FlowOptions, Trajectory, TrajectorySample,
    TrappingStatus, TrappingVerdict, CHART_EXIT_RADIUS,
};
pub use scattering::{
    extract_scattering_data, scattering_map_s_t, straight_line_scattering_data, ComponentFit,
    ExtrapolationLadder, ScatteringData, ScatteringStatus,
};
pub use variational::{
    check_local_diffeo, finite_difference_jacobian, jacobian_s_t, DiffeoReport, DiffeoWindow,
    VariationalState, WindowEntry,
};

/// A covector `(ρ, ω)` at the point `(r, θ)` of the end chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: f64,
    /// Unwrapped angle; use [`PhasePoint::theta_mod`] for storage.
    pub theta: f64,
    pub rho: f64,
    pub omega: f64,
}

impl PhasePoint {
    pub const fn new(r: f64, theta: f64, rho: f64, omega: f64) -> Self {
        Self { r, theta, rho, omega }
    }

    /// Polar coordinates of a Cartesian point and covector in the plane.
    pub fn from_cartesian(x: [f64; 2], xi: [f64; 2]) -> Self {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]).rem_euclid(TAU);
        Self {
            r,
            theta,
            rho: (x[0] * xi[0] + x[1] * xi[1]) / r,
            omega: x[0] * xi[1] - x[1] * xi[0],
        }
    }

    /// Inverse of [`PhasePoint::from_cartesian`] for the flat plane.
    pub fn to_cartesian(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.theta.sin_cos();
        let x = [self.r * c, self.r * s];
        let w = self.omega / self.r;
        (x, [self.rho * c - w * s, self.rho * s + w * c])
    }

    pub fn theta_mod(&self) -> f64 {
        self.theta.rem_euclid(TAU)
    }

    /// Number of full turns in the unwrapped angle.
    pub fn winding(&self) -> i64 {
        (self.theta / TAU).floor() as i64
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.theta, self.rho, self.omega]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

/// A point of `T*M_free`, `M_free = ℝ × S¹`; `r` may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreePhasePoint {
    pub r: f64,
    pub theta: f64,
    pub rho: f64,
    pub omega: f64,
}

impl FreePhasePoint {
    pub const fn new(r: f64, theta: f64, rho: f64, omega: f64) -> Self {
        Self { r, theta, rho, omega }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.theta, self.rho, self.omega]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl From<PhasePoint> for FreePhasePoint {
    fn from(p: PhasePoint) -> Self {
        Self::new(p.r, p.theta, p.rho, p.omega)
    }
}

/// Flow of `ρ²` on `T*M_free`: `(r, θ, ρ, ω) ↦ (r + 2tρ, θ, ρ, ω)`.
pub fn comparison_flow(state: FreePhasePoint, t: f64) -> FreePhasePoint {
    FreePhasePoint { r: state.r + 2.0 * t * state.rho, ..state }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_flow_examples() {
        let s = FreePhasePoint::new(5.0, 0.0, -1.0, 0.0);
        assert_eq!(comparison_flow(s, -3.0), FreePhasePoint::new(11.0, 0.0, -1.0, 0.0));
        assert_eq!(comparison_flow(s, 0.0), s);
    }

    #[test]
    fn cartesian_round_trip() {
        let p = PhasePoint::from_cartesian([3.0, 4.0], [1.0, 0.0]);
        assert!((p.r - 5.0).abs() < 1e-15);
        assert!((p.rho - 0.6).abs() < 1e-15);
        assert!((p.omega + 4.0).abs() < 1e-15);
        let (x, xi) = p.to_cartesian();
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 4.0).abs() < 1e-14);
        assert!((xi[0] - 1.0).abs() < 1e-14 && xi[1].abs() < 1e-14);
    }

    #[test]
    fn winding_counts_turns() {
        assert_eq!(PhasePoint::new(2.0, 7.0, 0.0, 0.0).winding(), 1);
        assert_eq!(PhasePoint::new(2.0, -0.1, 0.0, 0.0).winding(), -1);
    }
}
