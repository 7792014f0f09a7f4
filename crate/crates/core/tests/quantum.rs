mod common;

use std::f64::consts::TAU;

use conic_scatter::classical::FreePhasePoint;
use conic_scatter::geometry::ScatteringMetric;
use conic_scatter::quantum::{
    cutoff_j, free_evolve, gaussian_free_solution, j_adjoint, j_embed, CoherentState, CurvedState,
    FreeState, Grid, Scheme,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn packet_params() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((1.5f64..8.5, -4.0f64..4.0, -3.0f64..3.0, 0.0f64..TAU), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn j_adjointness(u_params in packet_params(), v_params in packet_params()) {
        let metric = common::bump_metric();
        let (cg, fg) = common::aligned_grids(16);
        let u = FreeState::from_fn(fg, metric.boundary, |r, th| common::packet_sum(&u_params, r, th));
        let v = CurvedState::from_fn(&metric, cg, |r, th| common::packet_sum(&v_params, r, th)).unwrap();
        let ju = j_embed(&u, &metric, &CurvedState::zeros(&metric, cg).unwrap()).unwrap();
        let jv = j_adjoint(&v, &metric, &FreeState::zeros(fg, metric.boundary)).unwrap();
        let lhs = ju.inner(&v).unwrap();
        let rhs = u.inner(&jv).unwrap();
        let scale = u.norm() * v.norm();
        prop_assert!((lhs - rhs).norm() <= 1e-8 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn j_j_adjoint_is_cutoff_squared(v_params in packet_params()) {
        let metric = common::bump_metric();
        let (cg, fg) = common::aligned_grids(16);
        let v = CurvedState::from_fn(&metric, cg, |r, th| common::packet_sum(&v_params, r, th)).unwrap();
        let back = j_embed(&j_adjoint(&v, &metric, &FreeState::zeros(fg, metric.boundary)).unwrap(), &metric, &v).unwrap();
        let want: Vec<Complex64> = v.data.iter().enumerate().map(|(n, z)| z * cutoff_j(cg.r(n % cg.n_r)).powi(2)).collect();
        prop_assert!(common::max_diff(&back.data, &want) < 1e-10);
    }

    #[test]
    fn free_evolution_is_unitary(params in packet_params(), t in -2.0f64..2.0) {
        let (_, fg) = common::aligned_grids(8);
        let u = FreeState::from_fn(fg, ScatteringMetric::flat().boundary, |r, th| common::packet_sum(&params, r, th));
        let v = free_evolve(&u, t);
        prop_assert!((v.norm() - u.norm()).abs() < 1e-12 * u.norm());
    }
}

#[test]
fn free_gaussian_matches_closed_form() {
    let g = Grid::periodic(-80.0, 80.0, 4096, 1).unwrap();
    let b = ScatteringMetric::flat().boundary;
    let u0 = FreeState::from_fn(g, b, |r, _| gaussian_free_solution(r, 0.0, 2.0, -2.0, 0.5));
    for t in [0.3, 1.0, 2.5] {
        let want = FreeState::from_fn(g, b, |r, _| gaussian_free_solution(r, t, 2.0, -2.0, 0.5));
        let err = common::max_diff(&free_evolve(&u0, t).data, &want.data);
        assert!(err < 1e-10, "t = {t}: {err}");
    }
}

#[test]
fn spectral_eigenmode_phase_matches_oracle() {
    let err = common::eigenmode_phase_error(Scheme::Spectral, 0.5, 1.0);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn crank_nicolson_converges_to_the_oracle_phase() {
    let coarse = common::eigenmode_phase_error(Scheme::CrankNicolson, 5e-4, 1.0);
    let fine = common::eigenmode_phase_error(Scheme::CrankNicolson, 2.5e-4, 1.0);
    assert!(fine < coarse, "{coarse} -> {fine}");
    assert!(fine < 1e-2, "{fine}");
}

#[test]
fn oracle_recovers_the_flat_bessel_problem() {
    // for m = 1/2 the half-density potential (m² − 1/4)/r² vanishes, leaving
    // −w″ = λw on an interval of length 1
    let want = std::f64::consts::PI.powi(2);
    assert!((common::extrapolated_ground_state(|_| 1.0, 0.5, 1.0, 2.0, 1000) - want).abs() < 1e-7);
}

#[test]
fn coherent_state_is_normalised_and_centred() {
    let c = FreePhasePoint::new(6.0, 1.0, -0.5, 0.25);
    let g = Grid::periodic(1.5, 10.5, 1024, 96).unwrap();
    let u = CoherentState::new(c, 1.0 / 32.0).unwrap().free_state(g, ScatteringMetric::flat().boundary).unwrap();
    assert!((u.norm() - 1.0).abs() < 1e-12);
    let (r, th) = u.position_expectation();
    assert!((r - 6.0).abs() < 1e-6 && (th - 1.0).abs() < 1e-6, "{r} {th}");
    let (rho, omega) = u.momentum_expectation(1.0 / 32.0);
    assert!((rho + 0.5).abs() < 1e-6, "{rho}");
    assert!((omega - 0.25).abs() < 1.0 / 32.0, "{omega}");
}
