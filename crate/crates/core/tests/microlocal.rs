mod common;

use conic_scatter::classical::{flow_to, FlowOptions, FreePhasePoint, PhasePoint};
use conic_scatter::geometry::ScatteringMetric;
use conic_scatter::microlocal::{
    escape_phi, escape_phi_lagrange, weyl_apply, wf_test, Decision, DetectorConfig, EscapeFunction, EscapeParams, Scaling,
    SymbolCutoff,
};
use conic_scatter::quantum::{FreeState, Grid};
use conic_scatter::smooth::plateau;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::periodic(0.0, 12.0, 384, 32).unwrap()
}

fn smooth_field(params: &[(f64, f64, f64, f64)], g: &Grid) -> Vec<Complex64> {
    (0..g.len())
        .map(|n| {
            let (r, th) = (g.r(n % g.n_r), g.theta(n / g.n_r));
            params
                .iter()
                .map(|&(c, k, m, ph)| {
                    let x = r - c;
                    Complex64::from_polar((-x * x).exp(), k * x + m.round() * th + ph)
                })
                .sum()
        })
        .collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn unbounded_symbol_is_the_identity() {
    let g = grid();
    let w = smooth_field(&[(6.0, 2.0, 1.0, 0.3), (4.0, -1.0, -2.0, 1.0)], &g);
    let a = SymbolCutoff::new(FreePhasePoint::new(6.0, 1.0, 0.0, 0.0), [f64::INFINITY; 4]).unwrap();
    let out = weyl_apply(&a, 0.1, Scaling::Standard, &g, &w).unwrap();
    assert!(max_diff(&out, &w) < 1e-8);
}

#[test]
fn position_symbol_is_multiplication() {
    let g = grid();
    let w = smooth_field(&[(6.0, 2.0, 1.0, 0.3)], &g);
    let a = SymbolCutoff::new(FreePhasePoint::new(6.0, 1.0, 0.0, 0.0), [1.0, 0.8, f64::INFINITY, f64::INFINITY]).unwrap();
    let out = weyl_apply(&a, 0.1, Scaling::Standard, &g, &w).unwrap();
    let want: Vec<Complex64> = (0..g.len())
        .map(|n| {
            let p = FreePhasePoint::new(g.r(n % g.n_r), g.theta(n / g.n_r), 0.0, 0.0);
            w[n] * a.value(p)
        })
        .collect();
    assert!(max_diff(&out, &want) < 1e-12);
}

fn params() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((3.0f64..9.0, -6.0f64..6.0, -4.0f64..4.0, 0.0f64..6.3), 1..3)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn weyl_operator_is_self_adjoint(
        u in params(),
        v in params(),
        centre in (4.0f64..8.0, 0.0f64..6.3, -1.0f64..1.0, -0.5f64..0.5),
        scaling in prop::sample::select(vec![Scaling::Standard, Scaling::RadiallyHomogeneous]),
    ) {
        let g = grid();
        let (u, v) = (smooth_field(&u, &g), smooth_field(&v, &g));
        let eps = 0.2;
        let c = match scaling {
            Scaling::Standard => FreePhasePoint::new(centre.0, centre.1, centre.2, centre.3),
            Scaling::RadiallyHomogeneous => FreePhasePoint::new(centre.0 * eps, centre.1, centre.2, centre.3),
        };
        let a = SymbolCutoff::new(c, [1.0, 0.6, 0.5, 0.5]).unwrap();
        let au = weyl_apply(&a, eps, scaling, &g, &u).unwrap();
        let av = weyl_apply(&a, eps, scaling, &g, &v).unwrap();
        let scale = dot(&u, &u).re.sqrt() * dot(&v, &v).re.sqrt();
        prop_assert!((dot(&au, &v) - dot(&u, &av)).norm() <= 1e-8 * scale);
    }
}

/// A cut-off radial jump at `r = 6` and a detector tuned for smooth
/// backgrounds.
fn jump_state() -> (FreeState, DetectorConfig) {
    let g = Grid::periodic(0.0, 16.0, 4096, 1).unwrap();
    let u = FreeState::from_fn(g, ScatteringMetric::flat().boundary, |r, _| {
        let h = if r > 6.0 { 1.0 } else { 0.0 };
        Complex64::new(h * plateau(r - 7.0, 4.0, 6.0), 0.0)
    });
    let cfg = DetectorConfig { eps0: 1.0 / 32.0, ratio: 0.5f64.powf(0.25), widths: [1.0, 0.5, 0.2, 0.2], alpha: 8.0, ..Default::default() };
    (u, cfg)
}

#[test]
fn jump_is_present_on_its_conormal() {
    let (u, cfg) = jump_state();
    for rho in [-0.5, 0.5] {
        let v = wf_test(&u, FreePhasePoint::new(6.0, 0.0, rho, 0.0), &cfg).unwrap();
        assert_eq!(v.decision, Decision::Present, "{v:?}");
        assert!(v.exponent.unwrap() < 1.0);
    }
}

#[test]
fn jump_is_absent_away_from_its_support() {
    let (u, cfg) = jump_state();
    let v = wf_test(&u, FreePhasePoint::new(9.5, 0.0, -0.5, 0.0), &cfg).unwrap();
    assert_eq!(v.decision, Decision::Absent, "{v:?}");
}

fn escape() -> EscapeFunction {
    EscapeFunction::new(common::bump_metric(), PhasePoint::new(5.0, 0.3, -1.0, 0.5), EscapeParams::default()).unwrap()
}

#[test]
fn escape_function_is_one_on_its_reference() {
    let ef = escape();
    for t in [0.0, -1.0, -30.0] {
        let r = ef.reference(t).unwrap();
        assert_eq!(escape_phi(&ef, t, &r).unwrap(), 1.0);
        assert_eq!(escape_phi_lagrange(&ef, t, &r).unwrap(), 0.0);
    }
}

#[test]
fn lagrange_derivative_matches_finite_differences() {
    let ef = escape();
    let opts = FlowOptions { tol: 1e-12, ..FlowOptions::default() };
    let h = 1e-3;
    for t in [-0.5, -10.0] {
        let r = ef.reference(t).unwrap();
        let s = -(t + ef.t0);
        let w = ef.delta0 - ef.c * s.powf(-ef.mu);
        let w3 = ef.delta0 - ef.c * s.powf(-ef.mu - 1.0);
        // one state in each transition shell
        let shells = [
            PhasePoint { r: r.r + 1.4 * 5.0 * ef.delta0 * s, ..r },
            PhasePoint { theta: r.theta + 1.5 * w, ..r },
            PhasePoint { rho: r.rho - 1.3 * w3, ..r },
            PhasePoint { omega: r.omega + 1.6 * w, ..r },
        ];
        for state in shells {
            let phi_at = |dt: f64| {
                let x = flow_to(&ef.metric, None, state, dt, &opts).unwrap();
                escape_phi(&ef, t + dt, &x).unwrap()
            };
            let fd = (phi_at(h) - phi_at(-h)) / (2.0 * h);
            let exact = escape_phi_lagrange(&ef, t, &state).unwrap();
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "t = {t}: fd {fd} vs {exact}");
            assert!(exact <= 1e-12, "{exact}");
        }
    }
}
