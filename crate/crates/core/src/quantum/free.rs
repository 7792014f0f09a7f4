use num_complex::Complex64;
use rustfft::FftPlanner;

use super::state::FreeState;

/// `e^{−itH₀}` with `H₀ = −∂²_r`: the Fourier multiplier `e^{−itk²}` on
/// each angular line of the periodic radial grid.
pub fn free_evolve(state: &FreeState, t: f64) -> FreeState {
    if t == 0.0 {
        return state.clone();
    }
    let g = state.grid;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(g.n_r);
    let inv = planner.plan_fft_inverse(g.n_r);
    // unlike the derivative, the multiplier keeps the Nyquist wavenumber
    let k: Vec<f64> = (0..g.n_r)
        .map(|j| {
            let j = if 2 * j > g.n_r { j as f64 - g.n_r as f64 } else { j as f64 };
            std::f64::consts::TAU * j / (g.n_r as f64 * g.dr)
        })
        .collect();
    let norm = 1.0 / g.n_r as f64;
    let mult: Vec<Complex64> = k.iter().map(|kk| Complex64::from_polar(norm, -t * kk * kk)).collect();
    let mut out = state.clone();
    for line in out.data.chunks_mut(g.n_r) {
        fwd.process(line);
        line.iter_mut().zip(&mult).for_each(|(z, m)| *z *= m);
        inv.process(line);
    }
    out
}

/// Closed-form evolution of `exp(−(r−r₀)²/(2s) + ik₀(r−r₀))` on the line.
pub fn gaussian_free_solution(r: f64, t: f64, r0: f64, k0: f64, s: f64) -> Complex64 {
    let w = Complex64::new(s, 2.0 * t);
    let x = r - r0 - 2.0 * k0 * t;
    (Complex64::new(s, 0.0) / w).sqrt()
        * (-(x * x) / (2.0 * w) + Complex64::new(0.0, k0 * (r - r0) - k0 * k0 * t)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryMetric;
    use crate::quantum::Grid;

    fn packet(t: f64) -> FreeState {
        let g = Grid::periodic(-40.0, 40.0, 1024, 1).unwrap();
        FreeState::from_fn(g, BoundaryMetric::round_circle(), |r, _| gaussian_free_solution(r, t, -3.0, 1.5, 1.0))
    }

    #[test]
    fn zero_time_is_identity() {
        let u = packet(0.0);
        assert_eq!(free_evolve(&u, 0.0), u);
    }

    #[test]
    fn gaussian_closed_form() {
        let u = free_evolve(&packet(0.0), 2.0);
        let want = packet(2.0);
        let err = u.data.iter().zip(&want.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn group_law() {
        let u = packet(0.0);
        let a = free_evolve(&free_evolve(&u, 0.7), 0.4);
        let b = free_evolve(&u, 1.1);
        let err = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }
}
