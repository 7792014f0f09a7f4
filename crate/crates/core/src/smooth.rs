//! Smooth cutoffs shared by the wave and microlocal code.

fn f(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// `C^∞` monotone step: `0` for `x ≤ 0`, `1` for `x ≥ 1`.
pub fn step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x) / (f(x) + f(1.0 - x))
    }
}

/// Derivative of [`step`]; nonnegative.
pub fn step_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (a, b) = (f(x), f(1.0 - x));
    let (da, db) = (a / (x * x), b / ((1.0 - x) * (1.0 - x)));
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Plateau cutoff: `1` on `|x| ≤ inner`, `0` on `|x| ≥ outer`.
pub fn plateau(x: f64, inner: f64, outer: f64) -> f64 {
    1.0 - step((x.abs() - inner) / (outer - inner))
}

/// `exp(α(1 − 1/(1−σ²)))` on `|σ| < 1`, zero outside; equals `1` at `0`.
pub fn bump(sigma: f64, alpha: f64) -> f64 {
    let s2 = sigma * sigma;
    if s2 >= 1.0 {
        0.0
    } else {
        (alpha * (1.0 - 1.0 / (1.0 - s2))).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_derivative_matches_difference() {
        for &x in &[0.1, 0.37, 0.5, 0.81, 0.95] {
            let h = 1e-6;
            let fd = (step(x + h) - step(x - h)) / (2.0 * h);
            assert!((fd - step_derivative(x)).abs() < 1e-7, "{x}");
        }
    }

    #[test]
    fn bump_and_plateau_values() {
        assert_eq!(bump(0.0, 1.0), 1.0);
        assert_eq!(bump(1.0, 1.0), 0.0);
        assert_eq!(plateau(0.3, 0.5, 1.0), 1.0);
        assert_eq!(plateau(-1.2, 0.5, 1.0), 0.0);
        assert!((step(0.5) - 0.5).abs() < 1e-15);
    }
}
