use num_complex::Complex64;

/// Solves `T x = rhs` in place for the tridiagonal `T` with main diagonal
/// `diag`, sub-diagonal `lower[i] = T[i+1][i]` and super-diagonal
/// `upper[i] = T[i][i+1]`. `scratch` must hold `diag.len()` entries.
///
/// No pivoting: callers pass diagonally dominant systems.
pub fn solve_in_place(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut [Complex64],
) {
    let n = diag.len();
    debug_assert!(rhs.len() == n && scratch.len() >= n && lower.len() + 1 >= n && upper.len() + 1 >= n);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i - 1] * scratch[i];
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i + 1] * next;
    }
}

/// `y = T x` for the same storage convention.
pub fn apply(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
    let n = diag.len();
    for i in 0..n {
        let mut s = diag[i] * x[i];
        if i > 0 {
            s += lower[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            s += upper[i] * x[i + 1];
        }
        y[i] = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_matches_apply() {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let lower = vec![c(0.3, -0.1), c(-0.2, 0.4), c(0.1, 0.0)];
        let upper = vec![c(0.5, 0.2), c(0.1, -0.3), c(-0.4, 0.1)];
        let diag = vec![c(2.0, 1.0), c(3.0, -0.5), c(2.5, 0.0), c(1.5, 2.0)];
        let x = vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.3, -0.7), c(2.0, 0.0)];
        let mut b = vec![c(0.0, 0.0); 4];
        apply(&lower, &diag, &upper, &x, &mut b);
        let mut scratch = vec![c(0.0, 0.0); 4];
        solve_in_place(&lower, &diag, &upper, &mut b, &mut scratch);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
