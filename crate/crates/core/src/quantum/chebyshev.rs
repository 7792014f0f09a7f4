use num_complex::Complex64;

/// `J_0(x), …, J_{k_max}(x)` for `x ≥ 0` by Miller's backward recurrence.
pub fn bessel_j_sequence(x: f64, k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = {
        let m = k_max.max(x as usize) + 20 + (10.0 * x.cbrt()) as usize;
        m + (m % 2)
    };
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-30;
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
            sum *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            sum += 2.0 * vals[k - 1];
        }
    }
    sum += vals[0];
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / sum;
    }
    out
}

/// `w ← e^{−iτH} w` for self-adjoint `H` with spectrum inside `[lo, hi]`,
/// by the Chebyshev expansion truncated at relative size `1e-15`.
/// Returns the number of operator applications.
pub fn propagate(
    apply: &dyn Fn(&[Complex64], &mut [Complex64]),
    lo: f64,
    hi: f64,
    tau: f64,
    w: &mut [Complex64],
) -> usize {
    let n = w.len();
    let center = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    let x = tau.abs() * half;
    let k_max = (x + 30.0 + 10.0 * x.cbrt()) as usize;
    let jk = bessel_j_sequence(x, k_max);
    let last = jk.iter().rposition(|v| v.abs() > 1e-16).unwrap_or(0).max(1);
    // (−i sgn τ)^k
    let unit = if tau >= 0.0 { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
    let scaled = |src: &[Complex64], dst: &mut [Complex64]| {
        apply(src, dst);
        dst.iter_mut().zip(src).for_each(|(d, s)| *d = (*d - s * center) / half);
    };
    let mut prev: Vec<Complex64> = w.to_vec();
    let mut cur = vec![Complex64::new(0.0, 0.0); n];
    scaled(&prev, &mut cur);
    let mut acc: Vec<Complex64> = prev.iter().map(|z| z * jk[0]).collect();
    let mut coeff = unit * 2.0;
    acc.iter_mut().zip(&cur).for_each(|(a, c)| *a += c * (coeff * jk[1]));
    let mut next = vec![Complex64::new(0.0, 0.0); n];
    for &j in jk.iter().take(last + 1).skip(2) {
        scaled(&cur, &mut next);
        next.iter_mut().zip(&prev).for_each(|(nx, p)| *nx = *nx * 2.0 - p);
        coeff *= unit;
        let c = coeff * j;
        acc.iter_mut().zip(&next).for_each(|(a, v)| *a += v * c);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let phase = Complex64::from_polar(1.0, -tau * center);
    w.iter_mut().zip(&acc).for_each(|(o, a)| *o = a * phase);
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(x: f64, k: usize) -> f64 {
        // Σ (−1)^m (x/2)^{2m+k} / (m! (m+k)!)
        let mut term = (0..k).fold(1.0, |t, j| t * (x / 2.0) / (j + 1) as f64);
        let mut s = term;
        for m in 1..80 {
            term *= -(x / 2.0).powi(2) / (m as f64 * (m + k) as f64);
            s += term;
        }
        s
    }

    #[test]
    fn bessel_matches_series() {
        for &x in &[0.3, 1.0, 4.5, 10.0] {
            let seq = bessel_j_sequence(x, 12);
            for k in 0..=12 {
                assert!((seq[k] - series(x, k)).abs() < 1e-13, "x = {x}, k = {k}");
            }
        }
    }

    #[test]
    fn diagonal_operator_phases() {
        let lam = [0.0, 1.5, 7.0, 20.0];
        let apply = |src: &[Complex64], dst: &mut [Complex64]| {
            for i in 0..4 {
                dst[i] = src[i] * lam[i];
            }
        };
        for &tau in &[0.3, -2.0] {
            let mut w = vec![Complex64::new(1.0, 0.0); 4];
            propagate(&apply, 0.0, 25.0, tau, &mut w);
            for i in 0..4 {
                assert!((w[i] - Complex64::from_polar(1.0, -tau * lam[i])).norm() < 1e-13);
            }
        }
    }
}
