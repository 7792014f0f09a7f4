//! Weyl quantization of tensorised bump symbols by direct quadrature of
//! the Weyl kernel. For `a = A(x)B(ξ)` the kernel is
//! `K(x, y) = A((x+y)/2) k(x − y)`, with
//! `k(s) = (w/2πε) e^{isc/ε} χ̂(sw/ε)` and `χ̂(z) = ∫ cos(zσ) χ(σ) dσ`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::symbol::{Scaling, SymbolCutoff, Window, WindowSamples};
use crate::error::{Error, Result};
use crate::quantum::Grid;
use crate::smooth::bump;

/// Beyond this argument `|χ̂|` for `α = 1` is below `1e-16` of its peak, under
/// the quadrature's roundoff, and is set to zero.
const Z_MAX: f64 = 1200.0;

/// Fourier cosine transform of the bump on `[−1, 1]`, by the trapezoid
/// rule; the integrand is flat to all orders at the ends.
pub fn bump_transform(z: f64, alpha: f64) -> f64 {
    if z.abs() > Z_MAX * alpha.max(1.0) {
        return 0.0;
    }
    let n = (4.0 * z.abs()).ceil().max(512.0) as usize;
    let h = 2.0 / n as f64;
    let mut s = 0.5 * bump(0.0, alpha);
    for j in 1..n / 2 {
        let x = j as f64 * h;
        s += (z * x).cos() * bump(x, alpha);
    }
    2.0 * h * s
}

/// One-dimensional momentum kernel `k(s)` for centre `c`, width `w`.
fn kernel(s: f64, c: f64, w: f64, eps: f64, alpha: f64) -> Complex64 {
    let amp = w / (TAU * eps) * bump_transform(s * w / eps, alpha);
    Complex64::from_polar(amp, s * c / eps)
}

/// A dense block acting on contiguous index sets `rows × cols`.
struct Block {
    rows: Vec<usize>,
    cols: Vec<usize>,
    m: Vec<Complex64>,
}

impl Block {
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (a, row) in self.m.chunks(self.cols.len()).enumerate() {
            out[a] = row.iter().zip(x).map(|(k, v)| k * v).sum();
        }
    }
}

/// Radial block on node indices `idx` (output and input alike).
fn radial_block(a: &SymbolCutoff, eps: f64, scaling: Scaling, grid: &Grid, idx: &[usize]) -> Block {
    let n = idx.len();
    let pos = |r: f64| match scaling {
        Scaling::Standard => a.factor(0, r),
        Scaling::RadiallyHomogeneous => a.factor(0, eps * r),
    };
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    let wr = a.widths[2];
    if wr.is_infinite() {
        for (p, &i) in idx.iter().enumerate() {
            m[p * n + p] = Complex64::new(pos(grid.r(i)), 0.0);
        }
    } else {
        let c = a.center.rho;
        // the kernel only depends on the index difference
        let span = idx.last().map_or(0, |l| l - idx[0]);
        let k: Vec<Complex64> =
            (0..=span).map(|d| kernel(d as f64 * grid.dr, c, wr, eps, a.alpha) * grid.dr).collect();
        for (p, &i) in idx.iter().enumerate() {
            for (q, &j) in idx.iter().enumerate() {
                let amp = pos(0.5 * (grid.r(i) + grid.r(j)));
                if amp == 0.0 {
                    continue;
                }
                let kk = if i >= j { k[i - j] } else { k[j - i].conj() };
                m[p * n + q] = kk * amp;
            }
        }
    }
    Block { rows: idx.to_vec(), cols: idx.to_vec(), m }
}

/// Angular block on node indices `ks`; the line kernel is summed over the
/// periodic images, whose midpoints alternate between `mid` and `mid + π`.
fn angular_block(a: &SymbolCutoff, eps: f64, grid: &Grid, ks: &[usize]) -> Block {
    let n = ks.len();
    let nt = grid.n_theta;
    let dth = grid.dtheta();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    let ww = a.widths[3];
    if ww.is_infinite() {
        for (p, &k) in ks.iter().enumerate() {
            m[p * n + p] = Complex64::new(a.factor(1, grid.theta(k)), 0.0);
        }
    } else if a.widths[1].is_infinite() {
        // translation invariant: exact multiplier χ((εm − ω₀)/w) on the full circle
        let modes: Vec<f64> = (0..nt).map(|j| if j <= nt / 2 { j as f64 } else { j as f64 - nt as f64 }).collect();
        let mult: Vec<f64> = modes.iter().map(|&mm| a.factor(3, eps * mm)).collect();
        for (p, &k) in ks.iter().enumerate() {
            for (q, &l) in ks.iter().enumerate() {
                let d = (k as f64 - l as f64) * dth;
                let s: Complex64 = modes
                    .iter()
                    .zip(&mult)
                    .map(|(&mm, &b)| Complex64::from_polar(b, mm * d))
                    .sum();
                m[p * n + q] = s / nt as f64;
            }
        }
    } else {
        let c = a.center.omega;
        let s_cut = Z_MAX * a.alpha.max(1.0) * eps / ww;
        let images = (s_cut / TAU).ceil() as i64 + 1;
        // the image kernel depends on (k − l) + img·n_θ only
        let reach = nt as i64 * (images + 1);
        let mut cache: Vec<Option<Complex64>> = vec![None; (2 * reach + 1) as usize];
        for (p, &k) in ks.iter().enumerate() {
            for (q, &l) in ks.iter().enumerate() {
                let mid = 0.5 * (grid.theta(k) + grid.theta(l));
                let mut acc = Complex64::new(0.0, 0.0);
                for img in -images..=images {
                    let amp = a.factor(1, mid + PI * img as f64);
                    if amp == 0.0 {
                        continue;
                    }
                    let d = k as i64 - l as i64 + img * nt as i64;
                    let slot = &mut cache[(d + reach) as usize];
                    let kk = *slot.get_or_insert_with(|| kernel(d as f64 * dth, c, ww, eps, a.alpha));
                    acc += kk * amp;
                }
                m[p * n + q] = acc * dth;
            }
        }
    }
    Block { rows: ks.to_vec(), cols: ks.to_vec(), m }
}

/// Applies `Op(a) = Op_r ⊗ Op_θ` to `w` restricted to the given index sets;
/// returns the result on `rows × ks` (θ-major, `ks.len()` rows).
fn apply_tensor(rb: &Block, ab: Option<&Block>, grid: &Grid, w: &[Complex64]) -> Vec<Complex64> {
    let nr = rb.rows.len();
    let ks = ab.map_or_else(|| (0..grid.n_theta).collect::<Vec<_>>(), |b| b.cols.clone());
    let mut tmp = vec![Complex64::new(0.0, 0.0); ks.len() * nr];
    let mut line = vec![Complex64::new(0.0, 0.0); rb.cols.len()];
    for (p, &k) in ks.iter().enumerate() {
        for (q, &i) in rb.cols.iter().enumerate() {
            line[q] = w[grid.index(k, i)];
        }
        if line.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        rb.apply(&line, &mut tmp[p * nr..(p + 1) * nr]);
    }
    let Some(ab) = ab else { return tmp };
    let nk = ks.len();
    let mut out = vec![Complex64::new(0.0, 0.0); nk * nr];
    let mut col = vec![Complex64::new(0.0, 0.0); nk];
    let mut res = vec![Complex64::new(0.0, 0.0); nk];
    for i in 0..nr {
        for p in 0..nk {
            col[p] = tmp[p * nr + i];
        }
        ab.apply(&col, &mut res);
        for p in 0..nk {
            out[p * nr + i] = res[p];
        }
    }
    out
}

fn check_scale(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("semiclassical scale must be positive, got {eps}")));
    }
    Ok(())
}

/// Checks that the grid resolves the momentum window: at least 8 points per
/// oscillation at the largest probed frequency.
fn check_resolution(a: &SymbolCutoff, eps: f64, grid: &Grid) -> Result<()> {
    if a.widths[2].is_finite() {
        let k = (a.center.rho.abs() + a.widths[2]) / eps;
        if k * grid.dr > TAU / 8.0 {
            return Err(Error::Resolution(format!(
                "radial frequency {k:.3e} needs dr <= {:.3e}, have {:.3e}",
                TAU / (8.0 * k),
                grid.dr
            )));
        }
    }
    if grid.n_theta > 1 && a.widths[3].is_finite() {
        let m = (a.center.omega.abs() + a.widths[3]) / eps;
        if 2.0 * m >= grid.n_theta as f64 {
            return Err(Error::Resolution(format!(
                "angular frequency {m:.1} needs n_theta > {:.0}",
                2.0 * m
            )));
        }
    }
    Ok(())
}

/// `Op(a) w` on the whole grid, for a half-density `w` given θ-major.
/// Radial-only grids (`n_theta = 1`) ignore the angular factors.
pub fn weyl_apply(a: &SymbolCutoff, eps: f64, scaling: Scaling, grid: &Grid, w: &[Complex64]) -> Result<Vec<Complex64>> {
    check_scale(eps)?;
    check_resolution(a, eps, grid)?;
    let idx: Vec<usize> = (0..grid.n_r).collect();
    let rb = radial_block(a, eps, scaling, grid, &idx);
    let ab = (grid.n_theta > 1).then(|| angular_block(a, eps, grid, &(0..grid.n_theta).collect::<Vec<_>>()));
    Ok(apply_tensor(&rb, ab.as_ref(), grid, w))
}

/// `‖ψ Op(a) ψ w‖` in the plain `L²(dr dθ)` norm.
pub(crate) fn sandwich_norm(
    a: &SymbolCutoff,
    eps: f64,
    scaling: Scaling,
    window: &Window,
    grid: &Grid,
    w: &[Complex64],
) -> Result<f64> {
    check_scale(eps)?;
    check_resolution(a, eps, grid)?;
    let WindowSamples { i0, psi_r, ks, psi_t } = window.sample(a, eps, scaling, grid)?;
    let idx: Vec<usize> = (i0..i0 + psi_r.len()).collect();
    // ψ w restricted to the window
    let mut pw = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut any = false;
    for (p, &k) in ks.iter().enumerate() {
        for (q, &i) in idx.iter().enumerate() {
            let n = grid.index(k, i);
            pw[n] = w[n] * (psi_t[p] * psi_r[q]);
            any |= pw[n].norm_sqr() > 0.0;
        }
    }
    if !any {
        return Ok(0.0);
    }
    let rb = radial_block(a, eps, scaling, grid, &idx);
    let ab = (grid.n_theta > 1).then(|| angular_block(a, eps, grid, &ks));
    let out = apply_tensor(&rb, ab.as_ref(), grid, &pw);
    let nr = idx.len();
    let mut s = 0.0;
    for (p, _) in ks.iter().enumerate() {
        for q in 0..nr {
            s += (out[p * nr + q] * (psi_t[p] * psi_r[q])).norm_sqr();
        }
    }
    Ok((s * grid.cell()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_at_zero_is_the_bump_integral() {
        // ∫ exp(1 − 1/(1−σ²)) dσ over [−1, 1]
        let n = 200_000;
        let h = 2.0 / n as f64;
        let direct: f64 = (1..n).map(|j| bump(-1.0 + j as f64 * h, 1.0)).sum::<f64>() * h;
        assert!((bump_transform(0.0, 1.0) - direct).abs() < 1e-12);
    }

    #[test]
    fn transform_matches_fine_quadrature() {
        for &z in &[3.0, 40.0, 300.0] {
            let n = 400_000;
            let h = 2.0 / n as f64;
            let fine: f64 = (1..n)
                .map(|j| {
                    let x = -1.0 + j as f64 * h;
                    (z * x).cos() * bump(x, 1.0)
                })
                .sum::<f64>()
                * h;
            assert!((bump_transform(z, 1.0) - fine).abs() < 1e-13, "{z}");
        }
    }
}
