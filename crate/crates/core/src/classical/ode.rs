//! Dormand–Prince 5(4) with PI step control and the free fourth-order
//! continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; estimated from the data when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5Options {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_init: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    /// Dense-output samples at the requested times that were reached.
    pub samples: Vec<(f64, [f64; N])>,
    /// Last accepted state.
    pub t_last: f64,
    pub y_last: [f64; N],
    /// Set when the stop predicate fired.
    pub stopped: bool,
    pub accepted: usize,
    pub rejected: usize,
}

/// Continuous extension of one accepted step.
struct Dense<const N: usize> {
    t_old: f64,
    h: f64,
    rc: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t_old) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.rc;
        std::array::from_fn(|i| r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i]))))
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn err_norm<const N: usize>(y0: &[f64; N], y1: &[f64; N], e: &[f64; N], o: &Dopri5Options) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
            (e[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `sample_times` must be monotone in the direction of integration and lie
/// in the span; they are served from the continuous extension. `stop` is
/// checked after every accepted step and ends the integration early.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    sample_times: &[f64],
    opts: &Dopri5Options,
    mut stop: S,
) -> Result<OdeSolution<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    S: FnMut(f64, &[f64; N]) -> bool,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    while next_sample < sample_times.len() && sample_times[next_sample] == t0 {
        samples.push((t0, y0));
        next_sample += 1;
    }
    let mut sol = OdeSolution { samples: Vec::new(), t_last: t0, y_last: y0, stopped: false, accepted: 0, rejected: 0 };
    if span == 0.0 {
        sol.samples = samples;
        return Ok(sol);
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = dir * opts.h_init.unwrap_or_else(|| initial_step(&y, &k1, opts)).min(span).min(opts.h_max);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;
    const BETA: f64 = 0.04;
    const SAFE: f64 = 0.9;

    for _ in 0..opts.max_steps {
        if (t_end - t) * dir <= 0.0 {
            break;
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        let stages = (|| -> Result<_> {
            let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let y_stiff = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = f(t + h, &y_stiff)?;
            let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + h, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        let (_k2, k3, k4, k5, k6, k7, y1) = match stages {
            Ok(s) => s,
            Err(Error::Domain(_)) | Err(Error::ChartExit { .. }) => {
                // a stage left the chart: retry shorter
                h *= 0.25;
                sol.rejected += 1;
                last_rejected = true;
                continue;
            }
            Err(e) => return Err(e),
        };
        let e: [f64; N] =
            std::array::from_fn(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let err = err_norm(&y, &y1, &e, opts);
        if !err.is_finite() {
            h *= 0.25;
            sol.rejected += 1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(0.2 - BETA * 0.75);
        let mut fac = fac11 / fac_old.powf(BETA);
        fac = (fac / SAFE).clamp(0.1, 5.0);
        let h_new = h / fac;
        if err <= 1.0 {
            fac_old = err.max(1e-4);
            sol.accepted += 1;
            let rc2: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let rc3: [f64; N] = std::array::from_fn(|i| h * k1[i] - rc2[i]);
            let rc4: [f64; N] = std::array::from_fn(|i| rc2[i] - h * k7[i] - rc3[i]);
            let rc5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            let dense = Dense { t_old: t, h, rc: [y, rc2, rc3, rc4, rc5] };
            let t_new = t + h;
            while next_sample < sample_times.len() && (sample_times[next_sample] - t_new) * dir <= 0.0 {
                let ts = sample_times[next_sample];
                let ys = if ts == t_new { y1 } else { dense.eval(ts) };
                samples.push((ts, ys));
                next_sample += 1;
            }
            t = t_new;
            y = y1;
            k1 = k7;
            sol.t_last = t;
            sol.y_last = y;
            if stop(t, &y) {
                sol.stopped = true;
                break;
            }
            let mut h_next = h_new.abs().min(opts.h_max);
            if last_rejected {
                h_next = h_next.min(h.abs());
            }
            h = dir * h_next;
            last_rejected = false;
        } else {
            h /= (fac11 / SAFE).min(5.0);
            sol.rejected += 1;
            last_rejected = true;
        }
    }
    if !sol.stopped && (t_end - t) * dir > 0.0 {
        return Err(Error::StepUnderflow { t });
    }
    sol.samples = samples;
    Ok(sol)
}

/// Hairer's starting-step heuristic, with the second derivative replaced
/// by a cheap `‖f‖`-based guess.
fn initial_step<const N: usize>(y: &[f64; N], f0: &[f64; N], o: &Dopri5Options) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = o.atol + o.rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (0.01 * (dny / dnf).sqrt()).max(1e-6)
    }
}
