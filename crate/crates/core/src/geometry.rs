//! Scattering metrics on the end chart `(1, ∞) × S¹`.
//!
//! A metric is the conic part `dr² + r² h(θ) dθ²` plus short-range
//! perturbation terms
//!
//! ```text
//! m = m⁰ dr² + r m¹ (dr dθ + dθ dr) + r² m² dθ²
//! ```
//!
//! Every coefficient function is generic over [`DualNum`] so that the
//! classical module can take exact first and second derivatives.

use num_dual::{first_derivative, DualNum};
use serde::{Deserialize, Serialize};

use crate::classical::PhasePoint;
use crate::error::{Error, Result};

/// Boundary metric `h(θ) = h0 (1 + amp cos(freq θ))` on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMetric {
    pub h0: f64,
    #[serde(default)]
    pub amp: f64,
    #[serde(default)]
    pub freq: u32,
}

impl Default for BoundaryMetric {
    fn default() -> Self {
        Self { h0: 1.0, amp: 0.0, freq: 0 }
    }
}

impl BoundaryMetric {
    pub fn round_circle() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0) || !(self.amp.abs() < 1.0) {
            return Err(Error::MetricValidity(format!(
                "boundary metric h0 = {}, amp = {} is not positive",
                self.h0, self.amp
            )));
        }
        Ok(())
    }

    /// `h(θ)`; at boundary dimension one this is also `det h_jk`.
    pub fn h<D: DualNum<Primitive = f64>>(&self, theta: D) -> D {
        if self.amp == 0.0 || self.freq == 0 {
            return D::from(self.h0 * (1.0 + if self.freq == 0 { self.amp } else { 0.0 }));
        }
        (theta * self.freq as f64).cos() * (self.h0 * self.amp) + self.h0
    }

    pub fn is_constant(&self) -> bool {
        self.amp == 0.0 || self.freq == 0
    }
}

/// Radial shape of a perturbation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialProfile {
    /// `r^{-μ}`
    Power,
    /// `r^{-μ} sin(log r)`
    PowerLogSine,
    /// `exp(-(r - center)² / (2 width²))`, decays faster than any power.
    Gaussian { center: f64, width: f64 },
}

impl RadialProfile {
    fn eval<D: DualNum<Primitive = f64>>(&self, r: D, mu: f64) -> D {
        match *self {
            RadialProfile::Power => r.powf(-mu),
            RadialProfile::PowerLogSine => r.powf(-mu) * r.ln().sin(),
            RadialProfile::Gaussian { center, width } => {
                let x = (r - center) * (1.0 / width);
                (-(x.clone() * x) * 0.5).exp()
            }
        }
    }
}

/// Angular factor `offset + amp cos(freq θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    pub offset: f64,
    #[serde(default)]
    pub amp: f64,
    #[serde(default)]
    pub freq: u32,
}

impl AngularProfile {
    pub const CONSTANT: AngularProfile = AngularProfile { offset: 1.0, amp: 0.0, freq: 0 };

    pub fn cosine(freq: u32) -> Self {
        Self { offset: 0.0, amp: 1.0, freq }
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, theta: D) -> D {
        if self.amp == 0.0 {
            return D::from(self.offset);
        }
        (theta * self.freq as f64).cos() * self.amp + self.offset
    }

    pub fn is_constant(&self) -> bool {
        self.amp == 0.0 || self.freq == 0
    }
}

impl Default for AngularProfile {
    fn default() -> Self {
        Self::CONSTANT
    }
}

/// One coefficient `m^l(r, θ) = amplitude · radial(r) · angular(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTerm {
    /// `l ∈ {0, 1, 2}`
    pub order: u8,
    pub amplitude: f64,
    /// `μ_l`
    pub decay_mu: f64,
    pub radial: RadialProfile,
    #[serde(default)]
    pub angular: AngularProfile,
}

impl PerturbationTerm {
    pub fn power(order: u8, amplitude: f64, decay_mu: f64, angular: AngularProfile) -> Self {
        Self { order, amplitude, decay_mu, radial: RadialProfile::Power, angular }
    }

    pub fn value<D: DualNum<Primitive = f64>>(&self, r: D, theta: D) -> D {
        self.radial.eval(r, self.decay_mu) * self.angular.eval(theta) * self.amplitude
    }

    fn check_short_range(&self) -> Result<()> {
        let (bound, name) = match self.order {
            0 => (1.0, "mu_0 > 1"),
            1 => (0.5, "mu_1 > 1/2"),
            2 => (0.0, "mu_2 > 0"),
            l => return Err(Error::MetricValidity(format!("perturbation order {l} not in {{0,1,2}}"))),
        };
        if !(self.decay_mu > bound) {
            return Err(Error::MetricValidity(format!(
                "order-{} term with decay {} violates the short-range condition {}",
                self.order, self.decay_mu, name
            )));
        }
        Ok(())
    }

    /// Effective rate in the normalization `μ = μ₀ - 1 = 2μ₁ - 1 = μ₂`.
    fn effective_mu(&self) -> f64 {
        match self.order {
            0 => self.decay_mu - 1.0,
            1 => 2.0 * self.decay_mu - 1.0,
            _ => self.decay_mu,
        }
    }
}

/// Potential `V(r, θ) = coupling · r^{2-μ₃} · angular(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub coupling: f64,
    pub decay_mu3: f64,
    #[serde(default)]
    pub angular: AngularProfile,
}

impl Potential {
    pub fn new(coupling: f64, decay_mu3: f64, angular: AngularProfile) -> Result<Self> {
        if !(decay_mu3 > 1.0) {
            return Err(Error::MetricValidity(format!("potential decay mu_3 = {decay_mu3} must exceed 1")));
        }
        Ok(Self { coupling, decay_mu3, angular })
    }

    pub fn value<D: DualNum<Primitive = f64>>(&self, r: D, theta: D) -> D {
        r.powf(2.0 - self.decay_mu3) * self.angular.eval(theta) * self.coupling
    }

    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        self.value(r, theta)
    }

    /// `(∂_r V, ∂_θ V)`
    pub fn gradient(&self, r: f64, theta: f64) -> (f64, f64) {
        let (_, dr) = first_derivative(|x| self.value(x, num_dual::Dual64::from(theta)), r);
        let (_, dt) = first_derivative(|y| self.value(num_dual::Dual64::from(r), y), theta);
        (dr, dt)
    }

    pub fn as_term(&self) -> PerturbationTerm {
        // decay bound |V| <= C r^{2-μ₃}, i.e. a "term" with μ = μ₃ - 2
        PerturbationTerm {
            order: 0,
            amplitude: self.coupling,
            decay_mu: self.decay_mu3 - 2.0,
            radial: RadialProfile::Power,
            angular: self.angular,
        }
    }
}

/// Inverse-metric corrections in
/// `p = ρ² + h⁻¹ω²/r² + a₀ρ² + a₁ρω/r + a₂ω²/r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// `h^{-1}(θ)`
    pub h_inv: f64,
}

/// `(a₀, a₁, a₂, h⁻¹)` together with their `r` and `θ` derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CoeffJet {
    pub val: [f64; 4],
    pub dr: [f64; 4],
    pub dtheta: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMetric {
    pub boundary: BoundaryMetric,
    /// Radius beyond which the metric is exactly conic when all
    /// perturbations vanish.
    pub r_conic: f64,
    pub perturbations: Vec<PerturbationTerm>,
    /// Effective decay exponent; `1.0` for an exactly conic metric.
    pub mu: f64,
}

/// Smallest admissible radius in the end chart.
pub const CHART_EDGE: f64 = 1.0;

impl ScatteringMetric {
    pub fn new(boundary: BoundaryMetric, perturbations: Vec<PerturbationTerm>) -> Result<Self> {
        boundary.validate()?;
        for t in &perturbations {
            t.check_short_range()?;
        }
        let mu = perturbations.iter().map(|t| t.effective_mu()).fold(1.0_f64, f64::min);
        let metric = Self { boundary, r_conic: 1.0, perturbations, mu };
        metric.check_positive_on_samples()?;
        Ok(metric)
    }

    pub fn flat() -> Self {
        Self::new(BoundaryMetric::round_circle(), Vec::new()).expect("flat metric is valid")
    }

    fn check_positive_on_samples(&self) -> Result<()> {
        for i in 0..60 {
            let r = 1.0 + 1e-3 + (1e3_f64).powf(i as f64 / 59.0) - 1.0;
            for j in 0..64 {
                let theta = j as f64 * std::f64::consts::TAU / 64.0;
                self.metric_matrix(r, theta)?;
            }
        }
        Ok(())
    }

    pub fn has_order(&self, order: u8) -> bool {
        self.perturbations.iter().any(|t| t.order == order && t.amplitude != 0.0)
    }

    /// True when nothing depends on `θ`.
    pub fn is_rotationally_symmetric(&self) -> bool {
        self.boundary.is_constant()
            && self.perturbations.iter().all(|t| t.angular.is_constant() || t.amplitude == 0.0)
    }

    /// `(m⁰, m¹, m², h)` at `(r, θ)`.
    pub fn components<D: DualNum<Primitive = f64>>(&self, r: D, theta: D) -> [D; 4] {
        let mut m = [D::from(0.0), D::from(0.0), D::from(0.0)];
        for t in &self.perturbations {
            let v = t.value(r.clone(), theta.clone());
            m[t.order as usize] += v;
        }
        let [m0, m1, m2] = m;
        [m0, m1, m2, self.boundary.h(theta)]
    }

    /// `Δ = (1+m⁰)(h+m²) - (m¹)²`, so that `det g = r² Δ`.
    fn reduced_det<D: DualNum<Primitive = f64>>(c: &[D; 4]) -> D {
        let [m0, m1, m2, h] = c.clone();
        (m0 + 1.0) * (h + m2) - m1.clone() * m1
    }

    /// `√det g` in the chart `(r, θ)`.
    pub fn sqrt_det<D: DualNum<Primitive = f64>>(&self, r: D, theta: D) -> D {
        let c = self.components(r.clone(), theta);
        r * Self::reduced_det(&c).sqrt()
    }

    /// `(g^{rr}, g^{rθ}, g^{θθ})`.
    pub fn inverse_metric<D: DualNum<Primitive = f64>>(&self, r: D, theta: D) -> [D; 3] {
        let c = self.components(r.clone(), theta);
        let det = Self::reduced_det(&c);
        let [m0, m1, m2, h] = c;
        let inv = det.recip();
        [
            (h + m2) * inv.clone(),
            -(m1 * inv.clone()) / r.clone(),
            (m0 + 1.0) * inv / (r.clone() * r),
        ]
    }

    /// The full metric matrix `(g_jk)` in the basis `(dr, dθ)`.
    pub fn metric_matrix(&self, r: f64, theta: f64) -> Result<[[f64; 2]; 2]> {
        check_radius(r)?;
        let [m0, m1, m2, h] = self.components(r, theta);
        let g = [[1.0 + m0, r * m1], [r * m1, r * r * (h + m2)]];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if !(g[0][0] > 0.0 && det > 0.0) {
            return Err(Error::MetricValidity(format!(
                "metric not positive-definite at r = {r}, theta = {theta}"
            )));
        }
        Ok(g)
    }

    pub(crate) fn coeffs_generic<D: DualNum<Primitive = f64>>(&self, r: D, theta: D) -> [D; 4] {
        let c = self.components(r, theta);
        let det = Self::reduced_det(&c);
        let [m0, m1, m2, h] = c;
        let inv = det.recip();
        let h_inv = h.clone().recip();
        let a0 = (h + m2) * inv.clone() - 1.0;
        let a1 = -(m1 * inv.clone()) * 2.0;
        let a2 = (m0 + 1.0) * inv - h_inv.clone();
        [a0, a1, a2, h_inv]
    }

    /// The coefficients `a₀, a₁, a₂` of the kinetic symbol.
    pub fn inverse_symbol_coeffs(&self, r: f64, theta: f64) -> Result<SymbolCoeffs> {
        self.metric_matrix(r, theta)?;
        let [a0, a1, a2, h_inv] = self.coeffs_generic(r, theta);
        Ok(SymbolCoeffs { a0, a1, a2, h_inv })
    }

    pub(crate) fn coeff_jet(&self, r: f64, theta: f64) -> CoeffJet {
        use num_dual::Dual64;
        let by_r = self.coeffs_generic(Dual64::from(r).derivative(), Dual64::from(theta));
        let by_t = self.coeffs_generic(Dual64::from(r), Dual64::from(theta).derivative());
        CoeffJet {
            val: by_r.clone().map(|d| d.re),
            dr: by_r.map(|d| d.eps),
            dtheta: by_t.map(|d| d.eps),
        }
    }

    /// Kinetic symbol `p = g^{jk} ξ_j ξ_k` written in the polar form.
    pub fn symbol<D: DualNum<Primitive = f64>>(&self, r: D, theta: D, rho: D, omega: D) -> D {
        let [a0, a1, a2, h_inv] = self.coeffs_generic(r.clone(), theta);
        let rho2 = rho.clone() * rho.clone();
        let w_over_r = omega / r;
        rho2.clone() + h_inv.clone() * w_over_r.clone() * w_over_r.clone()
            + a0 * rho2
            + a1 * rho * w_over_r.clone()
            + a2 * w_over_r.clone() * w_over_r
    }

    pub fn symbol_p(&self, state: &PhasePoint) -> Result<f64> {
        check_radius(state.r)?;
        Ok(self.symbol(state.r, state.theta, state.rho, state.omega))
    }
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if !(r > CHART_EDGE) {
        return Err(Error::Domain(format!("r = {r} is outside the end chart (r > 1)")));
    }
    Ok(())
}

/// Sampling plan for [`validate_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for DecayGrid {
    fn default() -> Self {
        Self { r_min: 10.0, r_max: 1e3, n_r: 25, n_theta: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOrderReport {
    pub k: usize,
    /// Fitted log-log slope of `sup_θ |∂_r^k m|` against `r`.
    pub slope: f64,
    /// `-μ_l - k`
    pub expected: f64,
    /// Fitted constant `C` in `C r^{slope}`.
    pub constant: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub order: u8,
    pub decay_mu: f64,
    pub orders: Vec<DecayOrderReport>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.orders.iter().all(|o| !o.flagged)
    }
}

/// k-th central difference with step `step`.
pub(crate) fn central_difference(f: impl Fn(f64) -> f64, x: f64, k: usize, step: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=k {
        let offset = (k as f64 / 2.0 - j as f64) * step;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(x + offset);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    acc / step.powi(k as i32)
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Measures the radial decay of a perturbation term and its radial
/// derivatives with central differences (`Δr = r/100`).
pub fn validate_decay(term: &PerturbationTerm, k_max: usize, grid: &DecayGrid) -> Result<DecayReport> {
    if grid.n_r < 4 || grid.n_theta == 0 || !(grid.r_max > grid.r_min) || grid.r_min <= CHART_EDGE {
        return Err(Error::Resolution(format!(
            "decay grid needs n_r >= 4 radii in r > 1, got {} on [{}, {}]",
            grid.n_r, grid.r_min, grid.r_max
        )));
    }
    if k_max > 4 || grid.n_r < k_max + 4 {
        return Err(Error::Resolution(format!(
            "k_max = {k_max} needs k_max <= 4 and at least k_max + 4 radii (have {})",
            grid.n_r
        )));
    }
    let radii: Vec<f64> = (0..grid.n_r)
        .map(|i| grid.r_min * (grid.r_max / grid.r_min).powf(i as f64 / (grid.n_r - 1) as f64))
        .collect();
    let thetas: Vec<f64> = (0..grid.n_theta)
        .map(|j| j as f64 * std::f64::consts::TAU / grid.n_theta as f64)
        .collect();
    let mut orders = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &r in &radii {
            let sup = thetas
                .iter()
                .map(|&th| central_difference(|x| term.value(x, th), r, k, r / 100.0).abs())
                .fold(0.0_f64, f64::max);
            if sup > 0.0 && sup.is_finite() {
                xs.push(r.ln());
                ys.push(sup.ln());
            }
        }
        let expected = -term.decay_mu - k as f64;
        let (slope, constant) = if xs.len() >= 2 {
            let (a, b) = fit_line(&xs, &ys);
            (b, a.exp())
        } else {
            // identically zero term
            (f64::NEG_INFINITY, 0.0)
        };
        orders.push(DecayOrderReport { k, slope, expected, constant, flagged: slope > expected + 0.1 });
    }
    Ok(DecayReport { order: term.order, decay_mu: term.decay_mu, orders })
}

/// Named metrics selectable from scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum MetricSpec {
    /// `dr² + r² dθ²`
    Flat,
    /// `m² = ε r^{-μ} φ(θ)`
    Bump {
        eps: f64,
        mu: f64,
        #[serde(default = "default_bump_angular")]
        angular: AngularProfile,
    },
    /// `m⁰ = ε r^{-1-μ} φ(θ)`
    Radial {
        eps: f64,
        mu: f64,
        #[serde(default)]
        angular: AngularProfile,
    },
    /// All three orders at the normalized rates:
    /// `m⁰ = ε r^{-1-μ} φ`, `m¹ = ε r^{-(1+μ)/2} φ`, `m² = ε r^{-μ} φ`.
    BumpFull {
        eps: f64,
        mu: f64,
        #[serde(default = "default_bump_angular")]
        angular: AngularProfile,
    },
    /// `m² = ε exp(-(r-c)²/(2w²))`, rotationally symmetric; used to
    /// engineer trapped orbits.
    Collar { eps: f64, center: f64, width: f64 },
    /// Arbitrary boundary metric and term list.
    Custom {
        #[serde(default)]
        boundary: BoundaryMetric,
        terms: Vec<PerturbationTerm>,
    },
}

fn default_bump_angular() -> AngularProfile {
    AngularProfile::cosine(1)
}

impl MetricSpec {
    pub fn build(&self) -> Result<ScatteringMetric> {
        let round = BoundaryMetric::round_circle();
        match *self {
            MetricSpec::Flat => Ok(ScatteringMetric::flat()),
            MetricSpec::Bump { eps, mu, angular } => {
                check_mu(mu)?;
                ScatteringMetric::new(round, vec![PerturbationTerm::power(2, eps, mu, angular)])
            }
            MetricSpec::Radial { eps, mu, angular } => {
                check_mu(mu)?;
                ScatteringMetric::new(round, vec![PerturbationTerm::power(0, eps, 1.0 + mu, angular)])
            }
            MetricSpec::BumpFull { eps, mu, angular } => {
                check_mu(mu)?;
                ScatteringMetric::new(
                    round,
                    vec![
                        PerturbationTerm::power(0, eps, 1.0 + mu, angular),
                        PerturbationTerm::power(1, eps, 0.5 * (1.0 + mu), angular),
                        PerturbationTerm::power(2, eps, mu, angular),
                    ],
                )
            }
            MetricSpec::Collar { eps, center, width } => ScatteringMetric::new(
                round,
                vec![PerturbationTerm {
                    order: 2,
                    amplitude: eps,
                    decay_mu: 1.0,
                    radial: RadialProfile::Gaussian { center, width },
                    angular: AngularProfile::CONSTANT,
                }],
            ),
            MetricSpec::Custom { boundary, ref terms } => ScatteringMetric::new(boundary, terms.clone()),
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::MetricValidity(format!("decay exponent mu = {mu} must lie in (0, 1)")));
    }
    Ok(())
}

/// Names and one-line descriptions of the builtin metrics.
pub fn list_metrics() -> Vec<(&'static str, &'static str)> {
    vec![
        ("flat", "flat plane in polar form, dr^2 + r^2 dtheta^2"),
        ("bump", "m2 = eps r^-mu phi(theta), phi = offset + amp cos(freq theta)"),
        ("radial", "m0 = eps r^(-1-mu) phi(theta)"),
        ("bump-full", "m0, m1, m2 at decays 1+mu, (1+mu)/2, mu with common eps and phi"),
        ("collar", "m2 = eps exp(-(r-center)^2 / (2 width^2)), rotationally symmetric"),
        ("custom", "explicit boundary metric and perturbation term list"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metric_matrix_is_conic() {
        let g = ScatteringMetric::flat().metric_matrix(2.0, 0.0).unwrap();
        assert_eq!(g, [[1.0, 0.0], [0.0, 4.0]]);
    }

    #[test]
    fn radial_perturbation_enters_rr_entry() {
        let m = ScatteringMetric::new(
            BoundaryMetric::round_circle(),
            vec![PerturbationTerm::power(0, 1.0, 1.5, AngularProfile::CONSTANT)],
        )
        .unwrap();
        let g = m.metric_matrix(4.0, 0.3).unwrap();
        assert!((g[0][0] - (1.0 + 4f64.powf(-1.5))).abs() < 1e-15);
        assert_eq!(g[1][1], 16.0);
        assert_eq!(g[0][1], 0.0);
    }

    #[test]
    fn chart_edge_is_a_domain_error() {
        let m = ScatteringMetric::flat();
        assert!(matches!(m.metric_matrix(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(m.metric_matrix(0.5, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn non_positive_metric_is_rejected() {
        let r = ScatteringMetric::new(
            BoundaryMetric::round_circle(),
            vec![PerturbationTerm::power(2, -3.0, 0.5, AngularProfile::CONSTANT)],
        );
        assert!(matches!(r, Err(Error::MetricValidity(_))));
    }

    #[test]
    fn long_range_terms_are_rejected() {
        let r = ScatteringMetric::new(
            BoundaryMetric::round_circle(),
            vec![PerturbationTerm::power(0, 0.1, 0.9, AngularProfile::CONSTANT)],
        );
        assert!(matches!(r, Err(Error::MetricValidity(_))));
        let r = ScatteringMetric::new(
            BoundaryMetric::round_circle(),
            vec![PerturbationTerm::power(1, 0.1, 0.5, AngularProfile::CONSTANT)],
        );
        assert!(matches!(r, Err(Error::MetricValidity(_))));
    }

    #[test]
    fn flat_coefficients_vanish_exactly() {
        let m = ScatteringMetric::flat();
        for &(r, th) in &[(1.5, 0.0), (7.0, 2.0), (300.0, 5.5)] {
            let c = m.inverse_symbol_coeffs(r, th).unwrap();
            assert_eq!((c.a0, c.a1, c.a2, c.h_inv), (0.0, 0.0, 0.0, 1.0));
        }
    }

    #[test]
    fn flat_symbol_values() {
        let m = ScatteringMetric::flat();
        let p = m.symbol_p(&PhasePoint::new(1.0 + 1e-12, 0.0, 0.0, 1.0)).unwrap();
        assert!((p - 1.0).abs() < 1e-11);
        let p = m.symbol_p(&PhasePoint::new(2.0, 1.3, -1.0, 2.0)).unwrap();
        assert_eq!(p, 2.0);
    }

    #[test]
    fn central_difference_recovers_power_derivatives() {
        let f = |r: f64| r.powf(-1.5);
        let d1 = central_difference(f, 20.0, 1, 0.2);
        assert!((d1 / (-1.5 * 20f64.powf(-2.5)) - 1.0).abs() < 1e-3);
        let d2 = central_difference(f, 20.0, 2, 0.2);
        assert!((d2 / (3.75 * 20f64.powf(-3.5)) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn decay_grid_too_coarse() {
        let t = PerturbationTerm::power(0, 1.0, 1.5, AngularProfile::CONSTANT);
        let g = DecayGrid { n_r: 3, ..DecayGrid::default() };
        assert!(matches!(validate_decay(&t, 1, &g), Err(Error::Resolution(_))));
        assert!(matches!(validate_decay(&t, 5, &DecayGrid::default()), Err(Error::Resolution(_))));
    }

    #[test]
    fn rotational_symmetry_detection() {
        let b = MetricSpec::Bump { eps: 0.1, mu: 0.5, angular: AngularProfile::CONSTANT }.build().unwrap();
        assert!(b.is_rotationally_symmetric());
        let b = MetricSpec::Bump { eps: 0.1, mu: 0.5, angular: AngularProfile::cosine(1) }.build().unwrap();
        assert!(!b.is_rotationally_symmetric());
    }
}
