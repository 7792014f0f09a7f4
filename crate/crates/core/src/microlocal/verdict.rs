use serde::{Deserialize, Serialize};

use super::symbol::{Scaling, Window};
use crate::classical::FreePhasePoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Absent,
    Present,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub eps: f64,
    pub norm: f64,
}

/// Ladder, symbol and decision parameters shared by the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Coarsest scale `ε₀`; the ladder is `ε₀ qᵏ`, `k = 0..levels`.
    pub eps0: f64,
    pub levels: usize,
    /// Ladder ratio `q`, dyadic by default.
    pub ratio: f64,
    /// Symbol half-widths in `(r, θ, ρ, ω)`.
    pub widths: [f64; 4],
    pub alpha: f64,
    pub window: Window,
    /// Decay exponent at or above which the point is declared absent.
    pub threshold: f64,
    /// Lower end of the marginal band `[marginal_low, threshold)`.
    pub marginal_low: f64,
    /// Norms below `floor · ‖u‖` are treated as zero.
    pub floor: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            eps0: 1.0 / 16.0,
            levels: 5,
            ratio: 0.5,
            widths: [0.5, 0.5, 0.25, 0.25],
            alpha: 1.0,
            window: Window::default(),
            threshold: 4.0,
            marginal_low: 3.0,
            floor: 1e-12,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) {
            return Err(Error::Config(format!("eps0 must lie in (0, 1], got {}", self.eps0)));
        }
        if self.levels < 5 {
            return Err(Error::Config(format!("ladder needs at least 5 levels, got {}", self.levels)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!("ladder ratio must lie in (0, 1), got {}", self.ratio)));
        }
        if !(self.marginal_low < self.threshold) {
            return Err(Error::Config("marginal band must lie below the threshold".into()));
        }
        if !(self.floor >= 0.0) || !(self.alpha > 0.0) {
            return Err(Error::Config("floor must be nonnegative and alpha positive".into()));
        }
        Ok(())
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.eps0 * self.ratio.powi(k as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WFVerdict {
    pub point: FreePhasePoint,
    pub ladder: Vec<LadderPoint>,
    /// Least-squares slope of `ln ‖·‖` against `ln ε`; `None` when fewer
    /// than two norms clear the floor.
    pub exponent: Option<f64>,
    pub decision: Decision,
    pub threshold: f64,
    pub marginal_band: [f64; 2],
    pub scaling: Scaling,
    pub widths: [f64; 4],
    pub window: Window,
    pub diagnostic: Option<String>,
}

/// Fits the decay exponent and decides membership.
pub fn decide(point: FreePhasePoint, ladder: Vec<LadderPoint>, reference: f64, scaling: Scaling, cfg: &DetectorConfig) -> WFVerdict {
    let floor = cfg.floor * reference;
    let kept: Vec<&LadderPoint> = ladder.iter().filter(|p| p.norm > floor && p.norm > 0.0).collect();
    let mut diagnostic = None;
    let (exponent, decision) = if kept.len() < 2 {
        diagnostic = Some(format!("{} of {} norms above the floor {floor:.3e}", kept.len(), ladder.len()));
        (None, Decision::Absent)
    } else {
        let xs: Vec<f64> = kept.iter().map(|p| p.eps.ln()).collect();
        let ys: Vec<f64> = kept.iter().map(|p| p.norm.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        // the ladder runs from coarse to fine, so decay means shrinking norms
        let monotone = kept.windows(2).all(|w| w[1].norm <= w[0].norm);
        let d = if slope >= cfg.marginal_low && !monotone {
            diagnostic = Some("non-monotone ladder".into());
            Decision::Marginal
        } else if slope >= cfg.threshold {
            Decision::Absent
        } else if slope >= cfg.marginal_low {
            Decision::Marginal
        } else {
            Decision::Present
        };
        (Some(slope), d)
    };
    WFVerdict {
        point,
        ladder,
        exponent,
        decision,
        threshold: cfg.threshold,
        marginal_band: [cfg.marginal_low, cfg.threshold],
        scaling,
        widths: cfg.widths,
        window: cfg.window,
        diagnostic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder(f: impl Fn(f64) -> f64) -> Vec<LadderPoint> {
        DetectorConfig::default().scales().into_iter().map(|eps| LadderPoint { eps, norm: f(eps) }).collect()
    }

    #[test]
    fn slopes_and_decisions() {
        let cfg = DetectorConfig::default();
        let p = FreePhasePoint::new(1.0, 0.0, 1.0, 0.0);
        let v = decide(p, ladder(|e| 0.3 * e.powf(0.5)), 1.0, Scaling::Standard, &cfg);
        assert!((v.exponent.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(v.decision, Decision::Present);
        let v = decide(p, ladder(|e| e.powi(5)), 1.0, Scaling::Standard, &cfg);
        assert_eq!(v.decision, Decision::Absent);
        let v = decide(p, ladder(|e| e.powf(3.5)), 1.0, Scaling::Standard, &cfg);
        assert_eq!(v.decision, Decision::Marginal);
        let v = decide(p, ladder(|_| 0.0), 1.0, Scaling::Standard, &cfg);
        assert_eq!(v.decision, Decision::Absent);
        assert!(v.exponent.is_none());
    }

    #[test]
    fn non_monotone_decay_is_marginal() {
        let cfg = DetectorConfig::default();
        let p = FreePhasePoint::new(1.0, 0.0, 1.0, 0.0);
        let v = decide(p, ladder(|e| e.powi(6) * if e < 0.01 { 200.0 } else { 1.0 }), 1.0, Scaling::Standard, &cfg);
        assert_eq!(v.decision, Decision::Marginal);
        assert!(v.diagnostic.is_some());
    }
}
