//! Composite fading and the laws of local and cross-cell received power.

mod cross;
mod local;
mod sampling;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mathkit::special::{
    ln_gamma, reg_lower_gamma, reg_lower_gamma_complex, reg_upper_gamma,
};

pub use cross::{
    cross_signal_stat_approx, cross_signal_stat_exact, CrossExact, CrossMixture, CrossSeries,
};
pub use local::{local_signal_stat, LocalPower};
pub use sampling::{received_power, sample_cross, sample_local, CrossDistanceSampler};

/// Generalized-K composite fading/shadowing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedKSpec {
    pub m_c: f64,
    pub m_s: f64,
    pub omega: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl GeneralizedKSpec {
    pub fn new(m_c: f64, m_s: f64, omega: f64, epsilon: f64) -> Result<Self> {
        if !(m_c > 0.0 && m_s > 0.0 && omega > 0.0) {
            return domain(format!(
                "generalized-K needs positive m_c, m_s, omega (got {m_c}, {m_s}, {omega})"
            ));
        }
        Ok(Self {
            m_c,
            m_s,
            omega,
            epsilon,
        })
    }
}

/// Gamma law with shape `shape` and scale `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
}

impl GammaFit {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(Error::DegenerateFit(format!(
                "shape {shape} and scale {scale} must be positive"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if self.shape == 1.0 && x == 0.0 {
                1.0 / self.scale
            } else {
                0.0
            };
        }
        let z = x / self.scale;
        ((self.shape - 1.0) * z.ln() - z - ln_gamma(self.shape)).exp() / self.scale
    }

    pub fn cdf(&self, x: f64) -> f64 {
        reg_lower_gamma(self.shape, x.max(0.0) / self.scale)
    }

    pub fn sf(&self, x: f64) -> f64 {
        reg_upper_gamma(self.shape, x.max(0.0) / self.scale)
    }

    /// `E[e^{-tX}] = (1 + tΘ)^{-κ}`.
    pub fn mgf(&self, t: f64) -> f64 {
        (1.0 + t * self.scale).powf(-self.shape)
    }

    pub fn mgf_complex(&self, s: Complex64) -> Complex64 {
        let z = Complex64::new(1.0, 0.0) + s * self.scale;
        if self.shape.fract() == 0.0 && self.shape <= 64.0 {
            z.inv().powi(self.shape as i32)
        } else {
            z.powf(-self.shape)
        }
    }

    /// `E[e^{-sX}; X < x] = (1 + sΘ)^{-κ} P(κ, (1 + sΘ)x/Θ)`.
    pub fn truncated_mgf(&self, s: Complex64, x: f64) -> Complex64 {
        let z = Complex64::new(1.0, 0.0) + s * self.scale;
        self.mgf_complex(s) * reg_lower_gamma_complex(self.shape, z * (x.max(0.0) / self.scale))
    }

    /// `E[X | X < x]`.
    pub fn truncated_mean(&self, x: f64) -> f64 {
        let u = x.max(0.0) / self.scale;
        let below = reg_lower_gamma(self.shape, u);
        if !(below > 1e-300) {
            return 0.5 * x.max(0.0);
        }
        self.mean() * reg_lower_gamma(self.shape + 1.0, u) / below
    }

    /// Quantile bracket `[q(p), q(1-p)]` of the unit-scale law.
    pub(crate) fn unit_bracket(&self, p: f64) -> (f64, f64) {
        let k = self.shape;
        let lo = ((p.ln() + ln_gamma(k + 1.0)) / k).exp();
        let (mut a, mut b) = (k.max(1.0), k.max(1.0) * 4.0 + 40.0);
        while reg_upper_gamma(k, b) > p {
            b *= 2.0;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if reg_upper_gamma(k, m) > p {
                a = m;
            } else {
                b = m;
            }
        }
        (lo, b)
    }
}

/// Moment-matched Gamma approximation of a generalized-K law.
pub fn fit_gamma(gk: &GeneralizedKSpec) -> Result<GammaFit> {
    let denom = gk.m_c + gk.m_s + 1.0 - gk.m_c * gk.m_s * gk.epsilon;
    if !(denom > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "moment-match denominator {denom} is not positive"
        )));
    }
    let shape = gk.m_c * gk.m_s / denom;
    GammaFit::new(shape, gk.omega / shape)
}

/// Per-channel transmit power, path-loss exponent and zoom factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub transmit_power: f64,
    pub path_loss: f64,
    pub zoom: f64,
}

impl LinkParams {
    /// `path_loss` may be as low as 2, which keeps cross-cell laws well defined;
    /// scenario validation insists on a strictly larger exponent.
    pub fn new(transmit_power: f64, path_loss: f64, zoom: f64) -> Result<Self> {
        if !(transmit_power > 0.0) {
            return domain(format!(
                "transmit power must be positive, got {transmit_power}"
            ));
        }
        if !(path_loss >= 2.0) {
            return domain(format!(
                "path-loss exponent must be at least 2, got {path_loss}"
            ));
        }
        if !(zoom >= 1.0) {
            return domain(format!("zoom factor must be at least 1, got {zoom}"));
        }
        Ok(Self {
            transmit_power,
            path_loss,
            zoom,
        })
    }

    /// Power reaching zoomed users, `αP`.
    pub fn effective_power(&self) -> f64 {
        self.zoom * self.transmit_power
    }

    pub fn with_zoom(&self, zoom: f64) -> Result<Self> {
        Self::new(self.transmit_power, self.path_loss, zoom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LocalExact,
    CrossExact,
    CrossApprox,
}

/// Law of a received power: local (own BS) or cross-cell.
#[derive(Debug, Clone)]
pub enum SignalStat {
    Local(LocalPower),
    CrossExact(CrossExact),
    CrossApprox(CrossMixture),
}

impl SignalStat {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::Local(s) => s.pdf(x),
            Self::CrossExact(s) => s.pdf(x),
            Self::CrossApprox(s) => s.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Local(s) => s.cdf(x),
            Self::CrossExact(s) => s.cdf(x),
            Self::CrossApprox(s) => s.cdf(x),
        }
    }

    /// Laplace transform `E[e^{-tX}]` at real `t ≥ 0`.
    pub fn mgf(&self, t: f64) -> f64 {
        match self {
            Self::Local(s) => s.mgf(t),
            Self::CrossExact(s) => s.mgf(t),
            Self::CrossApprox(s) => s.mgf(t),
        }
    }

    /// `E[e^{-sX}]` for complex `s` with `Re s ≥ 0`; `φ(ω) = mgf_complex(-iω)`.
    pub fn mgf_complex(&self, s: Complex64) -> Complex64 {
        match self {
            Self::Local(st) => st.mgf_complex(s),
            Self::CrossExact(st) => st.mgf_complex(s),
            Self::CrossApprox(st) => st.mgf_complex(s),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Local(_) => f64::INFINITY,
            Self::CrossExact(s) => s.mean(),
            Self::CrossApprox(s) => s.mean(),
        }
    }

    /// Range `[lo, hi]` holding all but a negligible part of the mass.
    pub fn support_hint(&self) -> (f64, f64) {
        match self {
            Self::Local(s) => s.support_hint(),
            Self::CrossExact(s) => s.support_hint(),
            Self::CrossApprox(s) => s.support_hint(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            Self::Local(_) => Provenance::LocalExact,
            Self::CrossExact(_) => Provenance::CrossExact,
            Self::CrossApprox(_) => Provenance::CrossApprox,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_fit_substitution() {
        let f = fit_gamma(&GeneralizedKSpec::new(2.0, 1.0, 2.0, 0.0).unwrap()).unwrap();
        assert!((f.shape - 0.5).abs() < 1e-15 && (f.scale - 4.0).abs() < 1e-15);
        assert!((f.mean() - 2.0).abs() < 1e-15);
        let f = fit_gamma(&GeneralizedKSpec::new(4.0, 2.0, 1.0, 0.0).unwrap()).unwrap();
        assert!((f.shape - 8.0 / 7.0).abs() < 1e-15 && (f.scale - 7.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_fit() {
        let gk = GeneralizedKSpec::new(2.0, 2.0, 1.0, 2.0).unwrap();
        assert!(matches!(fit_gamma(&gk), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn link_validation() {
        assert!(LinkParams::new(1.0, 2.6, 1.0).is_ok());
        assert!(LinkParams::new(1.0, 1.9, 1.0).is_err());
        assert!(LinkParams::new(1.0, 2.6, 0.5).is_err());
        assert!(LinkParams::new(0.0, 2.6, 1.0).is_err());
    }

    #[test]
    fn gamma_law_basics() {
        let g = GammaFit::new(2.0, 3.0).unwrap();
        assert!((g.cdf(3.0) - (1.0 - 2.0 * (-1f64).exp())).abs() < 1e-14);
        assert!((g.mgf(0.5) - 2.5f64.powi(-2)).abs() < 1e-15);
        let (lo, hi) = g.unit_bracket(1e-12);
        assert!(g.cdf(lo * 3.0) < 2e-12 && g.sf(hi * 3.0) <= 1e-12);
    }
}
