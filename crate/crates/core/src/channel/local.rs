use num_complex::Complex64;

use super::{GammaFit, LinkParams, SignalStat};
use crate::error::{domain, Result};
use crate::mathkit::quad::FixedRule;
use crate::mathkit::special::{gamma, reg_lower_gamma, scaled_interval_gamma};

/// Received power from the serving BS of a user placed uniformly in its cell.
#[derive(Debug, Clone)]
pub struct LocalPower {
    fit: GammaFit,
    path_loss: f64,
    /// `P·R^{-β}·Θ`, the fading scale seen at the cell edge.
    edge_scale: f64,
    rule: FixedRule,
}

/// Law of `P r^{-β} ζ` with `r` distributed as `2r/R²` on `[0, R]`.
pub fn local_signal_stat(fit: GammaFit, link: LinkParams, radius: f64) -> Result<SignalStat> {
    if !(radius > 0.0) {
        return domain(format!("cell radius must be positive, got {radius}"));
    }
    Ok(SignalStat::Local(LocalPower {
        fit,
        path_loss: link.path_loss,
        edge_scale: link.transmit_power * radius.powf(-link.path_loss) * fit.scale,
        // u = (r/R)² = e^{-v}: the Laplace integrand is smooth in v on [0, 60].
        rule: FixedRule::composite(8, 0.0, 60.0, 120),
    }))
}

impl LocalPower {
    fn edge_term(&self, s: f64) -> f64 {
        let k = self.fit.shape;
        let b = self.path_loss;
        scaled_interval_gamma(k + 2.0 / b, 0.0, s, -(2.0 / b) * s.ln()).unwrap_or(0.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x / self.edge_scale;
        2.0 * self.edge_term(s) / (self.path_loss * x * gamma(self.fit.shape))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x / self.edge_scale;
        let k = self.fit.shape;
        (reg_lower_gamma(k, s) - self.edge_term(s) / gamma(k)).clamp(0.0, 1.0)
    }

    pub fn mgf(&self, t: f64) -> f64 {
        self.mgf_complex(Complex64::new(t, 0.0)).re.clamp(0.0, 1.0)
    }

    pub fn mgf_complex(&self, s: Complex64) -> Complex64 {
        let c = s * self.edge_scale;
        let k = self.fit.shape;
        let half = 0.5 * self.path_loss;
        let one = Complex64::new(1.0, 0.0);
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&v, &w)| (one + c * (half * v).exp()).powf(-k) * (w * (-v).exp()))
            .sum()
    }

    pub fn support_hint(&self) -> (f64, f64) {
        let (lo, _) = self.fit.unit_bracket(1e-12);
        // Heavy right tail: 1 - F(x) ≈ (x/edge)^{-2/β} Γ(κ+2/β)/Γ(κ).
        let b = self.path_loss;
        let k = self.fit.shape;
        let tail = 1e-9;
        let hi = (gamma(k + 2.0 / b) / (gamma(k) * tail)).powf(0.5 * b);
        (self.edge_scale * lo, self.edge_scale * hi)
    }

    pub fn fit(&self) -> GammaFit {
        self.fit
    }

    pub fn edge_scale(&self) -> f64 {
        self.edge_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathkit::quad::{integrate_log_domain, QuadratureSpec};

    fn stat() -> SignalStat {
        local_signal_stat(
            GammaFit::new(0.5, 1.0).unwrap(),
            LinkParams::new(1.0, 2.6, 1.0).unwrap(),
            500.0,
        )
        .unwrap()
    }

    #[test]
    fn cdf_limits() {
        let s = stat();
        assert_eq!(s.cdf(0.0), 0.0);
        let (_, hi) = s.support_hint();
        assert!(s.cdf(hi) > 1.0 - 1e-8);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let s = stat();
        let (lo, hi) = s.support_hint();
        let spec = QuadratureSpec {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            ..Default::default()
        };
        let mass = integrate_log_domain(|x| s.pdf(x), lo * 1e-3, hi * 1e3, &spec)
            .unwrap()
            .value;
        let tail = 1.0 - s.cdf(hi * 1e3);
        assert!((mass + tail - 1.0).abs() < 1e-6, "{mass} {tail}");
    }

    #[test]
    fn pdf_is_cdf_derivative() {
        let s = stat();
        for &x in &[1e-9, 1e-8, 3e-7, 1e-5] {
            let h = x * 1e-5;
            let num = (s.cdf(x + h) - s.cdf(x - h)) / (2.0 * h);
            assert!(
                (num - s.pdf(x)).abs() < 1e-5 * s.pdf(x),
                "{x}: {num} vs {}",
                s.pdf(x)
            );
        }
    }

    #[test]
    fn mgf_agrees_with_cdf_transform() {
        // M(t) = ∫ t e^{-tx} F(x) dx
        let s = stat();
        let spec = QuadratureSpec::default();
        for &t in &[1e6, 1e8, 1e10] {
            let (lo, _) = s.support_hint();
            let v = integrate_log_domain(
                |x| t * (-t * x).exp() * s.cdf(x),
                lo * 1e-3,
                60.0 / t,
                &spec,
            )
            .unwrap()
            .value;
            assert!((v - s.mgf(t)).abs() < 1e-6, "t={t}: {v} vs {}", s.mgf(t));
        }
        assert!((s.mgf(0.0) - 1.0).abs() < 1e-12);
    }
}
