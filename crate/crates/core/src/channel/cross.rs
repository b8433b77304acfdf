use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GammaFit, LinkParams, SignalStat};
use crate::error::{domain, Error, Result};
use crate::geometry::{cosine_law_distance, discretize_cell, Discretization};
use crate::mathkit::quad::FixedRule;
use crate::mathkit::special::{gamma, hyp2f1, reg_lower_gamma, scaled_interval_gamma, SeriesSpec};

/// Truncation of the arcsine expansion behind the exact cross-cell law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSeries {
    /// Number of arcsine terms kept.
    pub terms: usize,
    /// Largest admissible bound on the distribution-function error.
    pub tail_tolerance: f64,
}

impl Default for CrossSeries {
    fn default() -> Self {
        Self {
            terms: 25,
            tail_tolerance: 0.01,
        }
    }
}

/// Exact cross-cell received power via the truncated arcsine/binomial expansion.
///
/// Distances are handled in units of `D`, so `ρ = r̃/D ∈ [1 - R/D, 1 + R/D]` and the
/// distance density is `coef2·ρ - Σ_g a_g ρ^(g-1)` before normalization.
#[derive(Debug, Clone)]
pub struct CrossExact {
    fit: GammaFit,
    path_loss: f64,
    /// `αP·D^{-β}·Θ`.
    unit_scale: f64,
    lo: f64,
    hi: f64,
    coef2: f64,
    terms: Vec<(i32, f64)>,
    norm: f64,
    tail_bound: f64,
    mean: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    series: SeriesSpec,
}

pub fn cross_signal_stat_exact(
    fit: GammaFit,
    link: LinkParams,
    distance: f64,
    radius: f64,
    series: CrossSeries,
) -> Result<SignalStat> {
    Ok(SignalStat::CrossExact(CrossExact::new(
        fit, link, distance, radius, series,
    )?))
}

/// Coefficients `a_g` grouped by exponent `g = 1 - 2n + 2m`.
fn series_coefficients(terms: usize, k: f64, coef2: f64) -> Vec<(i32, f64)> {
    let mut grouped = std::collections::BTreeMap::<i32, f64>::new();
    let mut cn = 1.0;
    for n in 0..terms {
        let deg = 2 * n + 1;
        // binom(deg, m) / 2^deg, built up from m = 0.
        let mut b = 0.5f64.powi(deg as i32);
        for m in 0..=deg {
            let g = 1 - 2 * n as i32 + 2 * m as i32;
            let val = 2.0 / PI * coef2 * cn / deg as f64 * b * k.powi((deg - m) as i32);
            *grouped.entry(g).or_insert(0.0) += val;
            b *= (deg - m) as f64 / (m + 1) as f64;
        }
        cn *= (2 * n + 1) as f64 / (2 * n + 2) as f64;
    }
    grouped.into_iter().filter(|(_, v)| *v > 0.0).collect()
}

fn power_integral(lo: f64, hi: f64, e: f64) -> f64 {
    if e.abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(e) - lo.powf(e)) / e
    }
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-6
}

impl CrossExact {
    pub fn new(
        fit: GammaFit,
        link: LinkParams,
        distance: f64,
        radius: f64,
        series: CrossSeries,
    ) -> Result<Self> {
        if !(distance > radius && radius > 0.0) {
            return domain(format!(
                "cross-cell law needs D > R > 0 (D = {distance}, R = {radius})"
            ));
        }
        if series.terms == 0 {
            return domain("cross-cell series needs at least one term");
        }
        let beta = link.path_loss;
        let ratio = radius / distance;
        let (lo, hi) = (1.0 - ratio, 1.0 + ratio);
        let coef2 = 1.0 / (ratio * ratio);
        let terms = series_coefficients(series.terms, 1.0 - ratio * ratio, coef2);
        let norm = coef2 * 0.5 * (hi * hi - lo * lo)
            - terms
                .iter()
                .map(|&(g, a)| a * power_integral(lo, hi, g as f64))
                .sum::<f64>();
        let tail_bound = norm - 1.0;
        if tail_bound > series.tail_tolerance {
            return Err(Error::SeriesTruncation {
                terms: series.terms,
                bound: tail_bound,
                tolerance: series.tail_tolerance,
            });
        }
        let unit_scale = link.effective_power() * distance.powf(-beta) * fit.scale;
        let moment = coef2 * power_integral(lo, hi, 2.0 - beta)
            - terms
                .iter()
                .map(|&(g, a)| a * power_integral(lo, hi, g as f64 - beta))
                .sum::<f64>();
        let mut out = Self {
            fit,
            path_loss: beta,
            unit_scale,
            lo,
            hi,
            coef2,
            terms,
            norm,
            tail_bound,
            mean: unit_scale * fit.shape * moment / norm,
            nodes: Vec::new(),
            weights: Vec::new(),
            series: SeriesSpec::default(),
        };
        // ρ = lo + (hi-lo)(1 - cos φ)/2 absorbs the square-root edges of the density.
        let rule = FixedRule::new(96, 0.0, PI);
        for (&phi, &w) in rule.nodes.iter().zip(&rule.weights) {
            let rho = lo + (hi - lo) * 0.5 * (1.0 - phi.cos());
            let jac = (hi - lo) * 0.5 * phi.sin();
            out.nodes.push(rho);
            out.weights.push(w * jac * out.density(rho) / norm);
        }
        Ok(out)
    }

    /// Truncated (unnormalized) density of `ρ = r̃/D`.
    fn density(&self, rho: f64) -> f64 {
        let s: f64 = self.terms.iter().map(|&(g, a)| a * rho.powi(g - 1)).sum();
        (self.coef2 * rho - s).max(0.0)
    }

    /// Bound on the sup-norm distribution error introduced by truncation.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `s^{-q/β} Γ(κ + q/β; s lo^β, s hi^β)`.
    fn gamma_term(&self, q: f64, s: f64) -> f64 {
        let b = self.path_loss;
        scaled_interval_gamma(
            self.fit.shape + q / b,
            s * self.lo.powf(b),
            s * self.hi.powf(b),
            -(q / b) * s.ln(),
        )
        .unwrap_or(0.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x / self.unit_scale;
        let mut acc = self.coef2 * self.gamma_term(2.0, s);
        for &(g, a) in &self.terms {
            acc -= a * self.gamma_term(g as f64, s);
        }
        (acc / (self.path_loss * x * gamma(self.fit.shape) * self.norm)).max(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x / self.unit_scale;
        let k = self.fit.shape;
        let b = self.path_loss;
        let (p_lo, p_hi) = (
            reg_lower_gamma(k, s * self.lo.powf(b)),
            reg_lower_gamma(k, s * self.hi.powf(b)),
        );
        let gk = gamma(k);
        let piece = |q: f64| {
            (self.hi.powf(q) * p_hi - self.lo.powf(q) * p_lo - self.gamma_term(q, s) / gk) / q
        };
        let mut acc = self.coef2 * piece(2.0);
        for &(g, a) in &self.terms {
            acc -= a * piece(g as f64);
        }
        (acc / self.norm).clamp(0.0, 1.0)
    }

    /// `∫ ρ^(p-1) (1 + w ρ^β)^(-κ) dρ` over `[a, b]` via `ρ^p/p · ₂F₁(κ, p/β; 1+p/β; -wρ^β)`, `w ρ^β ≤ 1`.
    fn primitive_diff(&self, p: f64, w: f64, a: f64, b: f64) -> f64 {
        let beta = self.path_loss;
        let k = self.fit.shape;
        let c = 1.0 + p / beta;
        let closed = if p.abs() < 1e-8 || (c <= 0.0 && near_integer(c)) {
            None
        } else {
            let fa = hyp2f1(k, p / beta, c, -w * a.powf(beta), &self.series);
            let fb = hyp2f1(k, p / beta, c, -w * b.powf(beta), &self.series);
            match (fa, fb) {
                (Ok(fa), Ok(fb)) => Some((b.powf(p) * fb - a.powf(p) * fa) / p),
                _ => None,
            }
        };
        closed.unwrap_or_else(|| {
            FixedRule::new(48, a, b).apply(|r| r.powf(p - 1.0) * (1.0 + w * r.powf(beta)).powf(-k))
        })
    }

    /// `L(q) = ∫_lo^hi ρ^(q-1) (1 + c ρ^{-β})^{-κ} dρ`, split where `cρ^{-β} = 1`.
    fn basis(&self, q: f64, c: f64) -> f64 {
        let beta = self.path_loss;
        let k = self.fit.shape;
        let pivot = c.powf(1.0 / beta).clamp(self.lo, self.hi);
        let mut total = 0.0;
        if pivot < self.hi {
            // cρ^{-β} ≤ 1 here: expand in powers of cρ^{-β}.
            total += self.small_argument(q, c, pivot, self.hi);
        }
        if pivot > self.lo {
            // ρ^β/c ≤ 1 here: factor out (cρ^{-β})^{-κ}.
            total += c.powf(-k) * self.primitive_diff(q + beta * k, 1.0 / c, self.lo, pivot);
        }
        total
    }

    /// `∫ ρ^(q-1)(1 + cρ^{-β})^{-κ}` over `[a, b]` via `ρ^q/q · ₂F₁(κ, -q/β; 1-q/β; -cρ^{-β})`.
    fn small_argument(&self, q: f64, c: f64, a: f64, b: f64) -> f64 {
        let beta = self.path_loss;
        let k = self.fit.shape;
        let cc = 1.0 - q / beta;
        let closed = if cc <= 0.0 && near_integer(cc) {
            None
        } else {
            let fa = hyp2f1(k, -q / beta, cc, -c * a.powf(-beta), &self.series);
            let fb = hyp2f1(k, -q / beta, cc, -c * b.powf(-beta), &self.series);
            match (fa, fb) {
                (Ok(fa), Ok(fb)) => Some((b.powf(q) * fb - a.powf(q) * fa) / q),
                _ => None,
            }
        };
        closed.unwrap_or_else(|| {
            FixedRule::new(48, a, b).apply(|r| r.powf(q - 1.0) * (1.0 + c * r.powf(-beta)).powf(-k))
        })
    }

    /// Closed-form Laplace transform built from hypergeometric primitives.
    pub fn mgf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let c = t * self.unit_scale;
        let mut acc = self.coef2 * self.basis(2.0, c);
        for &(g, a) in &self.terms {
            acc -= a * self.basis(g as f64, c);
        }
        (acc / self.norm).clamp(0.0, 1.0)
    }

    /// Laplace transform by quadrature over the truncated distance density.
    pub fn mgf_quadrature(&self, t: f64) -> f64 {
        self.mgf_complex(Complex64::new(t, 0.0)).re
    }

    pub fn mgf_complex(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let k = self.fit.shape;
        let beta = self.path_loss;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&rho, &w)| (one + s * (self.unit_scale * rho.powf(-beta))).powf(-k) * w)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn support_hint(&self) -> (f64, f64) {
        let (qlo, qhi) = self.fit.unit_bracket(1e-12);
        let b = self.path_loss;
        (
            self.unit_scale * self.hi.powf(-b) * qlo,
            self.unit_scale * self.lo.powf(-b) * qhi,
        )
    }
}

/// Discretized cross-cell law: a Gamma mixture over zone midpoints.
#[derive(Debug, Clone)]
pub struct CrossMixture {
    shape: f64,
    components: Vec<(f64, f64)>,
}

/// Mixture over the zones of a cell at distance `D` and direction `θ_jk`.
pub fn cross_signal_stat_approx(
    fit: GammaFit,
    link: LinkParams,
    distance: f64,
    theta: f64,
    radius: f64,
    grid: &Discretization,
) -> Result<SignalStat> {
    let zones = discretize_cell(distance, radius, grid)?;
    let p = link.effective_power();
    let components = zones
        .iter()
        .map(|z| {
            let rt = cosine_law_distance(z.r, z.theta - theta, distance);
            (z.prob, p * fit.scale * rt.powf(-link.path_loss))
        })
        .collect();
    Ok(SignalStat::CrossApprox(CrossMixture {
        shape: fit.shape,
        components,
    }))
}

fn integer_shape(k: f64) -> Option<i32> {
    (k.fract() == 0.0 && (1.0..=16.0).contains(&k)).then_some(k as i32)
}

impl CrossMixture {
    /// `(weight, Gamma scale)` pairs.
    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, th)| {
                w * GammaFit {
                    shape: self.shape,
                    scale: th,
                }
                .pdf(x)
            })
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.components
            .iter()
            .map(|&(w, th)| w * reg_lower_gamma(self.shape, x / th))
            .sum::<f64>()
            .min(1.0)
    }

    pub fn mgf(&self, t: f64) -> f64 {
        let v: f64 = match integer_shape(self.shape) {
            Some(n) => self
                .components
                .iter()
                .map(|&(w, th)| w * (1.0 + t * th).powi(-n))
                .sum(),
            None => self
                .components
                .iter()
                .map(|&(w, th)| w * (1.0 + t * th).powf(-self.shape))
                .sum(),
        };
        v.min(1.0)
    }

    pub fn mgf_complex(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match integer_shape(self.shape) {
            Some(n) => self
                .components
                .iter()
                .map(|&(w, th)| (one + s * th).powi(-n) * w)
                .sum(),
            None => self
                .components
                .iter()
                .map(|&(w, th)| (one + s * th).powf(-self.shape) * w)
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.components
            .iter()
            .map(|&(w, th)| w * th * self.shape)
            .sum()
    }

    pub fn support_hint(&self) -> (f64, f64) {
        let (qlo, qhi) = GammaFit {
            shape: self.shape,
            scale: 1.0,
        }
        .unit_bracket(1e-12);
        let min = self
            .components
            .iter()
            .map(|c| c.1)
            .fold(f64::INFINITY, f64::min);
        let max = self.components.iter().map(|c| c.1).fold(0.0, f64::max);
        (min * qlo, max * qhi)
    }
}
