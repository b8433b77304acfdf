//! Log-spaced Gauss–Legendre abscissae shared by all CDF-product integrals.

use super::quad::gauss_legendre;
use crate::error::{domain, Result};

/// Panels of equal width in `ln x`, each carrying an `n`-point Gauss–Legendre rule.
///
/// Besides plain quadrature the grid offers spectral cumulative integration: within a
/// panel the integrand (in `ln x`) is replaced by its interpolating polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    ln_lo: f64,
    width: f64,
    panels: usize,
    order: usize,
    ref_nodes: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `cumulative[i*n + j] = ∫_0^{τ_i} ℓ_j(σ) dσ` on the unit panel.
    cumulative: Vec<f64>,
}

fn lagrange(ref_nodes: &[f64], j: usize, t: f64) -> f64 {
    ref_nodes
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .map(|(_, &tm)| (t - tm) / (ref_nodes[j] - tm))
        .product()
}

impl LogGrid {
    /// Grid covering `[lo, hi]` with panels of width `width` in `ln x`.
    pub fn spanning(lo: f64, hi: f64, width: f64, order: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return domain(format!("log grid needs 0 < lo < hi, got [{lo}, {hi}]"));
        }
        if !(width > 0.0) || order < 2 {
            return domain(format!(
                "log grid needs positive width and at least 2 points, got {width}, {order}"
            ));
        }
        let ln_lo = lo.ln();
        let panels = ((hi.ln() - ln_lo) / width).ceil().max(1.0) as usize;
        let (x, w) = gauss_legendre(order);
        let ref_nodes: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let ref_weights: Vec<f64> = w.iter().map(|t| 0.5 * t).collect();
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            for (t, rw) in ref_nodes.iter().zip(&ref_weights) {
                let x = (ln_lo + width * (p as f64 + t)).exp();
                nodes.push(x);
                weights.push(rw * width * x);
            }
        }
        let mut cumulative = vec![0.0; order * order];
        for (i, &ti) in ref_nodes.iter().enumerate() {
            for j in 0..order {
                cumulative[i * order + j] = ref_nodes
                    .iter()
                    .zip(&ref_weights)
                    .map(|(s, sw)| sw * ti * lagrange(&ref_nodes, j, s * ti))
                    .sum();
            }
        }
        Ok(Self {
            ln_lo,
            width,
            panels,
            order,
            ref_nodes,
            nodes,
            weights,
            cumulative,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for integrals in `x`: `∫ f dx ≈ Σ wᵢ f(xᵢ)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lower(&self) -> f64 {
        self.ln_lo.exp()
    }

    pub fn upper(&self) -> f64 {
        (self.ln_lo + self.width * self.panels as f64).exp()
    }

    /// `∫ f dx` from tabulated density values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `∫_{lo}^{xᵢ} f dx` at every node.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut out = Vec::with_capacity(self.len());
        let mut before = 0.0;
        for p in 0..self.panels {
            let base = p * n;
            let g: Vec<f64> = (0..n)
                .map(|j| f[base + j] * self.nodes[base + j] * self.width)
                .collect();
            for i in 0..n {
                let part: f64 = (0..n).map(|j| self.cumulative[i * n + j] * g[j]).sum();
                out.push(before + part);
            }
            before += (0..n)
                .map(|j| self.weights[base + j] * f[base + j])
                .sum::<f64>();
        }
        out
    }

    /// `∫_{lo}^{x} f dx` for any `x`, clamped to the grid range.
    pub fn cumulative_at(&self, f: &[f64], x: f64) -> f64 {
        if !(x > self.lower()) {
            return 0.0;
        }
        let n = self.order;
        let pos = (x.ln() - self.ln_lo) / self.width;
        if pos >= self.panels as f64 {
            return self.integrate(f);
        }
        let p = pos.floor() as usize;
        let tau = pos - p as f64;
        let base = p * n;
        let before: f64 = (0..base).map(|i| self.weights[i] * f[i]).sum();
        let (x, w) = gauss_legendre(n);
        let part: f64 = (0..n)
            .map(|j| {
                let g = f[base + j] * self.nodes[base + j] * self.width;
                let lj: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(s, sw)| {
                        0.5 * sw * tau * lagrange(&self.ref_nodes, j, 0.5 * (s + 1.0) * tau)
                    })
                    .sum();
                g * lj
            })
            .sum();
        before + part
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_exponential_law() {
        let g = LogGrid::spanning(1e-8, 60.0, 0.5, 10).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (-x).exp()).collect();
        let head = (-g.lower()).exp();
        assert!((g.integrate(&f) - head).abs() < 1e-12);
        let c = g.cumulative(&f);
        for (x, v) in g.nodes().iter().zip(&c) {
            assert!((v - (head - (-x).exp())).abs() < 1e-12, "{x}");
        }
        for &x in &[1e-3, 0.37, 2.0, 11.0] {
            assert!((g.cumulative_at(&f, x) - (head - (-x).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_range() {
        assert!(LogGrid::spanning(0.0, 1.0, 0.5, 10).is_err());
        assert!(LogGrid::spanning(2.0, 1.0, 0.5, 10).is_err());
    }
}
