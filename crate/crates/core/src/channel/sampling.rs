use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{GammaFit, LinkParams};
use crate::error::Result;
use crate::geometry::cross_distance_cdf;

const KNOTS: usize = 4096;

/// Tabulated inverse of the cross-distance distribution for one `(D, R)` pair.
#[derive(Debug, Clone)]
pub struct CrossDistanceSampler {
    distance: f64,
    radius: f64,
    cdf: Vec<f64>,
    knots: Vec<f64>,
}

impl CrossDistanceSampler {
    pub fn new(distance: f64, radius: f64) -> Result<Self> {
        let (lo, hi) = (distance - radius, distance + radius);
        let mut knots = Vec::with_capacity(KNOTS);
        let mut cdf = Vec::with_capacity(KNOTS);
        for i in 0..KNOTS {
            // Cosine spacing crowds knots at both ends where the law is steepest to invert.
            let u = i as f64 / (KNOTS - 1) as f64;
            let r = lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
            knots.push(r);
            cdf.push(cross_distance_cdf(r, distance, radius)?);
        }
        cdf[0] = 0.0;
        cdf[KNOTS - 1] = 1.0;
        for i in 1..KNOTS {
            cdf[i] = cdf[i].max(cdf[i - 1]);
        }
        Ok(Self {
            distance,
            radius,
            cdf,
            knots,
        })
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Distance at probability level `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, KNOTS - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.knots[i - 1] + t.clamp(0.0, 1.0) * (self.knots[i] - self.knots[i - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// `P·d^{-β}·fading`.
pub fn received_power(power: f64, distance: f64, path_loss: f64, fading: f64) -> f64 {
    power * distance.powf(-path_loss) * fading
}

fn fading<R: Rng + ?Sized>(fit: &GammaFit, rng: &mut R) -> f64 {
    Gamma::new(fit.shape, fit.scale)
        .expect("validated gamma fit")
        .sample(rng)
}

/// One draw of local received power for a user uniform in a cell of radius `radius`.
pub fn sample_local<R: Rng + ?Sized>(
    fit: &GammaFit,
    link: &LinkParams,
    radius: f64,
    rng: &mut R,
) -> f64 {
    let r = radius * rng.random::<f64>().sqrt();
    received_power(link.transmit_power, r, link.path_loss, fading(fit, rng))
}

/// One draw of cross-cell received power (at effective power `αP`).
pub fn sample_cross<R: Rng + ?Sized>(
    fit: &GammaFit,
    link: &LinkParams,
    sampler: &CrossDistanceSampler,
    rng: &mut R,
) -> f64 {
    let r = sampler.sample(rng);
    received_power(link.effective_power(), r, link.path_loss, fading(fit, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forced_draw() {
        assert!((received_power(2.0, 1000.0, 2.6, 1.0) - 2.0 * 1000f64.powf(-2.6)).abs() < 1e-20);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let s = CrossDistanceSampler::new(1000.0, 500.0).unwrap();
        for &u in &[0.001, 0.1, 0.5, 0.9, 0.999] {
            let r = s.quantile(u);
            assert!((cross_distance_cdf(r, 1000.0, 500.0).unwrap() - u).abs() < 1e-4);
        }
        assert!((s.quantile(0.0) - 500.0).abs() < 1e-9);
        assert!((s.quantile(1.0) - 1500.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_stream() {
        let fit = GammaFit::new(2.0, 1.0).unwrap();
        let link = LinkParams::new(1.0, 2.6, 1.0).unwrap();
        let s = CrossDistanceSampler::new(1000.0, 500.0).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..8)
                .map(|_| sample_cross(&fit, &link, &s, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }
}
