//! Metrics of the user of interest with its position in the cell resolved into zones.
//!
//! Given the zone, the links from the user to every active BS are independent Gamma
//! variables. The serving link, the association event and the interference are then
//! evaluated jointly and the zones are averaged at the end.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::association::AccessModel;
use crate::channel::GammaFit;
use crate::error::{Error, Result};
use crate::geometry::cell_zones;
use crate::mathkit::{
    gauss_legendre, integrate_oscillatory_im_from, reg_lower_gamma, LogGrid, QuadratureSpec,
};
use crate::scenario::{Association, Scheme};
use crate::sigint::{zoom_probability_mmap, zoom_probability_mrsp};

/// Serving-link values per branch at which the conditional outage is evaluated.
const OUTAGE_SAMPLES: usize = 9;
/// Width in `ln t` of each panel of the spectral-efficiency transform integral.
const PANEL_WIDTH: f64 = 0.5;
const PANEL_ORDER: usize = 8;
const MAX_PANELS: usize = 400;
/// Mass left out of each tail of a branch's serving-link support.
const SUPPORT_TAIL: f64 = 1e-10;
/// Branches lighter than this are dropped.
const BRANCH_FLOOR: f64 = 1e-12;

struct ZoneLink {
    fit: GammaFit,
    /// Density and distribution on the grid; empty when the link needs no truncation.
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

struct Zone {
    links: Vec<ZoneLink>,
    /// Node range covering the supports of the zone's branches.
    range: (usize, usize),
}

/// The user sits in `zone`, associates to active position `serving` and has these densities.
struct Branch {
    zone: usize,
    serving: usize,
    /// Zone weight times the joint density of the serving link and association.
    associated: Vec<f64>,
    /// `associated` times the channel-access factor.
    served: Vec<f64>,
    association: f64,
    access: f64,
    support: (usize, usize),
}

/// Per-serving-BS summary, every value conditional on association to that BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusServing {
    pub bs: usize,
    pub association: f64,
    pub access: f64,
    pub se_nats: f64,
    pub outage: f64,
    pub mean_interference: f64,
}

/// Zone-resolved joint model of the user of interest.
pub struct PositionedFocus {
    grid: std::sync::Arc<LogGrid>,
    zoom: f64,
    /// Interferers are conditioned to be weaker than the serving link.
    truncated: bool,
    active: Vec<usize>,
    zoom_probability: Vec<f64>,
    zones: Vec<Zone>,
    branches: Vec<Branch>,
}

impl PositionedFocus {
    pub fn build(model: &AccessModel, scheme: Scheme) -> Result<Self> {
        let scn = model.scenario();
        let j = scn.focus;
        let grid = model.grid().clone();
        let active = model.active().to_vec();
        let truncated = match scheme.association {
            Association::Mrsp => true,
            Association::Mmap => false,
            Association::Hybrid => {
                return Err(Error::Unsupported(
                    "hybrid association has no analytic signal law; use the simulator".into(),
                ))
            }
        };
        let mmap = if truncated {
            None
        } else {
            Some(model.mmap_associate(scheme.scheduling)?)
        };
        let zoom_probability = active
            .iter()
            .map(|&m| match &mmap {
                Some(a) => zoom_probability_mmap(model, a, m),
                None => zoom_probability_mrsp(model, j, m, scheme.scheduling),
            })
            .collect::<Result<Vec<_>>>()?;
        let access: Vec<Option<Vec<f64>>> = active
            .iter()
            .map(|&k| match &mmap {
                Some(a) if a.chosen[&j] == k => model.mmap_access_factor(j, a).map(Some),
                Some(_) => Ok(None),
                None => model.mrsp_access_factor(j, k, scheme.scheduling).map(Some),
            })
            .collect::<Result<_>>()?;

        let (cx, cy) = scn.layout.center(j)?;
        let centers = active
            .iter()
            .map(|&m| scn.layout.center(m))
            .collect::<Result<Vec<_>>>()?;
        let unit = scn.link.transmit_power * scn.cross_fading.scale;
        let points = cell_zones(scn.layout.radius(), &scn.options.focus_zones)?;
        let nodes = grid.nodes();
        let mut zones = Vec::with_capacity(points.len());
        let mut branches = Vec::new();
        for (zi, p) in points.iter().enumerate() {
            let (px, py) = (cx + p.r * p.theta.cos(), cy + p.r * p.theta.sin());
            let links = centers
                .iter()
                .map(|&(mx, my)| {
                    let d = (px - mx).hypot(py - my);
                    let fit =
                        GammaFit::new(scn.cross_fading.shape, unit * d.powf(-scn.link.path_loss))?;
                    Ok(ZoneLink {
                        pdf: nodes.iter().map(|&x| fit.pdf(x)).collect(),
                        cdf: nodes.iter().map(|&x| fit.cdf(x)).collect(),
                        fit,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for (k, factor) in access.iter().enumerate() {
                let Some(factor) = factor else { continue };
                let associated: Vec<f64> = (0..nodes.len())
                    .map(|i| {
                        let rivals: f64 = if truncated {
                            links
                                .iter()
                                .enumerate()
                                .filter(|&(m, _)| m != k)
                                .map(|(_, l)| l.cdf[i])
                                .product()
                        } else {
                            1.0
                        };
                        p.prob * links[k].pdf[i] * rivals
                    })
                    .collect();
                let association = grid.integrate(&associated);
                if !(association > BRANCH_FLOOR) {
                    continue;
                }
                let served: Vec<f64> = associated.iter().zip(factor).map(|(a, f)| a * f).collect();
                let (first, last) = mass_support(&grid, &served);
                branches.push(Branch {
                    zone: zi,
                    serving: k,
                    access: grid.integrate(&served),
                    associated,
                    served,
                    association,
                    support: (first, last),
                });
            }
            let mine = || branches.iter().filter(|b: &&Branch| b.zone == zi);
            let range = (
                mine().map(|b| b.support.0).min().unwrap_or(0),
                mine().map(|b| b.support.1).max().unwrap_or(0),
            );
            // Links that almost surely fall below every serving value of the zone need no truncation.
            let links = links
                .into_iter()
                .map(|l| {
                    if truncated && range.1 > range.0 && l.cdf[range.0] < 1.0 - 1e-13 {
                        l
                    } else {
                        ZoneLink {
                            pdf: Vec::new(),
                            cdf: Vec::new(),
                            ..l
                        }
                    }
                })
                .collect();
            zones.push(Zone { links, range });
        }
        Ok(Self {
            grid,
            zoom: scn.link.zoom,
            truncated,
            active,
            zoom_probability,
            zones,
            branches,
        })
    }

    /// Number of zone-and-BS branches carrying probability mass.
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Probability of being served, over all zones and BSs.
    pub fn access_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.access).sum()
    }

    /// `E[e^{-tcY} | Y < xᵢ]` of one interferer over the zone's node range, `c ∈ {1, α}` mixed by `q`.
    fn interferer_transform(
        &self,
        link: &ZoneLink,
        range: (usize, usize),
        q: f64,
        t: f64,
    ) -> Vec<f64> {
        let fit = &link.fit;
        if link.cdf.is_empty() {
            return vec![(1.0 - q) * fit.mgf(t) + q * fit.mgf(self.zoom * t)];
        }
        let nodes = self.grid.nodes();
        let one = |t: f64, i: usize| -> f64 {
            let below = link.cdf[i];
            if !(below > 1e-300) {
                return 1.0;
            }
            let u = nodes[i] * (1.0 / fit.scale + t);
            (fit.mgf(t) * reg_lower_gamma(fit.shape, u) / below).clamp(0.0, 1.0)
        };
        (range.0..range.1)
            .map(|i| {
                let plain = one(t, i);
                if q > 0.0 && self.zoom != 1.0 {
                    (1.0 - q) * plain + q * one(self.zoom * t, i)
                } else {
                    plain
                }
            })
            .collect()
    }

    /// Per branch: `E[(1 - e^{-tS}) e^{-tI}; served]`.
    fn gap(&self, t: f64) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let w = self.grid.weights();
        let per_zone: Vec<Vec<Vec<f64>>> = self
            .zones
            .par_iter()
            .map(|z| {
                z.links
                    .iter()
                    .zip(&self.zoom_probability)
                    .map(|(l, &q)| self.interferer_transform(l, z.range, q, t))
                    .collect()
            })
            .collect();
        self.branches
            .iter()
            .map(|b| {
                let tr = &per_zone[b.zone];
                let lo = self.zones[b.zone].range.0;
                (b.support.0..b.support.1)
                    .map(|i| {
                        let others: f64 = tr
                            .iter()
                            .enumerate()
                            .filter(|&(m, _)| m != b.serving)
                            .map(|(_, v)| if v.len() == 1 { v[0] } else { v[i - lo] })
                            .product();
                        w[i] * b.served[i] * -(-t * self.zoom * nodes[i]).exp_m1() * others
                    })
                    .sum()
            })
            .collect()
    }

    /// `E[ln(1 + SINR); served]` per branch.
    fn branch_spectral_efficiency(&self, noise: f64) -> Result<Vec<f64>> {
        let n = self.branches.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let signal_mean: Vec<f64> = self
            .branches
            .iter()
            .map(|b| {
                let x = self.grid.nodes();
                self.zoom
                    * self.grid.integrate(
                        &b.served
                            .iter()
                            .zip(x)
                            .map(|(v, x)| v * x)
                            .collect::<Vec<_>>(),
                    )
            })
            .collect();
        let t_lo = 1e-6 / (self.zoom * self.grid.upper());
        // Below t_lo the integrand is t·E[S; served].
        let mut totals: Vec<f64> = signal_mean.iter().map(|m| m * t_lo).collect();
        let (gx, gw) = gauss_legendre(PANEL_ORDER);
        let mut quiet = 0;
        let mut peak = 0.0f64;
        for p in 0..MAX_PANELS {
            let a = t_lo.ln() + p as f64 * PANEL_WIDTH;
            let mut panel = vec![0.0; n];
            for (x, wt) in gx.iter().zip(&gw) {
                let t = (a + 0.5 * PANEL_WIDTH * (x + 1.0)).exp();
                let scale = 0.5 * PANEL_WIDTH * wt * (-noise * t).exp();
                for (acc, v) in panel.iter_mut().zip(self.gap(t)) {
                    *acc += scale * v;
                }
            }
            let c: f64 = panel.iter().sum();
            for (acc, v) in totals.iter_mut().zip(&panel) {
                *acc += v;
            }
            let total: f64 = totals.iter().sum();
            peak = peak.max(c);
            if c < 1e-12 * total.max(1e-300) && c < peak {
                quiet += 1;
                if quiet >= 3 {
                    return Ok(totals);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::NonConvergence {
            what: "spectral efficiency transform; add noise or interferers".into(),
            estimate: totals.iter().sum(),
            error: f64::NAN,
        })
    }

    /// `P(Q·I > S | zone, X = x)` for the interferers of a branch.
    fn conditional_outage(&self, b: &Branch, x: f64, threshold: f64) -> Result<f64> {
        let links = &self.zones[b.zone].links;
        let rivals: Vec<(&GammaFit, f64, f64)> = links
            .iter()
            .zip(&self.zoom_probability)
            .enumerate()
            .filter(|&(m, _)| m != b.serving)
            .map(|(_, (l, &q))| (&l.fit, q, if self.truncated { l.fit.cdf(x) } else { 1.0 }))
            .collect();
        if rivals.is_empty() {
            return Ok(0.0);
        }
        let s = self.zoom * x;
        let transform = |fit: &GammaFit, below: f64, v: Complex64| -> Complex64 {
            if !self.truncated || fit.sf(x) < 1e-14 {
                fit.mgf_complex(v)
            } else if !(below > 1e-300) {
                Complex64::new(1.0, 0.0)
            } else {
                fit.truncated_mgf(v, x) / below
            }
        };
        let f = |w: f64| {
            let v = Complex64::new(0.0, -threshold * w);
            let mut acc = Complex64::from_polar(1.0, -w * s);
            for &(fit, q, below) in &rivals {
                let plain = transform(fit, below, v);
                let boosted = if q > 0.0 && self.zoom != 1.0 {
                    transform(fit, below, v * self.zoom)
                } else {
                    plain
                };
                acc *= plain * (1.0 - q) + boosted * q;
            }
            acc
        };
        let spec = QuadratureSpec {
            abs_tol: 1e-6,
            rel_tol: 1e-5,
            ..QuadratureSpec::default()
        };
        let e = integrate_oscillatory_im_from(f, 1e-6 / s.max(1e-300), &spec)?;
        Ok((0.5 + e.value / std::f64::consts::PI).clamp(0.0, 1.0))
    }

    /// `P(outage, branch)` per branch; unserved users count as in outage.
    fn branch_outage(&self, threshold: f64) -> Result<Vec<f64>> {
        let nodes = self.grid.nodes();
        let jobs: Vec<(usize, f64)> = self
            .branches
            .iter()
            .enumerate()
            .flat_map(|(bi, b)| {
                let (lo, hi) = (nodes[b.support.0].ln(), nodes[b.support.1 - 1].ln());
                let count = sample_count(b.association);
                (0..count).map(move |s| {
                    let u = if count > 1 {
                        s as f64 / (count - 1) as f64
                    } else {
                        0.5
                    };
                    (bi, (lo + u * (hi - lo)).exp())
                })
            })
            .collect();
        let values = jobs
            .par_iter()
            .map(|&(bi, x)| self.conditional_outage(&self.branches[bi], x, threshold))
            .collect::<Result<Vec<_>>>()?;
        let w = self.grid.weights();
        let mut offset = 0;
        Ok(self
            .branches
            .iter()
            .map(|b| {
                let count = sample_count(b.association);
                let samples: Vec<(f64, f64)> = (offset..offset + count)
                    .map(|s| (jobs[s].1.ln(), values[s]))
                    .collect();
                offset += count;
                let served: f64 = (b.support.0..b.support.1)
                    .map(|i| w[i] * b.served[i] * interpolate(&samples, nodes[i].ln()))
                    .sum();
                (b.association - b.access).max(0.0) + served
            })
            .collect())
    }

    /// `E[I; associated]` per branch.
    fn branch_mean_interference(&self) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let w = self.grid.weights();
        self.branches
            .iter()
            .map(|b| {
                let links = &self.zones[b.zone].links;
                let rivals: Vec<(&GammaFit, f64)> = links
                    .iter()
                    .zip(&self.zoom_probability)
                    .enumerate()
                    .filter(|&(m, _)| m != b.serving)
                    .map(|(_, (l, &q))| (&l.fit, 1.0 + q * (self.zoom - 1.0)))
                    .collect();
                if !self.truncated {
                    return b.association * rivals.iter().map(|(f, c)| c * f.mean()).sum::<f64>();
                }
                (0..nodes.len())
                    .filter(|&i| b.associated[i] > 0.0)
                    .map(|i| {
                        let x = nodes[i];
                        let mean: f64 = rivals.iter().map(|(f, c)| c * f.truncated_mean(x)).sum();
                        w[i] * b.associated[i] * mean
                    })
                    .sum()
            })
            .collect()
    }

    /// `P(Q·I > S)` averaged over association, unserved users counting as in outage.
    pub fn outage(&self, threshold: f64) -> Result<f64> {
        let total: f64 = self.branches.iter().map(|b| b.association).sum();
        Ok((self.branch_outage(threshold)?.iter().sum::<f64>() / total).clamp(0.0, 1.0))
    }

    /// Metrics per active BS that the user of interest may associate to.
    pub fn evaluate(&self, noise: f64, threshold: f64) -> Result<Vec<FocusServing>> {
        let se = self.branch_spectral_efficiency(noise)?;
        let outage = self.branch_outage(threshold)?;
        let interference = self.branch_mean_interference();
        let mut out = Vec::new();
        for (k, &bs) in self.active.iter().enumerate() {
            let picked: Vec<usize> = (0..self.branches.len())
                .filter(|&b| self.branches[b].serving == k)
                .collect();
            if picked.is_empty() {
                continue;
            }
            let sum = |v: &dyn Fn(usize) -> f64| picked.iter().map(|&b| v(b)).sum::<f64>();
            let association = sum(&|b| self.branches[b].association);
            let per = |v: f64| v / association;
            out.push(FocusServing {
                bs,
                association,
                access: per(sum(&|b| self.branches[b].access)).clamp(0.0, 1.0),
                se_nats: per(sum(&|b| se[b])),
                outage: per(sum(&|b| outage[b])).clamp(0.0, 1.0),
                mean_interference: per(sum(&|b| interference[b])),
            });
        }
        // The zone weights sum to one up to grid truncation.
        let total: f64 = out.iter().map(|s| s.association).sum();
        for s in &mut out {
            s.association /= total;
        }
        Ok(out)
    }
}

/// Index range of a tabulated density holding all but `SUPPORT_TAIL` of its mass in each tail.
fn mass_support(grid: &LogGrid, density: &[f64]) -> (usize, usize) {
    let w = grid.weights();
    let total = grid.integrate(density);
    if !(total > 0.0) {
        return (0, 1);
    }
    let mut acc = 0.0;
    let mut first = None;
    let mut last = density.len();
    for (i, (d, wi)) in density.iter().zip(w).enumerate() {
        acc += d * wi;
        if first.is_none() && acc > SUPPORT_TAIL * total {
            first = Some(i);
        }
        if acc >= (1.0 - SUPPORT_TAIL) * total {
            last = i + 1;
            break;
        }
    }
    let first = first.unwrap_or(0);
    (first, last.max(first + 1))
}

/// Lighter branches get coarser conditional-outage sampling.
fn sample_count(association: f64) -> usize {
    if association > 1e-3 {
        OUTAGE_SAMPLES
    } else if association > 1e-5 {
        5
    } else {
        2
    }
}

/// Piecewise-linear interpolation on increasing abscissae, flat outside.
fn interpolate(samples: &[(f64, f64)], u: f64) -> f64 {
    let (first, last) = (samples[0], samples[samples.len() - 1]);
    if u <= first.0 {
        return first.1;
    }
    if u >= last.0 {
        return last.1;
    }
    let i = samples.partition_point(|s| s.0 <= u).max(1);
    let ((u0, v0), (u1, v1)) = (samples[i - 1], samples[i]);
    if u1 <= u0 {
        return v1;
    }
    v0 + (v1 - v0) * (u - u0) / (u1 - u0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_flat_outside() {
        let s = [(0.0, 1.0), (1.0, 3.0)];
        assert_eq!(interpolate(&s, -1.0), 1.0);
        assert_eq!(interpolate(&s, 2.0), 3.0);
        assert!((interpolate(&s, 0.25) - 1.5).abs() < 1e-15);
    }
}
