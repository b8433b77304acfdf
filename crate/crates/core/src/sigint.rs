//! Served signal power and cumulative interference of a sleeping-cell user.

use std::sync::Arc;

use log::warn;
use num_complex::Complex64;

use crate::association::{AccessModel, MmapAssociation};
use crate::channel::SignalStat;
use crate::error::{Error, Result};
use crate::mathkit::{integrate_log_domain, LogGrid, QuadratureSpec};
use crate::scenario::{GreedySignalLaw, MrspLaw, Scheduling, ZoomCounting};

/// Law of the served power given access, before the atom at zero is added.
#[derive(Debug, Clone)]
pub enum ServedLaw {
    /// `factor · X` for a link law `X`.
    Scaled { law: Arc<SignalStat>, factor: f64 },
    /// `factor · Y` with the density of `Y` tabulated on a grid and normalized to one.
    Tabulated {
        grid: Arc<LogGrid>,
        density: Vec<f64>,
        factor: f64,
    },
}

impl ServedLaw {
    fn tabulated(grid: Arc<LogGrid>, mut density: Vec<f64>, factor: f64) -> Result<Self> {
        let mass = grid.integrate(&density);
        if !(mass > 0.0) {
            return Err(Error::Domain(
                "served-power density has no mass on the grid".into(),
            ));
        }
        for d in &mut density {
            *d /= mass;
        }
        Ok(Self::Tabulated {
            grid,
            density,
            factor,
        })
    }

    fn cdf(&self, s: f64) -> f64 {
        match self {
            Self::Scaled { law, factor } => law.cdf(s / factor),
            Self::Tabulated {
                grid,
                density,
                factor,
            } => grid.cumulative_at(density, s / factor).clamp(0.0, 1.0),
        }
    }

    fn mgf_complex(&self, s: Complex64) -> Complex64 {
        match self {
            Self::Scaled { law, factor } => law.mgf_complex(s * *factor),
            Self::Tabulated {
                grid,
                density,
                factor,
            } => grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .zip(density)
                .map(|((&x, &w), &d)| (-s * (factor * x)).exp() * (w * d))
                .sum(),
        }
    }

    fn mgf(&self, t: f64) -> f64 {
        match self {
            Self::Scaled { law, factor } => law.mgf(t * factor),
            Self::Tabulated {
                grid,
                density,
                factor,
            } => grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .zip(density)
                .map(|((&x, &w), &d)| (-t * factor * x).exp() * w * d)
                .sum(),
        }
    }

    fn mean(&self) -> f64 {
        match self {
            Self::Scaled { law, factor } => factor * law.mean(),
            Self::Tabulated {
                grid,
                density,
                factor,
            } => {
                factor
                    * grid
                        .nodes()
                        .iter()
                        .zip(grid.weights())
                        .zip(density)
                        .map(|((x, w), d)| x * w * d)
                        .sum::<f64>()
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Self::Scaled { law, factor } => {
                let (a, b) = law.support_hint();
                (a * factor, b * factor)
            }
            Self::Tabulated { grid, factor, .. } => (grid.lower() * factor, grid.upper() * factor),
        }
    }
}

/// Received signal power `S`: zero unless the user wins the channel.
#[derive(Debug, Clone)]
pub struct SignalPowerStat {
    access: f64,
    law: Option<ServedLaw>,
}

impl SignalPowerStat {
    pub fn new(access: f64, law: ServedLaw) -> Result<Self> {
        if !(0.0..=1.0).contains(&access) {
            return Err(Error::Domain(format!(
                "access probability {access} outside [0, 1]"
            )));
        }
        Ok(Self {
            access,
            law: Some(law),
        })
    }

    /// `S ≡ 0`.
    pub fn silent() -> Self {
        Self {
            access: 0.0,
            law: None,
        }
    }

    pub fn access_probability(&self) -> f64 {
        self.access
    }

    pub fn served_law(&self) -> Option<&ServedLaw> {
        self.law.as_ref()
    }

    fn parts(&self) -> Option<(f64, &ServedLaw)> {
        self.law
            .as_ref()
            .filter(|_| self.access > 0.0)
            .map(|l| (self.access, l))
    }

    /// `(1 - p)·𝕌(s) + p·F(s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self.parts() {
            None => 1.0,
            Some((p, law)) => (1.0 - p) + p * law.cdf(s),
        }
    }

    pub fn mgf(&self, t: f64) -> f64 {
        match self.parts() {
            None => 1.0,
            Some((p, law)) => (1.0 - p) + p * law.mgf(t),
        }
    }

    pub fn mgf_complex(&self, s: Complex64) -> Complex64 {
        match self.parts() {
            None => Complex64::new(1.0, 0.0),
            Some((p, law)) => Complex64::new(1.0 - p, 0.0) + law.mgf_complex(s) * p,
        }
    }

    /// `∫_0^∞ t e^{-ts} F_S(s) ds`, the distribution-function route to the transform.
    pub fn mgf_via_cdf(&self, t: f64) -> Result<f64> {
        let Some((p, law)) = self.parts() else {
            return Ok(1.0);
        };
        if t == 0.0 {
            return Ok(1.0);
        }
        let (lo, hi) = law.support();
        let top = hi.max(60.0 / t);
        let spec = QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            ..Default::default()
        };
        let body = integrate_log_domain(|s| t * (-t * s).exp() * law.cdf(s), lo, top, &spec)?.value;
        Ok((1.0 - p) + p * (body + (-t * top).exp()))
    }

    pub fn mean(&self) -> f64 {
        match self.parts() {
            None => 0.0,
            Some((p, law)) => p * law.mean(),
        }
    }

    /// A range holding the served law, for integration bounds.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.parts().map(|(_, l)| l.support())
    }
}

/// One distribution-function factor `F(y)^power` with its density.
struct Factor<'a> {
    eval: Box<dyn Fn(f64) -> Result<(f64, f64)> + 'a>,
    power: u32,
    /// Argument scale: the factor is evaluated at `s / scale`.
    scale: f64,
}

/// Law of a maximum: CDF `Π F_q(s/c_q)^{n_q}`, tabulated with its density on `grid`.
fn max_law(grid: Arc<LogGrid>, factors: &[Factor<'_>]) -> Result<Vec<f64>> {
    grid.nodes()
        .iter()
        .map(|&s| {
            let vals: Vec<(f64, f64)> = factors
                .iter()
                .map(|f| (f.eval)(s / f.scale).map(|(c, d)| (c, d / f.scale)))
                .collect::<Result<_>>()?;
            let mut density = 0.0;
            for (q, f) in factors.iter().enumerate() {
                if f.power == 0 {
                    continue;
                }
                let (c, d) = vals[q];
                let mut term = f.power as f64 * d * c.powi(f.power as i32 - 1);
                for (r, g) in factors.iter().enumerate() {
                    if r != q {
                        term *= vals[r].0.powi(g.power as i32);
                    }
                }
                density += term;
            }
            Ok(density)
        })
        .collect()
}

/// Grid for laws that involve local power, whose heavy tail reaches far beyond the cross-cell range.
fn extended_grid(model: &AccessModel) -> Result<Arc<LogGrid>> {
    let grid = model.grid();
    let zoom = model.scenario().link.zoom;
    let (_, local_hi) = model.local_law().support_hint();
    let opts = &model.scenario().options;
    Ok(Arc::new(LogGrid::spanning(
        grid.lower() * zoom,
        (grid.upper() * zoom).max(local_hi),
        opts.grid_panel,
        opts.grid_points,
    )?))
}

fn local_factor(model: &AccessModel, power: u32) -> Factor<'_> {
    let local = Arc::clone(model.local_law());
    Factor {
        eval: Box::new(move |y| Ok((local.cdf(y), local.pdf(y)))),
        power,
        scale: 1.0,
    }
}

fn link_factor(model: &AccessModel, l: usize, k: usize, power: u32) -> Result<Factor<'_>> {
    let law = Arc::clone(model.law(l, k)?);
    Ok(Factor {
        eval: Box::new(move |y| Ok((law.cdf(y), law.pdf(y)))),
        power,
        scale: model.scenario().link.zoom,
    })
}

/// `S` for greedy scheduling under MMAP.
pub fn signal_stat_greedy_mmap(
    model: &AccessModel,
    j: usize,
    assoc: &MmapAssociation,
) -> Result<SignalPowerStat> {
    let zoom = model.scenario().link.zoom;
    let access = model.greedy_mmap_density(j, assoc)?;
    let p = access.probability;
    if p <= 0.0 {
        return Ok(SignalPowerStat::silent());
    }
    match model.scenario().options.greedy_signal {
        GreedySignalLaw::Winning => {
            let density = access.density.expect("greedy density");
            SignalPowerStat::new(
                p,
                ServedLaw::tabulated(Arc::clone(model.grid()), density, zoom)?,
            )
        }
        GreedySignalLaw::MaxOfCompetitors => {
            let k = assoc.chosen[&j];
            let loads = &model.scenario().loads;
            let mut factors = vec![local_factor(model, loads[k])];
            for &f in assoc.set(k) {
                factors.push(link_factor(model, f, k, loads[f])?);
            }
            let grid = extended_grid(model)?;
            let density = max_law(Arc::clone(&grid), &factors)?;
            SignalPowerStat::new(p, ServedLaw::tabulated(grid, density, 1.0)?)
        }
    }
}

/// `S` for round-robin scheduling under MMAP: `p·αX_{jk*}` plus the atom.
pub fn signal_stat_rr_mmap(
    model: &AccessModel,
    j: usize,
    assoc: &MmapAssociation,
) -> Result<SignalPowerStat> {
    let k = *assoc
        .chosen
        .get(&j)
        .ok_or_else(|| Error::Index(format!("cell {j} is not sleeping")))?;
    let p = model.exact_access_rr_mmap(j, assoc)?;
    SignalPowerStat::new(
        p,
        ServedLaw::Scaled {
            law: Arc::clone(model.law(j, k)?),
            factor: model.scenario().link.zoom,
        },
    )
}

/// `S` for greedy scheduling of an MRSP user of `j` associated to `k`.
pub fn signal_stat_greedy_mrsp(model: &AccessModel, j: usize, k: usize) -> Result<SignalPowerStat> {
    let zoom = model.scenario().link.zoom;
    let access = model.greedy_mrsp_density(j, k)?;
    let p = access.probability;
    if p <= 0.0 {
        return Ok(SignalPowerStat::silent());
    }
    match model.scenario().options.greedy_signal {
        GreedySignalLaw::Winning => {
            let density = access.density.expect("greedy density");
            SignalPowerStat::new(
                p,
                ServedLaw::tabulated(Arc::clone(model.grid()), density, zoom)?,
            )
        }
        GreedySignalLaw::MaxOfCompetitors => {
            let loads = &model.scenario().loads;
            let mut factors = vec![local_factor(model, loads[k])];
            for &a in model.active() {
                factors.push(link_factor(model, j, a, 1)?);
            }
            for (l, (count, prob)) in model.competitor_cells(j, k)? {
                factors.push(Factor {
                    eval: Box::new(move |y| {
                        let (c, d) = model.competitor_factor_at(l, k, y)?;
                        Ok((1.0 - prob + prob * c, prob * d))
                    }),
                    power: count,
                    scale: zoom,
                });
            }
            let grid = extended_grid(model)?;
            let density = max_law(Arc::clone(&grid), &factors)?;
            SignalPowerStat::new(p, ServedLaw::tabulated(grid, density, 1.0)?)
        }
    }
}

/// `S` for round-robin scheduling of an MRSP user of `j` associated to `k`.
///
/// Under the marginal law the served power is the strongest active link and the access
/// probability is averaged over the association; otherwise both are conditioned on `k`.
pub fn signal_stat_rr_mrsp(model: &AccessModel, j: usize, k: usize) -> Result<SignalPowerStat> {
    let zoom = model.scenario().link.zoom;
    match model.scenario().options.mrsp_law {
        MrspLaw::Conditioned => {
            let p = model.exact_access_rr_mrsp(j, k)?;
            let density = model.winning_density(j, k)?.to_vec();
            SignalPowerStat::new(
                p,
                ServedLaw::tabulated(Arc::clone(model.grid()), density, zoom)?,
            )
        }
        MrspLaw::Marginal => {
            let mut p = 0.0;
            let mut density = vec![0.0; model.grid().len()];
            for &a in model.active() {
                p += model.mrsp_association_prob(j, a)? * model.exact_access_rr_mrsp(j, a)?;
                for (d, w) in density.iter_mut().zip(model.winning_density(j, a)?) {
                    *d += w;
                }
            }
            SignalPowerStat::new(
                p.clamp(0.0, 1.0),
                ServedLaw::tabulated(Arc::clone(model.grid()), density, zoom)?,
            )
        }
    }
}

/// One interfering BS: its link law to the user and its zoom probability.
#[derive(Debug, Clone)]
pub struct Interferer {
    pub bs: usize,
    pub law: Arc<SignalStat>,
    pub zoom_probability: f64,
}

/// Cumulative interference from the active BSs other than the serving one.
#[derive(Debug, Clone)]
pub struct InterferenceStat {
    interferers: Vec<Interferer>,
    zoom: f64,
}

impl InterferenceStat {
    pub fn new(interferers: Vec<Interferer>, zoom: f64) -> Self {
        Self { interferers, zoom }
    }

    pub fn interferers(&self) -> &[Interferer] {
        &self.interferers
    }

    pub fn zoom_probabilities(&self) -> Vec<f64> {
        self.interferers
            .iter()
            .map(|i| i.zoom_probability)
            .collect()
    }

    /// `Π_k [(1 - p_k) M_k(t) + p_k M_k(αt)]`.
    pub fn mgf(&self, t: f64) -> f64 {
        self.interferers
            .iter()
            .map(|i| {
                let p = i.zoom_probability;
                let base = i.law.mgf(t);
                if p > 0.0 {
                    (1.0 - p) * base + p * i.law.mgf(self.zoom * t)
                } else {
                    base
                }
            })
            .product()
    }

    pub fn mgf_complex(&self, s: Complex64) -> Complex64 {
        self.interferers
            .iter()
            .map(|i| {
                let p = i.zoom_probability;
                let base = i.law.mgf_complex(s);
                if p > 0.0 {
                    base * (1.0 - p) + i.law.mgf_complex(s * self.zoom) * p
                } else {
                    base
                }
            })
            .product()
    }

    pub fn mean(&self) -> f64 {
        self.interferers
            .iter()
            .map(|i| i.law.mean() * (1.0 + i.zoom_probability * (self.zoom - 1.0)))
            .sum()
    }

    /// Every zoom combination `z` with its probability.
    pub fn combinations(&self) -> Vec<(Vec<bool>, f64)> {
        let n = self.interferers.len();
        (0..1usize << n)
            .map(|mask| {
                let z: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                let p = z
                    .iter()
                    .zip(&self.interferers)
                    .map(|(&on, i)| {
                        if on {
                            i.zoom_probability
                        } else {
                            1.0 - i.zoom_probability
                        }
                    })
                    .product();
                (z, p)
            })
            .collect()
    }

    /// The transform as an explicit mixture over zoom combinations.
    pub fn mgf_enumerated(&self, t: f64) -> f64 {
        self.combinations()
            .iter()
            .map(|(z, p)| {
                p * z
                    .iter()
                    .zip(&self.interferers)
                    .map(|(&on, i)| i.law.mgf(if on { self.zoom * t } else { t }))
                    .product::<f64>()
            })
            .sum()
    }

    /// A scale for the bulk of the interference, for integration bounds.
    pub fn scale(&self) -> f64 {
        self.mean()
    }
}

fn clamp_probability(v: f64, what: &str) -> f64 {
    if v > 1.0 + 1e-9 {
        warn!("{what} summed to {v}, clamped to 1");
    }
    v.clamp(0.0, 1.0)
}

/// Probability that BS `k` zooms, from the sleeping-cell users other than the one of interest in `focus`.
pub fn zoom_probability_mmap(
    model: &AccessModel,
    assoc: &MmapAssociation,
    k: usize,
) -> Result<f64> {
    let loads = &model.scenario().loads;
    let counting = model.scenario().options.zoom_counting;
    let mut total = 0.0;
    for &f in assoc.set(k) {
        let p = match assoc.scheduling {
            Scheduling::Greedy => model.exact_access_greedy_mmap(f, assoc)?,
            Scheduling::RoundRobin => model.exact_access_rr_mmap(f, assoc)?,
        };
        let users = match counting {
            ZoomCounting::PerCell => 1.0,
            ZoomCounting::PerUser => loads[f] as f64,
        };
        total += users * p;
    }
    Ok(clamp_probability(
        total,
        &format!("zoom probability of BS {k}"),
    ))
}

/// MRSP zoom probability of `k`: a sleeping-cell user must both pick `k` and win the channel.
pub fn zoom_probability_mrsp(
    model: &AccessModel,
    focus: usize,
    k: usize,
    scheduling: Scheduling,
) -> Result<f64> {
    let loads = &model.scenario().loads;
    let counting = model.scenario().options.zoom_counting;
    let mut total = 0.0;
    for l in model.scenario().sleeping() {
        let count = loads[l] - u32::from(l == focus);
        if count == 0 {
            continue;
        }
        let a = model.mrsp_association_prob(l, k)?;
        let p = model.mrsp_access_excluding(l, k, focus, scheduling)?;
        let users = match counting {
            ZoomCounting::PerCell => 1.0,
            ZoomCounting::PerUser => count as f64,
        };
        total += users * a * p;
    }
    Ok(clamp_probability(
        total,
        &format!("zoom probability of BS {k}"),
    ))
}

/// Interference at a user of `j` served by `serving`, given zoom probabilities per active BS.
pub fn interference_stat(
    model: &AccessModel,
    j: usize,
    serving: usize,
    zoom_probability: impl Fn(usize) -> Result<f64>,
) -> Result<InterferenceStat> {
    let mut interferers = Vec::new();
    for &k in model.active().iter().filter(|&&k| k != serving) {
        interferers.push(Interferer {
            bs: k,
            law: Arc::clone(model.law(j, k)?),
            zoom_probability: zoom_probability(k)?,
        });
    }
    Ok(InterferenceStat::new(
        interferers,
        model.scenario().link.zoom,
    ))
}

/// Interference at a user of `j` under MMAP association.
pub fn interference_mgf_mmap(
    model: &AccessModel,
    j: usize,
    assoc: &MmapAssociation,
) -> Result<InterferenceStat> {
    let serving = assoc.chosen[&j];
    interference_stat(model, j, serving, |k| {
        zoom_probability_mmap(model, assoc, k)
    })
}

/// Interference at a user of `j` served by `serving` under MRSP association.
pub fn interference_mgf_mrsp(
    model: &AccessModel,
    j: usize,
    serving: usize,
    scheduling: Scheduling,
) -> Result<InterferenceStat> {
    interference_stat(model, j, serving, |k| {
        zoom_probability_mrsp(model, j, k, scheduling)
    })
}
