//! Channel-access probabilities and the MMAP / MRSP association rules.

mod enumeration;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

pub use enumeration::{
    product_bernoulli_states, Competitor, StateEnumeration, UserState, MAX_EXACT_COMPETITORS,
};

use crate::channel::{
    cross_signal_stat_approx, cross_signal_stat_exact, local_signal_stat, SignalStat,
};
use crate::error::{Error, Result};
use crate::mathkit::LogGrid;
use crate::scenario::{
    Association, CrossLaw, EnumerationPolicy, MrspLaw, Scenario, Scheduling, Scheme,
};

/// Relative tolerance under which two scores count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// `1/(U_k + 1)`.
pub fn best_case_access_rr(local_users: u32) -> f64 {
    1.0 / (local_users as f64 + 1.0)
}

/// `1/(U_k + Σ_ℱ U_f)`: round-robin share once every associated sleeping user is counted.
pub fn rr_share(local_users: u32, sleeping_users: u32) -> f64 {
    1.0 / (local_users as f64 + sleeping_users as f64)
}

/// Tabulated law of one link on the shared grid.
#[derive(Debug, Clone)]
struct LinkTable {
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

/// Per-link statistics of one MRSP-associated sleeping cell.
#[derive(Debug, Clone, Default)]
struct SleeperTables {
    /// `f_lk Π_{m≠k} F_lm` on the grid, per active BS.
    winning: BTreeMap<usize, Vec<f64>>,
    /// Cumulative of `winning`: `Pr(X_lk ≤ x, l picks k)`.
    held: BTreeMap<usize, Vec<f64>>,
    association: BTreeMap<usize, f64>,
    best_greedy: BTreeMap<usize, f64>,
}

/// MMAP outcome: chosen BS per sleeping cell and the association sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MmapAssociation {
    pub scheduling: Scheduling,
    pub chosen: BTreeMap<usize, usize>,
    /// Populated sleeping cells attached to each active BS.
    pub sets: BTreeMap<usize, Vec<usize>>,
}

impl MmapAssociation {
    pub fn set(&self, k: usize) -> &[usize] {
        self.sets.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Access probability together with the served-power density that produced it.
#[derive(Debug, Clone)]
pub struct AccessDensity {
    pub probability: f64,
    /// `f(xᵢ)·Pr(win | x = xᵢ)` on the grid, or `None` for round-robin.
    pub density: Option<Vec<f64>>,
}

/// Every link law of a scenario tabulated on one grid.
#[derive(Debug, Clone)]
pub struct AccessModel {
    scenario: Scenario,
    grid: Arc<LogGrid>,
    laws: Vec<Arc<SignalStat>>,
    law_distance: Vec<f64>,
    tables: Vec<LinkTable>,
    /// `link[l][k]`: law index for sleeping `l` and active `k`.
    link: Vec<Vec<Option<usize>>>,
    local: Arc<SignalStat>,
    /// Local CDF at the zoomed abscissae `αxᵢ`.
    local_zoom_cdf: Vec<f64>,
    active: Vec<usize>,
    sleepers: Vec<SleeperTables>,
}

fn law_index(distances: &mut Vec<f64>, d: f64) -> usize {
    match distances.iter().position(|&e| (e - d).abs() <= 1e-9 * d) {
        Some(i) => i,
        None => {
            distances.push(d);
            distances.len() - 1
        }
    }
}

impl AccessModel {
    /// Builds laws for every (sleeping, active) link and tabulates them.
    ///
    /// Cross-cell laws are laid out relative to the direction of the serving BS, so a law
    /// depends on the link only through its inter-BS distance.
    pub fn build(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let scn = scenario.clone();
        let active = scn.active();
        if active.is_empty() {
            return Err(Error::AllSleeping);
        }
        let sleeping = scn.sleeping();
        let n = scn.layout.len();
        let radius = scn.radius();
        let base_link = scn.link.with_zoom(1.0)?;

        let mut law_distance = Vec::new();
        let mut link = vec![vec![None; n]; n];
        for &l in &sleeping {
            for &k in &active {
                let d = scn.layout.distance(l, k)?;
                link[l][k] = Some(law_index(&mut law_distance, d));
            }
        }
        let laws: Vec<Arc<SignalStat>> = law_distance
            .par_iter()
            .map(|&d| {
                let stat = match scn.options.cross_law {
                    CrossLaw::Mixture => cross_signal_stat_approx(
                        scn.cross_fading,
                        base_link,
                        d,
                        0.0,
                        radius,
                        &scn.discretization,
                    ),
                    CrossLaw::Series(series) => {
                        cross_signal_stat_exact(scn.cross_fading, base_link, d, radius, series)
                    }
                };
                stat.map(Arc::new)
            })
            .collect::<Result<_>>()?;

        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for law in &laws {
            let (a, b) = law.support_hint();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if laws.is_empty() {
            // No sleeping cell: any positive range will do.
            let (a, b) = local_signal_stat(scn.local_fading, base_link, radius)?.support_hint();
            lo = a.max(b * 1e-12);
            hi = b;
        }
        let grid = Arc::new(LogGrid::spanning(
            lo,
            hi,
            scn.options.grid_panel,
            scn.options.grid_points,
        )?);

        let tables: Vec<LinkTable> = laws
            .par_iter()
            .map(|law| LinkTable {
                cdf: grid.nodes().iter().map(|&x| law.cdf(x)).collect(),
                pdf: grid.nodes().iter().map(|&x| law.pdf(x)).collect(),
            })
            .collect();

        let local = Arc::new(local_signal_stat(scn.local_fading, base_link, radius)?);
        let zoom = scn.link.zoom;
        let local_zoom_cdf = grid
            .nodes()
            .par_iter()
            .map(|&x| local.cdf(zoom * x))
            .collect();

        let mut model = Self {
            scenario: scn,
            grid,
            laws,
            law_distance,
            tables,
            link,
            local,
            local_zoom_cdf,
            active,
            sleepers: vec![SleeperTables::default(); n],
        };
        let built: Vec<(usize, SleeperTables)> = sleeping
            .par_iter()
            .map(|&l| (l, model.sleeper_tables(l)))
            .collect();
        for (l, t) in built {
            model.sleepers[l] = t;
        }
        Ok(model)
    }

    fn sleeper_tables(&self, l: usize) -> SleeperTables {
        let mut out = SleeperTables::default();
        let m = self.grid.len();
        for &k in &self.active {
            let own = self.table(l, k).expect("sleeping-active link");
            let mut winning = own.pdf.clone();
            for &other in self.active.iter().filter(|&&o| o != k) {
                let t = self.table(l, other).expect("sleeping-active link");
                for i in 0..m {
                    winning[i] *= t.cdf[i];
                }
            }
            out.association.insert(k, self.grid.integrate(&winning));
            let u = self.scenario.loads[k] as i32;
            let greedy: Vec<f64> = (0..m)
                .map(|i| own.pdf[i] * self.local_zoom_cdf[i].powi(u))
                .collect();
            out.best_greedy.insert(k, self.grid.integrate(&greedy));
            if self.scenario.options.mrsp_law == MrspLaw::Conditioned {
                out.held.insert(k, self.grid.cumulative(&winning));
            }
            out.winning.insert(k, winning);
        }
        out
    }

    fn table(&self, l: usize, k: usize) -> Result<&LinkTable> {
        self.link_index(l, k).map(|i| &self.tables[i])
    }

    fn link_index(&self, l: usize, k: usize) -> Result<usize> {
        self.link
            .get(l)
            .and_then(|row| row.get(k))
            .copied()
            .flatten()
            .ok_or_else(|| Error::Index(format!("no link from sleeping cell {l} to active BS {k}")))
    }

    fn sleeper(&self, l: usize) -> Result<&SleeperTables> {
        if !self.scenario.pattern.is_sleeping(l) {
            return Err(Error::Index(format!("cell {l} is not sleeping")));
        }
        Ok(&self.sleepers[l])
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn grid(&self) -> &Arc<LogGrid> {
        &self.grid
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Zoom-free law of `X_lk`.
    pub fn law(&self, l: usize, k: usize) -> Result<&Arc<SignalStat>> {
        self.link_index(l, k).map(|i| &self.laws[i])
    }

    /// Distinct cross-cell laws with their inter-BS distances.
    pub fn distinct_laws(&self) -> impl Iterator<Item = (f64, &Arc<SignalStat>)> {
        self.law_distance.iter().copied().zip(&self.laws)
    }

    /// Law of the local received power `γ`.
    pub fn local_law(&self) -> &Arc<SignalStat> {
        &self.local
    }

    /// `X_lk` CDF on the grid.
    pub fn link_cdf(&self, l: usize, k: usize) -> Result<&[f64]> {
        self.table(l, k).map(|t| t.cdf.as_slice())
    }

    /// `X_lk` density on the grid.
    pub fn link_pdf(&self, l: usize, k: usize) -> Result<&[f64]> {
        self.table(l, k).map(|t| t.pdf.as_slice())
    }

    /// Local CDF evaluated at `αxᵢ`.
    pub fn local_zoom_cdf(&self) -> &[f64] {
        &self.local_zoom_cdf
    }

    fn check_active(&self, k: usize) -> Result<()> {
        if k >= self.scenario.layout.len() || self.scenario.pattern.is_sleeping(k) {
            return Err(Error::Index(format!("cell {k} is not an active BS")));
        }
        Ok(())
    }

    /// `∫ F_γ(αx)^{U_k} f_{X_jk}(x) dx`: access against the local users of `k` alone.
    pub fn best_case_access_greedy(&self, j: usize, k: usize) -> Result<f64> {
        self.check_active(k)?;
        self.sleeper(j)?
            .best_greedy
            .get(&k)
            .copied()
            .ok_or_else(|| Error::Index(format!("no link {j}->{k}")))
    }

    /// Scheme-matching best-case access.
    pub fn best_case_access(&self, j: usize, k: usize, scheduling: Scheduling) -> Result<f64> {
        match scheduling {
            Scheduling::Greedy => self.best_case_access_greedy(j, k),
            Scheduling::RoundRobin => {
                self.check_active(k)?;
                self.sleeper(j)?;
                Ok(best_case_access_rr(self.scenario.loads[k]))
            }
        }
    }

    /// `∫ Π_{l≠k} F_{X_jl}(x) f_{X_jk}(x) dx`: probability that `k` is the strongest active BS.
    pub fn mrsp_association_prob(&self, j: usize, k: usize) -> Result<f64> {
        self.check_active(k)?;
        self.sleeper(j)?
            .association
            .get(&k)
            .copied()
            .ok_or_else(|| Error::Index(format!("no link {j}->{k}")))
    }

    /// The MRSP association row of `j` over the active BSs, in index order.
    pub fn mrsp_row(&self, j: usize) -> Result<Vec<(usize, f64)>> {
        self.active
            .iter()
            .map(|&k| Ok((k, self.mrsp_association_prob(j, k)?)))
            .collect()
    }

    /// Best-case-access maximizer per sleeping cell; ties go to the nearest, then lowest-index BS.
    pub fn mmap_associate(&self, scheduling: Scheduling) -> Result<MmapAssociation> {
        let mut chosen = BTreeMap::new();
        let mut sets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for l in self.scenario.sleeping() {
            let mut scored = Vec::with_capacity(self.active.len());
            for &k in &self.active {
                scored.push((
                    k,
                    self.best_case_access(l, k, scheduling)?,
                    self.scenario.layout.distance(l, k)?,
                ));
            }
            let k = argmax_with_ties(&scored);
            chosen.insert(l, k);
            if self.scenario.loads[l] > 0 {
                sets.entry(k).or_default().push(l);
            }
        }
        Ok(MmapAssociation {
            scheduling,
            chosen,
            sets,
        })
    }

    fn mmap_member(&self, j: usize, assoc: &MmapAssociation) -> Result<usize> {
        let k = *assoc
            .chosen
            .get(&j)
            .ok_or_else(|| Error::Index(format!("cell {j} is not sleeping")))?;
        if self.scenario.loads[j] == 0 {
            return Err(Error::Index(format!("sleeping cell {j} has no users")));
        }
        Ok(k)
    }

    /// Probability on the grid that a user of `j` with link `x` to its BS `k*` gets the channel.
    pub fn mmap_access_factor(&self, j: usize, assoc: &MmapAssociation) -> Result<Vec<f64>> {
        let k = self.mmap_member(j, assoc)?;
        if assoc.scheduling == Scheduling::RoundRobin {
            return Ok(vec![self.exact_access_rr_mmap(j, assoc)?; self.grid.len()]);
        }
        let m = self.grid.len();
        let mut factor: Vec<f64> = self
            .local_zoom_cdf
            .iter()
            .map(|c| c.powi(self.scenario.loads[k] as i32))
            .collect();
        for &f in assoc.set(k) {
            let count = self.scenario.loads[f] - u32::from(f == j);
            if count == 0 {
                continue;
            }
            let t = self.table(f, k)?;
            for i in 0..m {
                factor[i] *= t.cdf[i].powi(count as i32);
            }
        }
        Ok(factor)
    }

    /// Greedy MMAP access of a user of cell `j` at its BS `k*`, with its served-power density.
    pub fn greedy_mmap_density(&self, j: usize, assoc: &MmapAssociation) -> Result<AccessDensity> {
        let k = self.mmap_member(j, assoc)?;
        let greedy = MmapAssociation {
            scheduling: Scheduling::Greedy,
            ..assoc.clone()
        };
        let own = self.table(j, k)?;
        let density: Vec<f64> = self
            .mmap_access_factor(j, &greedy)?
            .iter()
            .zip(&own.pdf)
            .map(|(a, p)| a * p)
            .collect();
        Ok(AccessDensity {
            probability: self.grid.integrate(&density).clamp(0.0, 1.0),
            density: Some(density),
        })
    }

    /// Greedy MMAP access of a user of `j` at `k*`, competing with every other user of `ℱ_{k*}`.
    pub fn exact_access_greedy_mmap(&self, j: usize, assoc: &MmapAssociation) -> Result<f64> {
        Ok(self.greedy_mmap_density(j, assoc)?.probability)
    }

    /// `1/(U_{k*} + Σ_{f∈ℱ_{k*}} U_f)`.
    pub fn exact_access_rr_mmap(&self, j: usize, assoc: &MmapAssociation) -> Result<f64> {
        let k = self.mmap_member(j, assoc)?;
        let sleeping: u32 = assoc.set(k).iter().map(|&f| self.scenario.loads[f]).sum();
        Ok(rr_share(self.scenario.loads[k], sleeping))
    }

    /// Competitors faced at `k` by a user of `j`, one entry per other sleeping-cell user.
    ///
    /// `exclude` removes one further user from the listed cell (the user of interest when
    /// the access of somebody else is computed).
    fn mrsp_competitors(
        &self,
        j: usize,
        k: usize,
        exclude: Option<usize>,
    ) -> Result<Vec<Competitor>> {
        let mut out = Vec::new();
        for l in self.scenario.sleeping() {
            let mut count = self.scenario.loads[l];
            for drop in [Some(j), exclude] {
                if drop == Some(l) {
                    count = count.saturating_sub(1);
                }
            }
            let prob = self.mrsp_association_prob(l, k)?;
            out.extend((0..count).map(|_| Competitor { cell: l, prob }));
        }
        Ok(out)
    }

    /// All state vectors `b` of the sleeping-cell users other than the one of interest in `j`.
    pub fn enumerate_user_states(&self, j: usize, k: usize) -> Result<StateEnumeration> {
        self.check_active(k)?;
        self.sleeper(j)?;
        let competitors = self.mrsp_competitors(j, k, None)?;
        product_bernoulli_states(&competitors, self.scenario.enumeration)
    }

    /// Factor by which one competitor from cell `l` scales the win probability at `xᵢ`.
    fn competitor_factor(&self, l: usize, k: usize) -> Result<Vec<f64>> {
        let p = self.mrsp_association_prob(l, k)?;
        Ok(match self.scenario.options.mrsp_law {
            MrspLaw::Marginal => self.table(l, k)?.cdf.clone(),
            MrspLaw::Conditioned => {
                let held = &self.sleeper(l)?.held[&k];
                if p > 1e-300 {
                    held.iter().map(|h| (h / p).clamp(0.0, 1.0)).collect()
                } else {
                    vec![1.0; held.len()]
                }
            }
        })
    }

    /// Competitor factor `φ_lk(y)` and its derivative at an arbitrary abscissa.
    pub(crate) fn competitor_factor_at(&self, l: usize, k: usize, y: f64) -> Result<(f64, f64)> {
        let law = self.law(l, k)?;
        match self.scenario.options.mrsp_law {
            MrspLaw::Marginal => Ok((law.cdf(y), law.pdf(y))),
            MrspLaw::Conditioned => {
                let p = self.mrsp_association_prob(l, k)?;
                if !(p > 1e-300) {
                    return Ok((1.0, 0.0));
                }
                let mut rate = law.pdf(y);
                for &m in self.active.iter().filter(|&&m| m != k) {
                    rate *= self.law(l, m)?.cdf(y);
                }
                let held = self.grid.cumulative_at(&self.sleeper(l)?.winning[&k], y);
                Ok(((held / p).clamp(0.0, 1.0), rate / p))
            }
        }
    }

    /// Per-cell competitor counts and association probabilities at `k` for a user of `j`.
    pub(crate) fn competitor_cells(
        &self,
        j: usize,
        k: usize,
    ) -> Result<BTreeMap<usize, (u32, f64)>> {
        let mut per_cell = BTreeMap::new();
        for c in self.mrsp_competitors(j, k, None)? {
            per_cell.entry(c.cell).or_insert((0, c.prob)).0 += 1;
        }
        Ok(per_cell)
    }

    /// `f_jk Π_{m≠k} F_jm` on the grid: density of `X_jk` on the event that `k` is strongest.
    pub fn winning_density(&self, j: usize, k: usize) -> Result<&[f64]> {
        self.check_active(k)?;
        Ok(self.sleeper(j)?.winning[&k].as_slice())
    }

    /// Conditional served-power density of `j` at `k` before any competition.
    fn mrsp_signal_density(&self, j: usize, k: usize) -> Result<Vec<f64>> {
        Ok(match self.scenario.options.mrsp_law {
            MrspLaw::Marginal => self.table(j, k)?.pdf.clone(),
            MrspLaw::Conditioned => {
                let p = self.mrsp_association_prob(j, k)?;
                let w = &self.sleeper(j)?.winning[&k];
                if p > 1e-300 {
                    w.iter().map(|v| v / p).collect()
                } else {
                    self.table(j, k)?.pdf.clone()
                }
            }
        })
    }

    /// `E_b[Π_l φ_l(xᵢ)^{b_l}]`: mean win factor against the other sleeping-cell users.
    fn competition_factor(&self, k: usize, competitors: &[Competitor]) -> Result<Vec<f64>> {
        let m = self.grid.len();
        let mut per_cell: BTreeMap<usize, (u32, f64)> = BTreeMap::new();
        for c in competitors {
            per_cell.entry(c.cell).or_insert((0, c.prob)).0 += 1;
        }
        let factors: BTreeMap<usize, Vec<f64>> = per_cell
            .keys()
            .map(|&l| Ok((l, self.competitor_factor(l, k)?)))
            .collect::<Result<_>>()?;
        match self.scenario.enumeration {
            EnumerationPolicy::Exact => {
                // Independent Bernoulli states: the sum over b factorizes exactly.
                let mut out = vec![1.0; m];
                for (l, &(count, p)) in &per_cell {
                    let phi = &factors[l];
                    for i in 0..m {
                        out[i] *= (1.0 - p + p * phi[i]).powi(count as i32);
                    }
                }
                Ok(out)
            }
            EnumerationPolicy::Sampled { .. } => {
                let states = product_bernoulli_states(competitors, self.scenario.enumeration)?;
                let mut out = vec![0.0; m];
                for (sig, prob) in states.signatures() {
                    for i in 0..m {
                        out[i] += prob
                            * sig
                                .iter()
                                .map(|(l, &c)| factors[l][i].powi(c as i32))
                                .product::<f64>();
                    }
                }
                Ok(out)
            }
        }
    }

    fn greedy_mrsp_inner(
        &self,
        j: usize,
        k: usize,
        exclude: Option<usize>,
    ) -> Result<AccessDensity> {
        self.greedy_mrsp_with(j, k, exclude, self.mrsp_signal_density(j, k)?)
    }

    fn greedy_mrsp_with(
        &self,
        j: usize,
        k: usize,
        exclude: Option<usize>,
        signal: Vec<f64>,
    ) -> Result<AccessDensity> {
        let competitors = self.mrsp_competitors(j, k, exclude)?;
        let shared = self.competition_factor(k, &competitors)?;
        let u = self.scenario.loads[k] as i32;
        let density: Vec<f64> = (0..self.grid.len())
            .map(|i| signal[i] * self.local_zoom_cdf[i].powi(u) * shared[i])
            .collect();
        Ok(AccessDensity {
            probability: self.grid.integrate(&density).clamp(0.0, 1.0),
            density: Some(density),
        })
    }

    fn rr_mrsp_inner(&self, j: usize, k: usize, exclude: Option<usize>) -> Result<f64> {
        let competitors = self.mrsp_competitors(j, k, exclude)?;
        let base = self.scenario.loads[k] as f64 + 1.0;
        match self.scenario.enumeration {
            EnumerationPolicy::Exact => {
                // Poisson-binomial law of the number of competitors attached to k.
                let mut count = vec![1.0];
                for c in &competitors {
                    let mut next = vec![0.0; count.len() + 1];
                    for (n, &w) in count.iter().enumerate() {
                        next[n] += w * (1.0 - c.prob);
                        next[n + 1] += w * c.prob;
                    }
                    count = next;
                }
                Ok(count
                    .iter()
                    .enumerate()
                    .map(|(n, w)| w / (base + n as f64))
                    .sum())
            }
            EnumerationPolicy::Sampled { .. } => {
                let states = product_bernoulli_states(&competitors, self.scenario.enumeration)?;
                Ok(states
                    .states
                    .iter()
                    .map(|s| s.prob / (base + s.bits.iter().filter(|&&b| b).count() as f64))
                    .sum())
            }
        }
    }

    /// Greedy access of a user of `j` at `k`, given that it associated to `k` under MRSP.
    pub fn exact_access_greedy_mrsp(&self, j: usize, k: usize) -> Result<f64> {
        self.check_active(k)?;
        Ok(self.greedy_mrsp_inner(j, k, None)?.probability)
    }

    pub fn greedy_mrsp_density(&self, j: usize, k: usize) -> Result<AccessDensity> {
        self.check_active(k)?;
        self.greedy_mrsp_inner(j, k, None)
    }

    /// Probability on the grid that a user of `j` associated to `k` with serving link `x` gets the channel.
    pub fn mrsp_access_factor(
        &self,
        j: usize,
        k: usize,
        scheduling: Scheduling,
    ) -> Result<Vec<f64>> {
        self.check_active(k)?;
        self.sleeper(j)?;
        match scheduling {
            Scheduling::Greedy => Ok(self
                .greedy_mrsp_with(j, k, None, vec![1.0; self.grid.len()])?
                .density
                .expect("greedy density")),
            Scheduling::RoundRobin => Ok(vec![self.rr_mrsp_inner(j, k, None)?; self.grid.len()]),
        }
    }

    /// Round-robin share of a user of `j` at `k`, mixed over the competitor states.
    pub fn exact_access_rr_mrsp(&self, j: usize, k: usize) -> Result<f64> {
        self.check_active(k)?;
        self.sleeper(j)?;
        self.rr_mrsp_inner(j, k, None)
    }

    /// Access of a user of `l` at `k` with the user of interest in `focus` removed from the contest.
    pub fn mrsp_access_excluding(
        &self,
        l: usize,
        k: usize,
        focus: usize,
        scheduling: Scheduling,
    ) -> Result<f64> {
        self.check_active(k)?;
        match scheduling {
            Scheduling::Greedy => Ok(self.greedy_mrsp_inner(l, k, Some(focus))?.probability),
            Scheduling::RoundRobin => self.rr_mrsp_inner(l, k, Some(focus)),
        }
    }

    /// Access probabilities, association and choices for a scheme, over all populated sleeping cells.
    pub fn access_report(&self, scheme: Scheme) -> Result<AccessReport> {
        let cells = self.scenario.populated_sleeping();
        let mut best_case = BTreeMap::new();
        for &j in &cells {
            for &k in &self.active {
                best_case.insert((j, k), self.best_case_access(j, k, scheme.scheduling)?);
            }
        }
        let mut report = AccessReport {
            scheme,
            best_case,
            association: BTreeMap::new(),
            exact_given: BTreeMap::new(),
            exact: BTreeMap::new(),
            chosen: BTreeMap::new(),
            sets: BTreeMap::new(),
        };
        match scheme.association {
            Association::Mmap => {
                let assoc = self.mmap_associate(scheme.scheduling)?;
                for &j in &cells {
                    let k = assoc.chosen[&j];
                    for &a in &self.active {
                        report
                            .association
                            .insert((j, a), if a == k { 1.0 } else { 0.0 });
                    }
                    let p = match scheme.scheduling {
                        Scheduling::Greedy => self.exact_access_greedy_mmap(j, &assoc)?,
                        Scheduling::RoundRobin => self.exact_access_rr_mmap(j, &assoc)?,
                    };
                    report.exact_given.insert((j, k), p);
                    report.exact.insert(j, p);
                    report.chosen.insert(j, k);
                }
                report.sets = assoc.sets;
            }
            Association::Mrsp => {
                let pairs: Vec<(usize, usize)> = cells
                    .iter()
                    .flat_map(|&j| self.active.iter().map(move |&k| (j, k)))
                    .collect();
                let values: Vec<f64> = pairs
                    .par_iter()
                    .map(|&(j, k)| match scheme.scheduling {
                        Scheduling::Greedy => self.exact_access_greedy_mrsp(j, k),
                        Scheduling::RoundRobin => self.exact_access_rr_mrsp(j, k),
                    })
                    .collect::<Result<_>>()?;
                for (&(j, k), &p) in pairs.iter().zip(&values) {
                    let a = self.mrsp_association_prob(j, k)?;
                    report.association.insert((j, k), a);
                    report.exact_given.insert((j, k), p);
                    *report.exact.entry(j).or_insert(0.0) += a * p;
                }
            }
            Association::Hybrid => {
                return Err(Error::Unsupported(
                    "hybrid association has no analytic access law; use the simulator".into(),
                ))
            }
        }
        Ok(report)
    }
}

/// Index of the largest score; near-ties resolved by smallest distance, then lowest index.
fn argmax_with_ties(scored: &[(usize, f64, f64)]) -> usize {
    let mut best = scored[0];
    for &cand in &scored[1..] {
        let scale = cand.1.abs().max(best.1.abs()).max(f64::MIN_POSITIVE);
        let diff = (cand.1 - best.1) / scale;
        let better = if diff > TIE_TOLERANCE {
            true
        } else if diff < -TIE_TOLERANCE {
            false
        } else if (cand.2 - best.2).abs() > 1e-9 * best.2.max(1.0) {
            cand.2 < best.2
        } else {
            cand.0 < best.0
        };
        if better {
            best = cand;
        }
    }
    best.0
}

/// Hybrid choice `argmax_k p̃_jk X_jk` for realized link powers, ties as in MMAP.
///
/// `candidates` holds `(k, p̃_jk, X_jk, D_jk)`.
pub fn hybrid_associate(candidates: &[(usize, f64, f64, f64)]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::AllSleeping);
    }
    let scored: Vec<(usize, f64, f64)> = candidates
        .iter()
        .map(|&(k, p, x, d)| (k, p * x, d))
        .collect();
    Ok(argmax_with_ties(&scored))
}

/// Access probabilities of one scheme.
#[derive(Debug, Clone, Serialize)]
pub struct AccessReport {
    pub scheme: Scheme,
    /// `p̃_jk`, scheme-matching.
    pub best_case: BTreeMap<(usize, usize), f64>,
    /// `p̂_jk`: an indicator under MMAP.
    pub association: BTreeMap<(usize, usize), f64>,
    /// Access at `k` given association to `k`.
    pub exact_given: BTreeMap<(usize, usize), f64>,
    /// Unconditional access of a user of `j`.
    pub exact: BTreeMap<usize, f64>,
    /// MMAP choice per sleeping cell.
    pub chosen: BTreeMap<usize, usize>,
    pub sets: BTreeMap<usize, Vec<usize>>,
}

/// One CSV row of an [`AccessReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessRow {
    pub scheme: String,
    pub j: usize,
    pub k: usize,
    pub best_case: f64,
    pub association: f64,
    pub exact: Option<f64>,
    pub chosen: Option<usize>,
}

impl AccessReport {
    pub fn rows(&self) -> Vec<AccessRow> {
        self.best_case
            .iter()
            .map(|(&(j, k), &p)| AccessRow {
                scheme: self.scheme.to_string(),
                j,
                k,
                best_case: p,
                association: self.association.get(&(j, k)).copied().unwrap_or(0.0),
                exact: self.exact_given.get(&(j, k)).copied(),
                chosen: self.chosen.get(&j).copied(),
            })
            .collect()
    }
}
