//! Snapshot simulation of the whole network: positions, fading, association, scheduling, zooming.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::AccessModel;
use crate::channel::{GammaFit, LinkParams};
use crate::error::{Error, Result};
use crate::scenario::{Association, Scenario, Scheduling};

/// Iterations per reduction chunk; fixed so results do not depend on the thread count.
const CHUNK: u64 = 2048;

/// Simulation controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub iterations: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Points at which the empirical signal CDF is collected.
    pub cdf_points: Vec<f64>,
    /// Points at which `E[e^{-tS}]` and `E[e^{-tI}]` are collected.
    pub mgf_points: Vec<f64>,
    /// Thresholds `𝒬` of the outage event `𝒬·I > S`.
    pub outage_thresholds: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            seed: 1,
            threads: 0,
            cdf_points: Vec::new(),
            mgf_points: Vec::new(),
            outage_thresholds: vec![1.0],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config(
                "simulation needs at least one iteration".into(),
            ));
        }
        if self.outage_thresholds.iter().any(|q| !(*q > 0.0)) {
            return Err(Error::Config("outage thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Running sums of one scalar estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Tally {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, o: &Tally) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn moments(&self) -> Moments {
        if self.n == 0.0 {
            return Moments {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let mean = self.sum / self.n;
        let var = if self.n > 1.0 {
            ((self.sum_sq - self.n * mean * mean) / (self.n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Moments {
            mean,
            std_error: (var / self.n).sqrt(),
            samples: self.n as u64,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Outcome of one network snapshot, seen from the first user of the focus cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// BS the user of interest associated to.
    pub serving_bs: usize,
    pub served: bool,
    pub signal: f64,
    pub interference: f64,
    pub sinr: f64,
    pub se_nats: f64,
    /// BSs serving a sleeping-cell user on the channel.
    pub zooming: Vec<usize>,
    /// BSs zooming for some sleeping-cell user other than the user of interest.
    pub zooming_for_others: Vec<usize>,
    /// Sum over transmitting BSs of the served user's `ln(1 + SINR)`.
    pub network_se_nats: f64,
}

#[derive(Debug, Clone, Default)]
struct Collector {
    access: Tally,
    association: BTreeMap<usize, Tally>,
    access_given: BTreeMap<usize, Tally>,
    se: Tally,
    se_given: BTreeMap<usize, Tally>,
    outage: Vec<Tally>,
    signal_cdf: Vec<Tally>,
    signal_mgf: Vec<Tally>,
    interference_mgf: Vec<Tally>,
    zoom: BTreeMap<usize, Tally>,
    zoom_for_others: BTreeMap<usize, Tally>,
    network_se: Tally,
    zooming_count: Tally,
    energy: Tally,
    power: Tally,
}

/// Aggregated simulation estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub iterations: u64,
    pub seed: u64,
    pub access: Moments,
    pub association: BTreeMap<usize, Moments>,
    /// Access frequency among snapshots in which the user associated to the BS.
    pub access_given: BTreeMap<usize, Moments>,
    pub se_nats: Moments,
    pub se_given: BTreeMap<usize, Moments>,
    /// One entry per configured threshold.
    pub outage: Vec<(f64, Moments)>,
    pub signal_cdf: Vec<(f64, Moments)>,
    pub signal_mgf: Vec<(f64, Moments)>,
    pub interference_mgf: Vec<(f64, Moments)>,
    pub zoom: BTreeMap<usize, Moments>,
    pub zoom_for_others: BTreeMap<usize, Moments>,
    pub network_se_nats: Moments,
    pub zooming_count: Moments,
    /// Realized network power after zooming, in watts.
    pub network_power: Moments,
    /// Network spectral efficiency in bits/s/Hz per watt.
    pub energy_efficiency: Moments,
}

/// Fixed per-scenario inputs of the simulator.
pub struct SimContext {
    scenario: Scenario,
    active: Vec<usize>,
    /// (cell, x, y) per user, in cell order.
    users: Vec<usize>,
    centers: Vec<(f64, f64)>,
    mmap_choice: BTreeMap<usize, usize>,
    /// `p̃_lk` for hybrid association.
    best_case: BTreeMap<(usize, usize), f64>,
    local: Gamma<f64>,
    cross: Gamma<f64>,
    focus_user: usize,
}

fn gamma(fit: GammaFit) -> Result<Gamma<f64>> {
    Gamma::new(fit.shape, fit.scale).map_err(|e| Error::DegenerateFit(e.to_string()))
}

impl SimContext {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let scn = scenario.clone();
        let active = scn.active();
        if active.is_empty() {
            return Err(Error::AllSleeping);
        }
        if scn.loads[scn.focus] == 0 {
            return Err(Error::Config(format!(
                "focus cell {} has no users",
                scn.focus
            )));
        }
        let centers = (0..scn.layout.len())
            .map(|c| scn.layout.center(c))
            .collect::<Result<Vec<_>>>()?;
        let mut users = Vec::new();
        let mut focus_user = 0;
        for (c, &u) in scn.loads.iter().enumerate() {
            if c == scn.focus {
                focus_user = users.len();
            }
            users.extend(std::iter::repeat_n(c, u as usize));
        }
        let needs_table = matches!(
            scn.scheme.association,
            Association::Mmap | Association::Hybrid
        );
        let (mut mmap_choice, mut best_case) = (BTreeMap::new(), BTreeMap::new());
        if needs_table {
            let model = AccessModel::build(&scn)?;
            if scn.scheme.association == Association::Mmap {
                mmap_choice = model.mmap_associate(scn.scheme.scheduling)?.chosen;
            } else {
                for l in scn.sleeping() {
                    for &k in &active {
                        best_case
                            .insert((l, k), model.best_case_access(l, k, scn.scheme.scheduling)?);
                    }
                }
            }
        }
        Ok(Self {
            local: gamma(scn.local_fading)?,
            cross: gamma(scn.cross_fading)?,
            scenario: scn,
            active,
            users,
            centers,
            mmap_choice,
            best_case,
            focus_user,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }
}

/// Point uniform in a disk of radius `radius` about `center`.
fn uniform_in_disk<R: Rng + ?Sized>(center: (f64, f64), radius: f64, rng: &mut R) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let a = 2.0 * PI * rng.random::<f64>();
    (center.0 + r * a.cos(), center.1 + r * a.sin())
}

fn path_gain(a: (f64, f64), b: (f64, f64), beta: f64, radius: f64) -> f64 {
    let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2))
        .sqrt()
        .max(1e-9 * radius);
    d.powf(-beta)
}

/// One snapshot. Draw order: per user (in cell order) its position then its fading draws;
/// then one scheduling uniform per active BS; then interference fading of served local users.
pub fn run_iteration<R: Rng + ?Sized>(ctx: &SimContext, rng: &mut R) -> IterationRecord {
    let scn = &ctx.scenario;
    let (p_t, beta, alpha) = (scn.link.transmit_power, scn.link.path_loss, scn.link.zoom);
    let radius = scn.radius();
    let n_cells = scn.layout.len();
    let na = ctx.active.len();

    let mut pos = Vec::with_capacity(ctx.users.len());
    // Local users: own-BS fading. Sleeping users: cross fading to every active BS.
    let mut own_power = vec![0.0; ctx.users.len()];
    let mut cross_fade: Vec<Vec<f64>> = vec![Vec::new(); ctx.users.len()];
    for (u, &c) in ctx.users.iter().enumerate() {
        let p = uniform_in_disk(ctx.centers[c], radius, rng);
        pos.push(p);
        if scn.pattern.is_sleeping(c) {
            cross_fade[u] = (0..na).map(|_| ctx.cross.sample(rng)).collect();
        } else {
            own_power[u] = p_t * path_gain(p, ctx.centers[c], beta, radius) * ctx.local.sample(rng);
        }
    }

    // Association of sleeping-cell users: index into the active list.
    let mut assoc = vec![usize::MAX; ctx.users.len()];
    let link_power = |u: usize, a: usize| {
        p_t * path_gain(pos[u], ctx.centers[ctx.active[a]], beta, radius) * cross_fade[u][a]
    };
    for (u, &c) in ctx.users.iter().enumerate() {
        if !scn.pattern.is_sleeping(c) {
            continue;
        }
        assoc[u] = match scn.scheme.association {
            Association::Mmap => {
                let k = ctx.mmap_choice[&c];
                ctx.active.iter().position(|&a| a == k).expect("active BS")
            }
            Association::Mrsp => argmax((0..na).map(|a| link_power(u, a))),
            Association::Hybrid => {
                argmax((0..na).map(|a| ctx.best_case[&(c, ctx.active[a])] * link_power(u, a)))
            }
        };
    }

    // Scheduling per active BS.
    let uniforms: Vec<f64> = (0..na).map(|_| rng.random::<f64>()).collect();
    let mut served: Vec<Option<usize>> = vec![None; na];
    for (a, &k) in ctx.active.iter().enumerate() {
        let candidates: Vec<(usize, f64)> = ctx
            .users
            .iter()
            .enumerate()
            .filter_map(|(u, &c)| {
                if c == k {
                    Some((u, own_power[u]))
                } else if assoc[u] == a {
                    Some((u, alpha * link_power(u, a)))
                } else {
                    None
                }
            })
            .collect();
        if candidates.is_empty() {
            continue;
        }
        served[a] = Some(match scn.scheme.scheduling {
            Scheduling::Greedy => candidates[argmax(candidates.iter().map(|c| c.1))].0,
            Scheduling::RoundRobin => {
                candidates
                    [((uniforms[a] * candidates.len() as f64) as usize).min(candidates.len() - 1)]
                .0
            }
        });
    }
    let zoom_of: Vec<bool> = served
        .iter()
        .map(|s| s.is_some_and(|u| scn.pattern.is_sleeping(ctx.users[u])))
        .collect();
    let tx: Vec<f64> = zoom_of
        .iter()
        .zip(&served)
        .map(|(&z, s)| {
            if s.is_none() {
                0.0
            } else if z {
                alpha * p_t
            } else {
                p_t
            }
        })
        .collect();

    // Fading from every other active BS to a served local user.
    let mut local_interf: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in served.iter().flatten() {
        if !scn.pattern.is_sleeping(ctx.users[*s]) {
            local_interf.insert(*s, (0..na).map(|_| ctx.cross.sample(rng)).collect());
        }
    }
    let interference_at = |u: usize, skip: usize| -> f64 {
        (0..na)
            .filter(|&a| a != skip && tx[a] > 0.0)
            .map(|a| {
                let fade = if scn.pattern.is_sleeping(ctx.users[u]) {
                    cross_fade[u][a]
                } else {
                    local_interf[&u][a]
                };
                tx[a] * path_gain(pos[u], ctx.centers[ctx.active[a]], beta, radius) * fade
            })
            .sum()
    };

    let mut network = 0.0;
    for (a, s) in served.iter().enumerate() {
        if let Some(u) = *s {
            let signal = if zoom_of[a] {
                alpha * link_power(u, a)
            } else {
                own_power[u]
            };
            let sinr = signal / (interference_at(u, a) + scn.noise);
            network += sinr.ln_1p();
        }
    }

    let f = ctx.focus_user;
    let a_star = assoc[f];
    let served_focus = served[a_star] == Some(f);
    let signal = if served_focus {
        alpha * link_power(f, a_star)
    } else {
        0.0
    };
    let interference = interference_at(f, a_star);
    let sinr = signal / (interference + scn.noise);
    let mut zooming = Vec::new();
    let mut zooming_for_others = Vec::new();
    for (a, &z) in zoom_of.iter().enumerate() {
        if z {
            zooming.push(ctx.active[a]);
            if served[a] != Some(f) {
                zooming_for_others.push(ctx.active[a]);
            }
        }
    }
    let _ = n_cells;
    IterationRecord {
        serving_bs: ctx.active[a_star],
        served: served_focus,
        signal,
        interference,
        sinr,
        se_nats: sinr.ln_1p(),
        zooming,
        zooming_for_others,
        network_se_nats: network,
    }
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Stream for iteration `i` of a run seeded with `seed`.
pub fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    rng
}

impl Collector {
    fn new(cfg: &SimConfig, ctx: &SimContext) -> Self {
        let mut c = Self {
            outage: vec![Tally::default(); cfg.outage_thresholds.len()],
            signal_cdf: vec![Tally::default(); cfg.cdf_points.len()],
            signal_mgf: vec![Tally::default(); cfg.mgf_points.len()],
            interference_mgf: vec![Tally::default(); cfg.mgf_points.len()],
            ..Default::default()
        };
        for &k in &ctx.active {
            c.association.insert(k, Tally::default());
            c.zoom.insert(k, Tally::default());
            c.zoom_for_others.insert(k, Tally::default());
        }
        c
    }

    fn push(&mut self, r: &IterationRecord, cfg: &SimConfig, ctx: &SimContext) {
        let scn = &ctx.scenario;
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        self.access.push(ind(r.served));
        for (&k, t) in self.association.iter_mut() {
            t.push(ind(k == r.serving_bs));
        }
        self.access_given
            .entry(r.serving_bs)
            .or_default()
            .push(ind(r.served));
        self.se.push(r.se_nats);
        self.se_given
            .entry(r.serving_bs)
            .or_default()
            .push(r.se_nats);
        for (t, q) in self.outage.iter_mut().zip(&cfg.outage_thresholds) {
            t.push(ind(q * r.interference > r.signal));
        }
        for (t, s) in self.signal_cdf.iter_mut().zip(&cfg.cdf_points) {
            t.push(ind(r.signal <= *s));
        }
        for (t, x) in self.signal_mgf.iter_mut().zip(&cfg.mgf_points) {
            t.push((-x * r.signal).exp());
        }
        for (t, x) in self.interference_mgf.iter_mut().zip(&cfg.mgf_points) {
            t.push((-x * r.interference).exp());
        }
        for (&k, t) in self.zoom.iter_mut() {
            t.push(ind(r.zooming.contains(&k)));
        }
        for (&k, t) in self.zoom_for_others.iter_mut() {
            t.push(ind(r.zooming_for_others.contains(&k)));
        }
        self.network_se.push(r.network_se_nats);
        let nz = r.zooming.len() as f64;
        self.zooming_count.push(nz);
        let l = scn.layout.len() as f64;
        let pc = &scn.power;
        let p_t = scn.link.transmit_power;
        let ns = scn.sleeping().len() as f64;
        let total = l * (pc.dynamic_slope * p_t + pc.static_power);
        let after_sleep = (1.0 - ns / l) * total + pc.sleep_power * ns;
        let power = nz * p_t * pc.dynamic_slope * (scn.link.zoom - 1.0) + after_sleep;
        self.power.push(power);
        self.energy
            .push(r.network_se_nats / std::f64::consts::LN_2 / power);
    }

    fn merge(&mut self, o: &Collector) {
        self.access.merge(&o.access);
        for (k, t) in &o.association {
            self.association.entry(*k).or_default().merge(t);
        }
        for (k, t) in &o.access_given {
            self.access_given.entry(*k).or_default().merge(t);
        }
        self.se.merge(&o.se);
        for (k, t) in &o.se_given {
            self.se_given.entry(*k).or_default().merge(t);
        }
        for (a, b) in self.outage.iter_mut().zip(&o.outage) {
            a.merge(b);
        }
        for (a, b) in self.signal_cdf.iter_mut().zip(&o.signal_cdf) {
            a.merge(b);
        }
        for (a, b) in self.signal_mgf.iter_mut().zip(&o.signal_mgf) {
            a.merge(b);
        }
        for (a, b) in self.interference_mgf.iter_mut().zip(&o.interference_mgf) {
            a.merge(b);
        }
        for (k, t) in &o.zoom {
            self.zoom.entry(*k).or_default().merge(t);
        }
        for (k, t) in &o.zoom_for_others {
            self.zoom_for_others.entry(*k).or_default().merge(t);
        }
        self.network_se.merge(&o.network_se);
        self.zooming_count.merge(&o.zooming_count);
        self.energy.merge(&o.energy);
        self.power.merge(&o.power);
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs `cfg.iterations` snapshots; identical for a given seed whatever the thread count.
pub fn run(scenario: &Scenario, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let ctx = SimContext::new(scenario)?;
    let chunks: Vec<(u64, u64)> = (0..cfg.iterations.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(cfg.iterations)))
        .collect();
    let parts: Vec<Collector> = pool(cfg.threads)?.install(|| {
        chunks
            .par_iter()
            .map(|&(a, b)| {
                let mut col = Collector::new(cfg, &ctx);
                for i in a..b {
                    let mut rng = iteration_rng(cfg.seed, i);
                    col.push(&run_iteration(&ctx, &mut rng), cfg, &ctx);
                }
                col
            })
            .collect()
    });
    let mut total = Collector::new(cfg, &ctx);
    for p in &parts {
        total.merge(p);
    }
    let map = |m: &BTreeMap<usize, Tally>| m.iter().map(|(k, t)| (*k, t.moments())).collect();
    let pair = |xs: &[f64], ts: &[Tally]| {
        xs.iter()
            .copied()
            .zip(ts.iter().map(Tally::moments))
            .collect()
    };
    Ok(SimResult {
        iterations: cfg.iterations,
        seed: cfg.seed,
        access: total.access.moments(),
        association: map(&total.association),
        access_given: map(&total.access_given),
        se_nats: total.se.moments(),
        se_given: map(&total.se_given),
        outage: pair(&cfg.outage_thresholds, &total.outage),
        signal_cdf: pair(&cfg.cdf_points, &total.signal_cdf),
        signal_mgf: pair(&cfg.mgf_points, &total.signal_mgf),
        interference_mgf: pair(&cfg.mgf_points, &total.interference_mgf),
        zoom: map(&total.zoom),
        zoom_for_others: map(&total.zoom_for_others),
        network_se_nats: total.network_se.moments(),
        zooming_count: total.zooming_count.moments(),
        network_power: total.power.moments(),
        energy_efficiency: total.energy.moments(),
    })
}

/// Received cross-cell power of a user uniform in a disk of radius `radius` at distance `distance`.
pub fn sample_cross_power<R: Rng + ?Sized>(
    fit: GammaFit,
    link: LinkParams,
    distance: f64,
    radius: f64,
    rng: &mut R,
) -> Result<f64> {
    let g = gamma(fit)?;
    let p = uniform_in_disk((0.0, 0.0), radius, rng);
    Ok(link.effective_power()
        * path_gain(p, (distance, 0.0), link.path_loss, radius)
        * g.sample(rng))
}

/// Frequency with which a single sleeping-cell user out-powers `local_users` local users
/// of a BS at distance `distance` (greedy, no other sleepers).
pub fn best_case_greedy_frequency(
    scenario: &Scenario,
    distance: f64,
    local_users: u32,
    iterations: u64,
    seed: u64,
) -> Result<Moments> {
    let radius = scenario.radius();
    let local = gamma(scenario.local_fading)?;
    let cross = gamma(scenario.cross_fading)?;
    let link = scenario.link;
    let wins: Vec<Tally> = chunked(iterations, |i| {
        let mut rng = iteration_rng(seed, i);
        let me = uniform_in_disk((0.0, 0.0), radius, &mut rng);
        let x = link.effective_power()
            * path_gain(me, (distance, 0.0), link.path_loss, radius)
            * cross.sample(&mut rng);
        let best = (0..local_users)
            .map(|_| {
                let p = uniform_in_disk((distance, 0.0), radius, &mut rng);
                link.transmit_power
                    * path_gain(p, (distance, 0.0), link.path_loss, radius)
                    * local.sample(&mut rng)
            })
            .fold(0.0, f64::max);
        if x > best {
            1.0
        } else {
            0.0
        }
    });
    Ok(reduce(&wins))
}

/// Frequency with which round-robin picks one given user out of `local_users + 1`.
pub fn rr_selection_frequency(local_users: u32, iterations: u64, seed: u64) -> Moments {
    let picks = chunked(iterations, |i| {
        let mut rng = iteration_rng(seed, i);
        let pick = rng.random_range(0..=local_users);
        if pick == local_users {
            1.0
        } else {
            0.0
        }
    });
    reduce(&picks)
}

fn chunked(iterations: u64, draw: impl Fn(u64) -> f64 + Sync) -> Vec<Tally> {
    let chunks: Vec<u64> = (0..iterations.div_ceil(CHUNK)).collect();
    chunks
        .par_iter()
        .map(|&c| {
            let mut t = Tally::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(iterations) {
                t.push(draw(i));
            }
            t
        })
        .collect()
}

fn reduce(parts: &[Tally]) -> Moments {
    let mut t = Tally::default();
    for p in parts {
        t.merge(p);
    }
    t.moments()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_single_sample() {
        let mut t = Tally::default();
        t.push(2.5);
        let m = t.moments();
        assert_eq!((m.mean, m.std_error, m.samples), (2.5, 0.0, 1));
    }

    #[test]
    fn rr_frequency() {
        let m = rr_selection_frequency(5, 100_000, 3);
        assert!((m.mean - 1.0 / 6.0).abs() < 3.0 * m.std_error);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax([1.0, 3.0, 3.0].into_iter()), 1);
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a: f64 = iteration_rng(9, 17).random();
        let _: f64 = iteration_rng(9, 3).random();
        let b: f64 = iteration_rng(9, 17).random();
        assert_eq!(a, b);
        assert_ne!(a, iteration_rng(9, 18).random::<f64>());
    }
}
