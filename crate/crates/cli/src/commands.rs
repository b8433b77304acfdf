//! Figure commands and the analytic-versus-simulated validation.

use rayon::prelude::*;
use sleepcell_core::association::AccessModel;
use sleepcell_core::geometry::SleepPattern;
use sleepcell_core::metrics::{analyze_with, focus_access, outage_curve, scheme_power};
use sleepcell_core::montecarlo::{
    best_case_greedy_frequency, rr_selection_frequency, run, Moments, SimConfig, SimResult,
};
use sleepcell_core::scenario::{Association, Scenario, Scheduling, Scheme};

use crate::config::LoadedScenario;
use crate::output::{number, Table};
use crate::sweep::Sweep;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Analytic,
    Sim,
    Both,
}

impl Mode {
    fn analytic(self) -> bool {
        self != Self::Sim
    }

    fn sim(self) -> bool {
        self != Self::Analytic
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::Sim => "sim",
            Self::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Best-case and exact channel access of the sleeping-cell user.
    Access,
    /// Spectral efficiency of the sleeping-cell user and of the network.
    Se,
    /// Outage probability at every configured SIR threshold.
    Outage,
    /// Network power and energy efficiency.
    Energy,
    /// Analytic against simulated values, failing on any delta beyond tolerance.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Access => "access",
            Self::Se => "se",
            Self::Outage => "outage",
            Self::Energy => "energy",
            Self::Validate => "validate",
        }
    }
}

/// Everything one CLI invocation needs.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: Command,
    pub loaded: LoadedScenario,
    pub sweep: Option<Sweep>,
    pub mode: Mode,
    pub seed: u64,
}

/// Absolute tolerance on access probabilities and outage.
pub const PROBABILITY_TOLERANCE: f64 = 0.01;
/// Relative tolerance on spectral efficiency.
pub const SE_TOLERANCE: f64 = 0.05;

const FIGURE_HEADER: [&str; 7] = [
    "axis",
    "point",
    "scheme",
    "quantity",
    "source",
    "estimate",
    "std_error",
];
const VALIDATE_HEADER: [&str; 10] = [
    "axis",
    "point",
    "scheme",
    "quantity",
    "analytic",
    "simulated",
    "std_error",
    "delta",
    "tolerance",
    "pass",
];

struct Point {
    axis: &'static str,
    value: String,
    scenario: Scenario,
}

struct Figure<'a> {
    point: &'a Point,
    rows: Vec<Vec<String>>,
}

impl Figure<'_> {
    fn analytic(&mut self, scheme: &str, quantity: &str, v: f64) {
        self.push(scheme, quantity, "analytic", v, None);
    }

    fn simulated(&mut self, scheme: &str, quantity: &str, m: &Moments) {
        self.push(scheme, quantity, "simulated", m.mean, Some(m.std_error));
    }

    fn push(&mut self, scheme: &str, quantity: &str, source: &str, v: f64, se: Option<f64>) {
        self.rows.push(vec![
            self.point.axis.to_string(),
            self.point.value.clone(),
            scheme.to_string(),
            quantity.to_string(),
            source.to_string(),
            number(v),
            se.map(number).unwrap_or_default(),
        ]);
    }
}

/// Runs a manifest; the second value counts quantities outside tolerance.
pub fn execute(m: &Manifest) -> Result<(Table, usize), CliError> {
    let base = &m.loaded.scenario;
    let points: Vec<Point> = match &m.sweep {
        None => vec![Point {
            axis: "none",
            value: String::new(),
            scenario: base.clone(),
        }],
        Some(s) => s
            .points()
            .into_iter()
            .map(|v| {
                Ok(Point {
                    axis: s.axis.name(),
                    value: number(v),
                    scenario: s.axis.apply(base, v)?,
                })
            })
            .collect::<Result<_, CliError>>()?,
    };
    let sim = SimConfig {
        seed: m.seed,
        ..m.loaded.sim.clone()
    };
    let per_point: Vec<(Vec<Vec<String>>, usize)> = points
        .par_iter()
        .map(|p| match m.command {
            Command::Access => access(m, p, &sim),
            Command::Se => se(m, p, &sim),
            Command::Outage => outage(m, p, &sim),
            Command::Energy => energy(m, p, &sim),
            Command::Validate => validate(m, p, &sim),
        })
        .collect::<Result<_, CliError>>()?;
    let header = if m.command == Command::Validate {
        VALIDATE_HEADER.to_vec()
    } else {
        FIGURE_HEADER.to_vec()
    };
    let failures = per_point.iter().map(|p| p.1).sum();
    Ok((
        Table {
            header,
            rows: per_point.into_iter().flat_map(|p| p.0).collect(),
        },
        failures,
    ))
}

fn model(s: &Scenario) -> Result<AccessModel, CliError> {
    AccessModel::build(s).map_err(|e| CliError::core("access model", e))
}

fn simulate(s: &Scenario, scheme: Scheme, cfg: &SimConfig) -> Result<SimResult, CliError> {
    let mut s = s.clone();
    s.scheme = scheme;
    run(&s, cfg).map_err(|e| CliError::core(&format!("simulation of {scheme}"), e))
}

/// Analytic best-case access of the focus user at the reference BS, which is woken if asleep.
fn best_case(s: &Scenario, reference: usize, scheduling: Scheduling) -> Result<f64, CliError> {
    let core = |e| CliError::core("best-case access", e);
    let m = if s.pattern.is_sleeping(reference) {
        let mut woken = s.clone();
        let sleeping: Vec<usize> = s
            .sleeping()
            .into_iter()
            .filter(|&l| l != reference)
            .collect();
        woken.pattern = SleepPattern::explicit(&sleeping, s.layout.len()).map_err(core)?;
        woken.threshold = None;
        model(&woken)?
    } else {
        model(s)?
    };
    m.best_case_access(s.focus, reference, scheduling)
        .map_err(core)
}

fn best_case_sim(
    s: &Scenario,
    reference: usize,
    scheduling: Scheduling,
    cfg: &SimConfig,
) -> Result<Moments, CliError> {
    let users = s.loads[reference];
    match scheduling {
        Scheduling::RoundRobin => Ok(rr_selection_frequency(users, cfg.iterations, cfg.seed)),
        Scheduling::Greedy => {
            let d = s
                .layout
                .distance(s.focus, reference)
                .map_err(|e| CliError::core("layout", e))?;
            best_case_greedy_frequency(s, d, users, cfg.iterations, cfg.seed)
                .map_err(|e| CliError::core("best-case access simulation", e))
        }
    }
}

fn access(m: &Manifest, p: &Point, cfg: &SimConfig) -> Result<(Vec<Vec<String>>, usize), CliError> {
    let s = &p.scenario;
    let reference = m.loaded.reference;
    let mut fig = Figure {
        point: p,
        rows: Vec::new(),
    };
    let analytic = if m.mode.analytic() {
        Some(model(s)?)
    } else {
        None
    };
    for scheduling in [Scheduling::Greedy, Scheduling::RoundRobin] {
        let name = scheduling.to_string();
        if m.mode.analytic() {
            fig.analytic(
                &name,
                "best_case_access",
                best_case(s, reference, scheduling)?,
            );
        }
        if m.mode.sim() {
            fig.simulated(
                &name,
                "best_case_access",
                &best_case_sim(s, reference, scheduling, cfg)?,
            );
        }
        for association in [Association::Mmap, Association::Mrsp] {
            let scheme = Scheme::new(association, scheduling);
            if let Some(model) = &analytic {
                let v = focus_access(model, scheme)
                    .map_err(|e| CliError::core(&format!("access under {scheme}"), e))?;
                fig.analytic(&scheme.to_string(), "access", v);
            }
            if m.mode.sim() {
                fig.simulated(
                    &scheme.to_string(),
                    "access",
                    &simulate(s, scheme, cfg)?.access,
                );
            }
        }
    }
    Ok((fig.rows, 0))
}

fn se(m: &Manifest, p: &Point, cfg: &SimConfig) -> Result<(Vec<Vec<String>>, usize), CliError> {
    let s = &p.scenario;
    let mut fig = Figure {
        point: p,
        rows: Vec::new(),
    };
    let analytic = if m.mode.analytic() {
        Some(model(s)?)
    } else {
        None
    };
    for scheme in Scheme::ANALYTIC {
        let name = scheme.to_string();
        if let Some(model) = &analytic {
            let (r, _) = analyze_with(model, scheme, &[])
                .map_err(|e| CliError::core(&format!("spectral efficiency under {scheme}"), e))?;
            fig.analytic(&name, "user_se_nats", r.se_nats);
        }
        if m.mode.sim() {
            let r = simulate(s, scheme, cfg)?;
            fig.simulated(&name, "user_se_nats", &r.se_nats);
            fig.simulated(&name, "network_se_nats", &r.network_se_nats);
        }
    }
    Ok((fig.rows, 0))
}

fn outage_name(q: f64) -> String {
    format!("outage@{}", number(q))
}

fn outage(m: &Manifest, p: &Point, cfg: &SimConfig) -> Result<(Vec<Vec<String>>, usize), CliError> {
    let s = &p.scenario;
    let qs = &m.loaded.outage_thresholds;
    let mut fig = Figure {
        point: p,
        rows: Vec::new(),
    };
    let analytic = if m.mode.analytic() {
        Some(model(s)?)
    } else {
        None
    };
    for scheme in Scheme::ANALYTIC {
        let name = scheme.to_string();
        if let Some(model) = &analytic {
            let curve = outage_curve(model, scheme, qs)
                .map_err(|e| CliError::core(&format!("outage under {scheme}"), e))?;
            for (&q, v) in qs.iter().zip(curve) {
                fig.analytic(&name, &outage_name(q), v);
            }
        }
        if m.mode.sim() {
            for (q, v) in simulate(s, scheme, cfg)?.outage {
                fig.simulated(&name, &outage_name(q), &v);
            }
        }
    }
    Ok((fig.rows, 0))
}

fn energy(m: &Manifest, p: &Point, cfg: &SimConfig) -> Result<(Vec<Vec<String>>, usize), CliError> {
    let s = &p.scenario;
    let mut fig = Figure {
        point: p,
        rows: Vec::new(),
    };
    let analytic = if m.mode.analytic() {
        Some(model(s)?)
    } else {
        None
    };
    for scheme in Scheme::ANALYTIC {
        let name = scheme.to_string();
        if let Some(model) = &analytic {
            let core = |e| CliError::core(&format!("power under {scheme}"), e);
            let mmap = match scheme.association {
                Association::Mmap => Some(model.mmap_associate(scheme.scheduling).map_err(core)?),
                _ => None,
            };
            let (zooming, power) = scheme_power(model, scheme, mmap.as_ref()).map_err(core)?;
            fig.analytic(&name, "zooming_bs", zooming);
            fig.analytic(&name, "power_all_active", power.total);
            fig.analytic(&name, "power_after_sleep", power.after_sleep);
            fig.analytic(&name, "power_after_zoom", power.after_zoom);
        }
        if m.mode.sim() {
            let r = simulate(s, scheme, cfg)?;
            fig.simulated(&name, "zooming_bs", &r.zooming_count);
            fig.simulated(&name, "power_after_zoom", &r.network_power);
            fig.simulated(&name, "network_se_nats", &r.network_se_nats);
            fig.simulated(&name, "energy_efficiency", &r.energy_efficiency);
        }
    }
    Ok((fig.rows, 0))
}

struct Check<'a> {
    point: &'a Point,
    rows: Vec<Vec<String>>,
    failures: usize,
}

impl Check<'_> {
    fn compare(
        &mut self,
        scheme: &str,
        quantity: &str,
        analytic: f64,
        sim: &Moments,
        tolerance: f64,
    ) {
        let delta = (analytic - sim.mean).abs();
        let pass = delta <= tolerance;
        if !pass {
            self.failures += 1;
        }
        self.rows.push(vec![
            self.point.axis.to_string(),
            self.point.value.clone(),
            scheme.to_string(),
            quantity.to_string(),
            number(analytic),
            number(sim.mean),
            number(sim.std_error),
            number(delta),
            number(tolerance),
            pass.to_string(),
        ]);
    }
}

fn validate(
    m: &Manifest,
    p: &Point,
    cfg: &SimConfig,
) -> Result<(Vec<Vec<String>>, usize), CliError> {
    let s = &p.scenario;
    let reference = m.loaded.reference;
    let qs = &m.loaded.outage_thresholds;
    let model = model(s)?;
    let mut check = Check {
        point: p,
        rows: Vec::new(),
        failures: 0,
    };
    for scheduling in [Scheduling::Greedy, Scheduling::RoundRobin] {
        check.compare(
            &scheduling.to_string(),
            "best_case_access",
            best_case(s, reference, scheduling)?,
            &best_case_sim(s, reference, scheduling, cfg)?,
            PROBABILITY_TOLERANCE,
        );
    }
    for scheme in Scheme::ANALYTIC {
        let name = scheme.to_string();
        let (r, curve) = analyze_with(&model, scheme, qs)
            .map_err(|e| CliError::core(&format!("analysis under {scheme}"), e))?;
        let sim = simulate(s, scheme, cfg)?;
        check.compare(
            &name,
            "access",
            r.access,
            &sim.access,
            PROBABILITY_TOLERANCE,
        );
        check.compare(
            &name,
            "user_se_nats",
            r.se_nats,
            &sim.se_nats,
            SE_TOLERANCE * sim.se_nats.mean.abs(),
        );
        for ((q, v), a) in sim.outage.iter().zip(curve) {
            check.compare(&name, &outage_name(*q), a, v, PROBABILITY_TOLERANCE);
        }
    }
    Ok((check.rows, check.failures))
}
