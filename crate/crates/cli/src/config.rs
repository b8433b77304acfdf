//! Scenario files: flat `key = value` sections parsed from TOML.

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use sleepcell_core::channel::{CrossSeries, GammaFit};
use sleepcell_core::geometry::{Discretization, ZoneWeighting};
use sleepcell_core::montecarlo::SimConfig;
use sleepcell_core::scenario::{
    Association, CrossLaw, EnumerationPolicy, FocusModel, GreedySignalLaw, MrspLaw, Scenario,
    Scheduling, Scheme, ZoomCounting, BUNDLED_LOADS,
};

use crate::CliError;

/// Load threshold used when the file names neither a threshold nor a sleep set.
pub const DEFAULT_THRESHOLD: u32 = 3;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    layout: Layout,
    #[serde(default)]
    loads: Loads,
    #[serde(default)]
    fading: Fading,
    #[serde(default)]
    power: Power,
    #[serde(default)]
    scheme: SchemeSection,
    #[serde(default)]
    numerics: Numerics,
    #[serde(default)]
    simulation: Simulation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Layout {
    tiers: usize,
    radius: f64,
    focus: Option<usize>,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            tiers: 2,
            radius: 500.0,
            focus: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Loads {
    cells: Option<Vec<u32>>,
    threshold: Option<u32>,
    sleeping: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Fading {
    local_shape: f64,
    local_scale: f64,
    cross_shape: f64,
    cross_scale: f64,
    path_loss: f64,
}

impl Default for Fading {
    fn default() -> Self {
        Self {
            local_shape: 0.5,
            local_scale: 1.0,
            cross_shape: 2.0,
            cross_scale: 1.0,
            path_loss: 2.6,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Power {
    transmit: f64,
    zoom: f64,
    noise: f64,
    static_power: f64,
    sleep_power: f64,
    dynamic_slope: f64,
}

impl Default for Power {
    fn default() -> Self {
        Self {
            transmit: 1.0,
            zoom: 1.0,
            noise: 1e-16,
            static_power: 200.0,
            sleep_power: 2.0,
            dynamic_slope: 3.77,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SchemeSection {
    association: Association,
    scheduling: Scheduling,
    outage_thresholds: Vec<f64>,
    /// BS whose best-case access the access command reports.
    reference: usize,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            association: Association::Mmap,
            scheduling: Scheduling::Greedy,
            outage_thresholds: vec![1.0],
            reference: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum EnumerationKind {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CrossLawKind {
    Mixture,
    Series,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Numerics {
    rings: usize,
    sectors: usize,
    weighting: ZoneWeighting,
    cross_law: CrossLawKind,
    series_terms: usize,
    series_tolerance: f64,
    enumeration: EnumerationKind,
    draws: usize,
    enumeration_seed: u64,
    mrsp_law: MrspLaw,
    greedy_signal: GreedySignalLaw,
    zoom_counting: ZoomCounting,
    focus_model: FocusModel,
    focus_rings: usize,
    focus_sectors: usize,
    grid_panel: f64,
    grid_points: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let opts = sleepcell_core::scenario::ModelOptions::default();
        let series = CrossSeries::default();
        Self {
            rings: 50,
            sectors: 10,
            weighting: ZoneWeighting::Area,
            cross_law: CrossLawKind::Mixture,
            series_terms: series.terms,
            series_tolerance: series.tail_tolerance,
            enumeration: EnumerationKind::Exact,
            draws: 4096,
            enumeration_seed: 1,
            mrsp_law: opts.mrsp_law,
            greedy_signal: opts.greedy_signal,
            zoom_counting: opts.zoom_counting,
            focus_model: opts.focus_model,
            focus_rings: opts.focus_zones.rings,
            focus_sectors: opts.focus_zones.sectors,
            grid_panel: opts.grid_panel,
            grid_points: opts.grid_points,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Simulation {
    iterations: u64,
    seed: u64,
    threads: usize,
}

impl Default for Simulation {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            iterations: d.iterations,
            seed: d.seed,
            threads: d.threads,
        }
    }
}

/// A validated scenario together with the run settings its file carries.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub sim: SimConfig,
    pub outage_thresholds: Vec<f64>,
    pub reference: usize,
    /// Hex SHA-256 of the file bytes.
    pub hash: String,
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<LoadedScenario, CliError> {
    let file: File = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    build(file, hash)
}

fn build(f: File, hash: String) -> Result<LoadedScenario, CliError> {
    let mut problems = Vec::new();
    let cells = match (&f.loads.cells, f.layout.tiers) {
        (Some(c), _) => c.clone(),
        (None, 2) => BUNDLED_LOADS.to_vec(),
        (None, t) => {
            return Err(CliError::Config(format!(
                "[loads] cells is required for a layout with {t} tiers"
            )))
        }
    };
    if f.loads.threshold.is_some() && f.loads.sleeping.is_some() {
        problems.push("[loads] threshold and sleeping are exclusive".to_string());
    }
    if !(f.fading.path_loss > 2.0) {
        problems.push(format!(
            "[fading] path_loss must exceed 2, got {}",
            f.fading.path_loss
        ));
    }
    if !(f.power.zoom >= 1.0) {
        problems.push(format!(
            "[power] zoom must be at least 1, got {}",
            f.power.zoom
        ));
    }
    if !(f.power.transmit > 0.0) {
        problems.push(format!(
            "[power] transmit must be positive, got {}",
            f.power.transmit
        ));
    }
    if f.scheme.outage_thresholds.is_empty() {
        problems.push("[scheme] outage_thresholds must not be empty".to_string());
    }
    if !problems.is_empty() {
        return Err(CliError::Config(problems.join("; ")));
    }
    let core = |e: sleepcell_core::Error| CliError::Config(e.to_string());
    let mut s = match &f.loads.sleeping {
        Some(set) => Scenario::with_sleep_set(f.layout.tiers, f.layout.radius, cells, set),
        None => Scenario::with_threshold(
            f.layout.tiers,
            f.layout.radius,
            cells,
            f.loads.threshold.unwrap_or(DEFAULT_THRESHOLD),
        ),
    }
    .map_err(core)?;
    s.local_fading = GammaFit::new(f.fading.local_shape, f.fading.local_scale).map_err(core)?;
    s.cross_fading = GammaFit::new(f.fading.cross_shape, f.fading.cross_scale).map_err(core)?;
    s.link.path_loss = f.fading.path_loss;
    s.link.transmit_power = f.power.transmit;
    s.link.zoom = f.power.zoom;
    s.noise = f.power.noise;
    s.power.static_power = f.power.static_power;
    s.power.sleep_power = f.power.sleep_power;
    s.power.dynamic_slope = f.power.dynamic_slope;
    s.scheme = Scheme::new(f.scheme.association, f.scheme.scheduling);
    s.outage_threshold = f.scheme.outage_thresholds[0];
    let n = &f.numerics;
    s.discretization = Discretization {
        rings: n.rings,
        sectors: n.sectors,
        weighting: n.weighting,
    };
    s.enumeration = match n.enumeration {
        EnumerationKind::Exact => EnumerationPolicy::Exact,
        EnumerationKind::Sampled => EnumerationPolicy::Sampled {
            draws: n.draws,
            seed: n.enumeration_seed,
        },
    };
    s.options.cross_law = match n.cross_law {
        CrossLawKind::Mixture => CrossLaw::Mixture,
        CrossLawKind::Series => CrossLaw::Series(CrossSeries {
            terms: n.series_terms,
            tail_tolerance: n.series_tolerance,
        }),
    };
    s.options.mrsp_law = n.mrsp_law;
    s.options.greedy_signal = n.greedy_signal;
    s.options.zoom_counting = n.zoom_counting;
    s.options.focus_model = n.focus_model;
    s.options.focus_zones = Discretization {
        rings: n.focus_rings,
        sectors: n.focus_sectors,
        weighting: ZoneWeighting::Area,
    };
    s.options.grid_panel = n.grid_panel;
    s.options.grid_points = n.grid_points;
    if let Some(focus) = f.layout.focus {
        s.focus = focus;
    }
    s.validate().map_err(core)?;
    if f.scheme.reference >= s.layout.len() {
        return Err(CliError::Config(format!(
            "[scheme] reference {} is not a cell of the layout",
            f.scheme.reference
        )));
    }
    let sim = SimConfig {
        iterations: f.simulation.iterations,
        seed: f.simulation.seed,
        threads: f.simulation.threads,
        outage_thresholds: f.scheme.outage_thresholds.clone(),
        ..SimConfig::default()
    };
    sim.validate().map_err(core)?;
    Ok(LoadedScenario {
        scenario: s,
        sim,
        outage_thresholds: f.scheme.outage_thresholds,
        reference: f.scheme.reference,
        hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let l = parse_scenario("").unwrap();
        let s = &l.scenario;
        assert_eq!(s.layout.len(), 19);
        assert_eq!(s.radius(), 500.0);
        assert_eq!(s.link.path_loss, 2.6);
        assert_eq!(s.noise, 1e-16);
        assert_eq!(s.link.transmit_power, 1.0);
        assert_eq!(s.power.static_power, 200.0);
        assert_eq!(s.power.sleep_power, 2.0);
        assert_eq!(s.power.dynamic_slope, 3.77);
        assert_eq!((s.cross_fading.shape, s.cross_fading.scale), (2.0, 1.0));
        assert_eq!((s.local_fading.shape, s.local_fading.scale), (0.5, 1.0));
        assert_eq!(l.sim.iterations, 100_000);
        assert_eq!(s.threshold, Some(DEFAULT_THRESHOLD));
    }

    #[test]
    fn path_loss_at_or_below_two_is_invalid() {
        let e = parse_scenario("[fading]\npath_loss = 1.9\n").unwrap_err();
        assert!(
            matches!(e, CliError::Config(ref m) if m.contains("path_loss")),
            "{e}"
        );
    }

    #[test]
    fn threshold_and_sleep_set_are_exclusive() {
        let e = parse_scenario("[loads]\nsleeping = [0]\nthreshold = 3\n").unwrap_err();
        assert!(
            matches!(e, CliError::Config(ref m) if m.contains("exclusive")),
            "{e}"
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        let e = parse_scenario("[power]\nzoom = \"x\"\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_scenario("[power]\nzom = 2\n").unwrap_err();
        assert!(e.to_string().contains("zom"), "{e}");
    }

    #[test]
    fn explicit_sleep_set_is_kept() {
        let text =
            "[layout]\ntiers = 1\n[loads]\ncells = [3, 3, 3, 3, 3, 3, 3]\nsleeping = [0, 1]\n";
        let l = parse_scenario(text).unwrap();
        assert_eq!(l.scenario.sleeping(), vec![0, 1]);
        assert_eq!(l.scenario.threshold, None);
    }
}
