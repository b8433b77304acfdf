//! Network scenario: layout, loads, sleep pattern, schemes and numerical options.

use serde::{Deserialize, Serialize};

use crate::channel::{CrossSeries, GammaFit, LinkParams};
use crate::error::{Error, Result};
use crate::geometry::{
    select_sleep_pattern, CellLayout, CellRadius, Discretization, SleepPattern, ZoneWeighting,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduling {
    Greedy,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Association {
    Mmap,
    Mrsp,
    Hybrid,
}

impl std::fmt::Display for Scheduling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Greedy => "greedy",
            Self::RoundRobin => "round-robin",
        })
    }
}

impl std::fmt::Display for Association {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Mmap => "mmap",
            Self::Mrsp => "mrsp",
            Self::Hybrid => "hybrid",
        })
    }
}

/// An association rule paired with a scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    pub association: Association,
    pub scheduling: Scheduling,
}

impl Scheme {
    pub const fn new(association: Association, scheduling: Scheduling) -> Self {
        Self {
            association,
            scheduling,
        }
    }

    /// The four analytic pairs in a fixed order.
    pub const ANALYTIC: [Scheme; 4] = [
        Scheme::new(Association::Mmap, Scheduling::Greedy),
        Scheme::new(Association::Mmap, Scheduling::RoundRobin),
        Scheme::new(Association::Mrsp, Scheduling::Greedy),
        Scheme::new(Association::Mrsp, Scheduling::RoundRobin),
    ];
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.scheduling, self.association)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationPolicy {
    /// Every competitor state vector; refused beyond 20 competitors.
    Exact,
    /// `K` vectors drawn from the product-Bernoulli law.
    Sampled { draws: usize, seed: u64 },
}

/// Law used for cross-cell received power in the analytic pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossLaw {
    /// Gamma mixture over the zone grid.
    Mixture,
    /// Truncated arcsine series.
    Series(CrossSeries),
}

/// How association competitors enter the MRSP access integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MrspLaw {
    /// Marginal laws of every link, ignoring that association selected the strongest BS.
    Marginal,
    /// Laws conditioned on the association outcome.
    Conditioned,
}

/// Law of the served signal under greedy scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedySignalLaw {
    /// Maximum over all competing received powers, weighted by the access probability.
    MaxOfCompetitors,
    /// Cross-cell power restricted to the event that it wins the channel.
    Winning,
}

/// Counting of zoom triggers under MMAP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZoomCounting {
    PerCell,
    PerUser,
}

/// How the user of interest is modelled when computing its signal, interference and metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FocusModel {
    /// Position resolved into zones; given the zone all links are independent.
    #[default]
    Positioned,
    /// Every link drawn from its own spatially averaged law, independently of the others.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub cross_law: CrossLaw,
    pub mrsp_law: MrspLaw,
    pub focus_model: FocusModel,
    /// Zones resolving the position of the user of interest.
    pub focus_zones: Discretization,
    pub greedy_signal: GreedySignalLaw,
    pub zoom_counting: ZoomCounting,
    /// Width in `ln x` of each Gauss–Legendre panel of the shared power grid.
    pub grid_panel: f64,
    pub grid_points: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            cross_law: CrossLaw::Mixture,
            mrsp_law: MrspLaw::Conditioned,
            focus_model: FocusModel::Positioned,
            focus_zones: Discretization {
                rings: 8,
                sectors: 12,
                weighting: ZoneWeighting::Area,
            },
            greedy_signal: GreedySignalLaw::Winning,
            zoom_counting: ZoomCounting::PerCell,
            grid_panel: 0.5,
            grid_points: 10,
        }
    }
}

/// Power-consumption constants of a BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConstants {
    pub static_power: f64,
    pub sleep_power: f64,
    pub dynamic_slope: f64,
}

impl Default for PowerConstants {
    fn default() -> Self {
        Self {
            static_power: 200.0,
            sleep_power: 2.0,
            dynamic_slope: 3.77,
        }
    }
}

/// Complete description of one network snapshot law.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layout: CellLayout,
    pub loads: Vec<u32>,
    pub pattern: SleepPattern,
    pub threshold: Option<u32>,
    pub scheme: Scheme,
    /// Local fading `ζ`.
    pub local_fading: GammaFit,
    /// Cross-cell fading `χ`.
    pub cross_fading: GammaFit,
    pub link: LinkParams,
    pub noise: f64,
    pub outage_threshold: f64,
    pub discretization: Discretization,
    pub enumeration: EnumerationPolicy,
    pub options: ModelOptions,
    pub power: PowerConstants,
    /// Sleeping cell whose users the per-user metrics describe.
    pub focus: usize,
}

/// Per-cell loads of the bundled non-uniform scenario, cell 2 left at its default of 5.
pub const BUNDLED_LOADS: [u32; 19] = [2, 5, 5, 3, 8, 2, 9, 1, 6, 2, 7, 8, 1, 9, 2, 10, 6, 1, 7];

impl Scenario {
    /// Threshold-mode scenario with default channel, power and numerical settings.
    pub fn with_threshold(
        tiers: usize,
        radius: f64,
        loads: Vec<u32>,
        threshold: u32,
    ) -> Result<Self> {
        let layout = CellLayout::hexagonal(tiers, CellRadius::new(radius)?);
        let pattern = select_sleep_pattern(&loads, threshold)?;
        let mut s = Self::assemble(layout, loads, pattern)?;
        s.threshold = Some(threshold);
        Ok(s)
    }

    /// Scenario with an explicit sleeping set.
    pub fn with_sleep_set(
        tiers: usize,
        radius: f64,
        loads: Vec<u32>,
        sleeping: &[usize],
    ) -> Result<Self> {
        let layout = CellLayout::hexagonal(tiers, CellRadius::new(radius)?);
        let pattern = SleepPattern::explicit(sleeping, layout.len())?;
        Self::assemble(layout, loads, pattern)
    }

    fn assemble(layout: CellLayout, loads: Vec<u32>, pattern: SleepPattern) -> Result<Self> {
        let focus = pattern.sleeping().first().copied().unwrap_or(0);
        let s = Self {
            layout,
            loads,
            pattern,
            threshold: None,
            scheme: Scheme::new(Association::Mmap, Scheduling::Greedy),
            local_fading: GammaFit::new(0.5, 1.0)?,
            cross_fading: GammaFit::new(2.0, 1.0)?,
            link: LinkParams::new(1.0, 2.6, 1.0)?,
            noise: 1e-16,
            outage_threshold: 1.0,
            discretization: Discretization {
                weighting: ZoneWeighting::Area,
                ..Discretization::default()
            },
            enumeration: EnumerationPolicy::Exact,
            options: ModelOptions::default(),
            power: PowerConstants::default(),
            focus,
        };
        if s.loads.len() != s.layout.len() {
            return Err(Error::Config(format!(
                "{} loads given for a {}-cell layout",
                s.loads.len(),
                s.layout.len()
            )));
        }
        Ok(s)
    }

    /// The bundled 19-cell non-uniform load scenario.
    pub fn bundled(threshold: u32) -> Result<Self> {
        Self::with_threshold(2, 500.0, BUNDLED_LOADS.to_vec(), threshold)
    }

    /// Replaces the load of `cell`, reselecting sleepers in threshold mode.
    pub fn set_load(&mut self, cell: usize, load: u32) -> Result<()> {
        let slot = self
            .loads
            .get_mut(cell)
            .ok_or_else(|| Error::Index(format!("cell {cell} not in layout")))?;
        *slot = load;
        if let Some(th) = self.threshold {
            self.pattern = select_sleep_pattern(&self.loads, th)?;
        }
        Ok(())
    }

    pub fn set_threshold(&mut self, threshold: u32) -> Result<()> {
        self.pattern = select_sleep_pattern(&self.loads, threshold)?;
        self.threshold = Some(threshold);
        Ok(())
    }

    pub fn set_zoom(&mut self, zoom: f64) -> Result<()> {
        self.link = self.link.with_zoom(zoom)?;
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.layout.radius()
    }

    pub fn active(&self) -> Vec<usize> {
        self.pattern.active()
    }

    pub fn sleeping(&self) -> Vec<usize> {
        self.pattern.sleeping()
    }

    /// Sleeping cells that actually hold users.
    pub fn populated_sleeping(&self) -> Vec<usize> {
        self.sleeping()
            .into_iter()
            .filter(|&l| self.loads[l] > 0)
            .collect()
    }

    /// Checks the cross-field invariants, listing every violation.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.loads.len() != self.layout.len() {
            problems.push(format!(
                "{} loads for {} cells",
                self.loads.len(),
                self.layout.len()
            ));
        }
        if self.pattern.cells() != self.layout.len() {
            problems.push("sleep pattern does not cover the layout".to_string());
        }
        if let Some(th) = self.threshold {
            for l in self.sleeping() {
                if self.loads.get(l).copied().unwrap_or(0) > th {
                    problems.push(format!(
                        "sleeping cell {l} has load above the threshold {th}"
                    ));
                }
            }
        }
        if !(self.link.path_loss > 2.0) {
            problems.push(format!(
                "path-loss exponent must exceed 2, got {}",
                self.link.path_loss
            ));
        }
        if !(self.noise >= 0.0) {
            problems.push(format!(
                "noise power must be nonnegative, got {}",
                self.noise
            ));
        }
        if !(self.outage_threshold > 0.0) {
            problems.push(format!(
                "outage threshold must be positive, got {}",
                self.outage_threshold
            ));
        }
        if !self.pattern.is_sleeping(self.focus) {
            problems.push(format!("focus cell {} is not sleeping", self.focus));
        }
        if self.power.static_power < 0.0
            || self.power.sleep_power < 0.0
            || self.power.dynamic_slope < 0.0
        {
            problems.push("power constants must be nonnegative".to_string());
        }
        if let EnumerationPolicy::Sampled { draws, .. } = self.enumeration {
            if draws == 0 {
                problems.push("sampled enumeration needs at least one draw".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}
