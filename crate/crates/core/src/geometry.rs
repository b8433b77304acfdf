//! Hexagonal cell layout, user-distance laws and sleep-pattern selection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Cell radius in metres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CellRadius(f64);

impl CellRadius {
    pub fn new(metres: f64) -> Result<Self> {
        if metres > 0.0 && metres.is_finite() {
            Ok(Self(metres))
        } else {
            domain(format!("cell radius must be positive, got {metres}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Base-station centres on a hexagonal lattice with spacing `2R`.
///
/// Index 0 is the central cell; tier `n` follows with its `6n` cells listed
/// counter-clockwise starting from angle zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    radius: CellRadius,
    tiers: usize,
    centers: Vec<(f64, f64)>,
}

// Axial steps walking a ring counter-clockwise from its angle-zero corner.
const RING_STEPS: [(i64, i64); 6] = [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)];

impl CellLayout {
    pub fn hexagonal(tiers: usize, radius: CellRadius) -> Self {
        let spacing = 2.0 * radius.get();
        let to_xy = |q: i64, r: i64| {
            let (q, r) = (q as f64, r as f64);
            (spacing * (q + 0.5 * r), spacing * (3f64.sqrt() / 2.0) * r)
        };
        let mut centers = vec![(0.0, 0.0)];
        for n in 1..=tiers as i64 {
            let (mut q, mut r) = (n, 0);
            for (dq, dr) in RING_STEPS {
                for _ in 0..n {
                    centers.push(to_xy(q, r));
                    q += dq;
                    r += dr;
                }
            }
        }
        Self {
            radius,
            tiers,
            centers,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn tiers(&self) -> usize {
        self.tiers
    }

    pub fn radius(&self) -> f64 {
        self.radius.get()
    }

    pub fn center(&self, idx: usize) -> Result<(f64, f64)> {
        self.centers
            .get(idx)
            .copied()
            .ok_or_else(|| Error::Index(format!("cell {idx} not in a {}-cell layout", self.len())))
    }

    pub fn distance(&self, j: usize, k: usize) -> Result<f64> {
        let (a, b) = (self.center(j)?, self.center(k)?);
        Ok((a.0 - b.0).hypot(a.1 - b.1))
    }

    /// Direction of BS `k` seen from BS `j`, radians in `(-π, π]`.
    pub fn angle(&self, j: usize, k: usize) -> Result<f64> {
        let (a, b) = (self.center(j)?, self.center(k)?);
        Ok((b.1 - a.1).atan2(b.0 - a.0))
    }
}

pub fn inter_bs_distance(layout: &CellLayout, j: usize, k: usize) -> Result<f64> {
    layout.distance(j, k)
}

/// Distance from a point at polar offset `(r, θ)` around one BS to a BS at distance `d` along `θ = 0`.
pub fn cosine_law_distance(r: f64, theta: f64, d: f64) -> f64 {
    (r * r + d * d - 2.0 * r * d * theta.cos()).max(0.0).sqrt()
}

/// Density `2r/R²` of the distance from a uniform user to its own BS.
pub fn local_distance_pdf(r: f64, radius: f64) -> Result<f64> {
    if !(0.0..=radius).contains(&r) {
        return domain(format!("local distance {r} outside [0, {radius}]"));
    }
    Ok(2.0 * r / (radius * radius))
}

fn check_cross(d: f64, radius: f64) -> Result<()> {
    if !(d > radius) {
        return domain(format!(
            "cross-cell distance needs D > R (D = {d}, R = {radius})"
        ));
    }
    Ok(())
}

fn lens_cosine(rt: f64, d: f64, radius: f64) -> f64 {
    ((rt * rt + d * d - radius * radius) / (2.0 * d * rt)).clamp(-1.0, 1.0)
}

/// Density of the distance from a uniform user in a cell of radius `R` to a BS at distance `D > R`.
pub fn cross_distance_pdf(rt: f64, d: f64, radius: f64) -> Result<f64> {
    check_cross(d, radius)?;
    if rt < d - radius || rt > d + radius {
        return domain(format!(
            "cross distance {rt} outside [{}, {}]",
            d - radius,
            d + radius
        ));
    }
    let y = lens_cosine(rt, d, radius);
    Ok(rt / (radius * radius) * (1.0 - 2.0 / PI * y.asin()))
}

/// Distribution function of the cross distance: the lens area between the cell
/// disk and a disk of radius `rt` around the far BS, over the cell area.
pub fn cross_distance_cdf(rt: f64, d: f64, radius: f64) -> Result<f64> {
    check_cross(d, radius)?;
    if rt <= d - radius {
        return Ok(0.0);
    }
    if rt >= d + radius {
        return Ok(1.0);
    }
    let r2 = radius * radius;
    let a1 = rt * rt * lens_cosine(rt, d, radius).acos();
    let a2 = r2
        * ((d * d + r2 - rt * rt) / (2.0 * d * radius))
            .clamp(-1.0, 1.0)
            .acos();
    let k = (-d + rt + radius) * (d + rt - radius) * (d - rt + radius) * (d + rt + radius);
    let area = a1 + a2 - 0.5 * k.max(0.0).sqrt();
    Ok((area / (PI * r2)).clamp(0.0, 1.0))
}

/// How the discrete zones of a cell are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZoneWeighting {
    /// Equal weight per zone.
    #[default]
    Uniform,
    /// Weight equal to the zone's share of the cell area.
    Area,
}

/// Zone grid: `rings` equal-width annuli times `sectors` equal sectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub rings: usize,
    pub sectors: usize,
    pub weighting: ZoneWeighting,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            rings: 50,
            sectors: 10,
            weighting: ZoneWeighting::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonePoint {
    pub r: f64,
    pub theta: f64,
    /// Distance from the zone midpoint to the far BS.
    pub distance: f64,
    pub prob: f64,
}

/// Zone midpoints of a cell and their distances to a BS at distance `d`.
pub fn discretize_cell(d: f64, radius: f64, grid: &Discretization) -> Result<Vec<ZonePoint>> {
    check_cross(d, radius)?;
    Ok(cell_zones(radius, grid)?
        .into_iter()
        .map(|z| ZonePoint {
            distance: cosine_law_distance(z.r, z.theta, d),
            ..z
        })
        .collect())
}

/// Zone midpoints of a cell, with `distance` measured to the cell's own BS.
pub fn cell_zones(radius: f64, grid: &Discretization) -> Result<Vec<ZonePoint>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return domain(format!("cell radius must be positive, got {radius}"));
    }
    if grid.rings == 0 || grid.sectors == 0 {
        return domain("discretization needs at least one ring and one sector");
    }
    let (ny, nw) = (grid.rings as f64, grid.sectors as f64);
    let mut out = Vec::with_capacity(grid.rings * grid.sectors);
    for y in 1..=grid.rings {
        let r = (y as f64 - 0.5) * radius / ny;
        let ring_weight = match grid.weighting {
            ZoneWeighting::Uniform => 1.0 / ny,
            ZoneWeighting::Area => (2.0 * y as f64 - 1.0) / (ny * ny),
        };
        for w in 1..=grid.sectors {
            let theta = (w as f64 - 0.5) * 2.0 * PI / nw;
            out.push(ZonePoint {
                r,
                theta,
                distance: r,
                prob: ring_weight / nw,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Threshold,
    Explicit,
}

/// Partition of the cells into sleeping and active sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SleepPattern {
    asleep: Vec<bool>,
    mode: SelectionMode,
}

impl SleepPattern {
    pub fn explicit(sleeping: &[usize], cells: usize) -> Result<Self> {
        let mut asleep = vec![false; cells];
        for &l in sleeping {
            *asleep.get_mut(l).ok_or_else(|| {
                Error::Index(format!("sleeping cell {l} not in a {cells}-cell layout"))
            })? = true;
        }
        Self::checked(asleep, SelectionMode::Explicit)
    }

    fn checked(asleep: Vec<bool>, mode: SelectionMode) -> Result<Self> {
        if asleep.iter().all(|s| *s) {
            return Err(Error::AllSleeping);
        }
        Ok(Self { asleep, mode })
    }

    pub fn is_sleeping(&self, cell: usize) -> bool {
        self.asleep.get(cell).copied().unwrap_or(false)
    }

    pub fn sleeping(&self) -> Vec<usize> {
        (0..self.asleep.len()).filter(|&i| self.asleep[i]).collect()
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.asleep.len())
            .filter(|&i| !self.asleep[i])
            .collect()
    }

    pub fn cells(&self) -> usize {
        self.asleep.len()
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }
}

/// Cells with load at or below `threshold` sleep.
pub fn select_sleep_pattern(loads: &[u32], threshold: u32) -> Result<SleepPattern> {
    if loads.is_empty() {
        return domain("no cells");
    }
    SleepPattern::checked(
        loads.iter().map(|&u| u <= threshold).collect(),
        SelectionMode::Threshold,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> CellLayout {
        CellLayout::hexagonal(2, CellRadius::new(500.0).unwrap())
    }

    #[test]
    fn hex_layout_counts_and_distances() {
        let l = layout();
        assert_eq!(l.len(), 19);
        for k in 1..=6 {
            assert!((l.distance(0, k).unwrap() - 1000.0).abs() < 1e-9);
        }
        let mut tier2: Vec<f64> = (7..19).map(|k| l.distance(0, k).unwrap()).collect();
        tier2.sort_by(f64::total_cmp);
        assert!((tier2[0] - 1000.0 * 3f64.sqrt()).abs() < 1e-9);
        assert!((tier2[11] - 2000.0).abs() < 1e-9);
        assert!((l.distance(0, 1).unwrap() - l.distance(1, 0).unwrap()).abs() < 1e-12);
        assert!(l.distance(0, 19).is_err());
        assert!(l.angle(0, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cosine_law_cases() {
        assert!((cosine_law_distance(0.0, 1.3, 1000.0) - 1000.0).abs() < 1e-12);
        assert!((cosine_law_distance(500.0, PI, 1000.0) - 1500.0).abs() < 1e-9);
        assert!((cosine_law_distance(500.0, 0.0, 1000.0) - 500.0).abs() < 1e-9);
    }

    #[test]
    fn distance_density_edges() {
        assert_eq!(local_distance_pdf(0.0, 500.0).unwrap(), 0.0);
        assert!((local_distance_pdf(500.0, 500.0).unwrap() - 2.0 / 500.0).abs() < 1e-15);
        assert!(cross_distance_pdf(100.0, 1000.0, 500.0).is_err());
        assert!(cross_distance_pdf(600.0, 400.0, 500.0).is_err());
    }

    #[test]
    fn zone_probabilities_normalize() {
        for weighting in [ZoneWeighting::Uniform, ZoneWeighting::Area] {
            let g = Discretization {
                rings: 7,
                sectors: 5,
                weighting,
            };
            let z = discretize_cell(1000.0, 500.0, &g).unwrap();
            assert_eq!(z.len(), 35);
            let s: f64 = z.iter().map(|p| p.prob).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sleep_selection() {
        let p = select_sleep_pattern(&[2, 5, 3, 4], 3).unwrap();
        assert_eq!(p.sleeping(), vec![0, 2]);
        assert_eq!(p.active(), vec![1, 3]);
        assert!(select_sleep_pattern(&[1, 2], 0)
            .unwrap()
            .sleeping()
            .is_empty());
        assert_eq!(select_sleep_pattern(&[1, 2], 5), Err(Error::AllSleeping));
        let e = SleepPattern::explicit(&[0], 3).unwrap();
        assert_eq!(e.sleeping(), vec![0]);
        assert_eq!(e.mode(), SelectionMode::Explicit);
    }
}
