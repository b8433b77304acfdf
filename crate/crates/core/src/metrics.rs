//! Spectral efficiency, outage, and the network power model.

use std::f64::consts::{LN_2, PI};

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{AccessModel, MmapAssociation};
use crate::error::{domain, Error, Result};
use crate::focus::PositionedFocus;
use crate::mathkit::{integrate_log_domain, integrate_oscillatory_im, QuadratureSpec};
use crate::scenario::{Association, FocusModel, Scheduling, Scheme, ZoomCounting};
use crate::sigint::{
    interference_mgf_mmap, interference_mgf_mrsp, signal_stat_greedy_mmap, signal_stat_greedy_mrsp,
    signal_stat_rr_mmap, signal_stat_rr_mrsp, InterferenceStat, SignalPowerStat,
};

fn se_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 1e-9,
        ..Default::default()
    }
}

/// `E[ln(1 + S/(I + σ²))] = ∫_0^∞ M_I(t)(1 - M_S(t)) e^{-σ²t} / t dt`, in nats/s/Hz.
pub fn spectral_efficiency(
    signal: &SignalPowerStat,
    interference: &InterferenceStat,
    noise: f64,
) -> Result<f64> {
    if !(noise >= 0.0) {
        return domain(format!("noise power must be nonnegative, got {noise}"));
    }
    let Some((_, s_hi)) = signal.support() else {
        return Ok(0.0);
    };
    let mean = signal.mean();
    // Below t_lo, (1 - M_S(t))/t is flat at E[S]; the head is t_lo·E[S].
    let t_lo = 1e-8 / s_hi;
    let damp = |t: f64| interference.mgf(t) * (-noise * t).exp();
    let mut t_hi = 1e3 / s_hi;
    let floor = 1e-13;
    let mut guard = 0;
    while damp(t_hi) > floor && guard < 400 {
        t_hi *= 4.0;
        guard += 1;
    }
    if guard == 400 {
        if interference.interferers().is_empty() && noise == 0.0 {
            return domain("spectral efficiency diverges without interference or noise");
        }
        return Err(Error::NonConvergence {
            what: "spectral-efficiency upper limit".into(),
            estimate: t_hi,
            error: damp(t_hi),
        });
    }
    let body = integrate_log_domain(
        |t| damp(t) * (1.0 - signal.mgf(t)) / t,
        t_lo,
        t_hi,
        &se_spec(),
    )?;
    Ok((body.value + t_lo * mean).max(0.0))
}

/// `Σ_k 𝒞_jk p̂_jk`.
pub fn average_spectral_efficiency(
    per_bs: &[(usize, f64)],
    association: &[(usize, f64)],
) -> Result<f64> {
    let mut total = 0.0;
    for &(k, p) in association {
        let c = per_bs
            .iter()
            .find(|e| e.0 == k)
            .map(|e| e.1)
            .ok_or_else(|| Error::Index(format!("no spectral efficiency for BS {k}")))?;
        total += c * p;
    }
    Ok(total)
}

/// `Pr(𝒬·I > S) = 1/2 + (1/π) ∫_0^∞ Im[φ_I(𝒬ω) φ_S(-ω)] / ω dω`.
///
/// Noise does not enter: the event compares interference with signal only.
pub fn outage_probability(
    signal: &SignalPowerStat,
    interference: &InterferenceStat,
    threshold: f64,
) -> Result<f64> {
    if !(threshold > 0.0) {
        return domain(format!(
            "outage threshold must be positive, got {threshold}"
        ));
    }
    if interference.interferers().is_empty() {
        return Ok(0.0);
    }
    let s_scale = signal.support().map(|(_, hi)| hi).unwrap_or(0.0);
    let scale = (threshold * interference.scale()).max(s_scale);
    let f = |w: f64| {
        interference.mgf_complex(Complex64::new(0.0, -threshold * w))
            * signal.mgf_complex(Complex64::new(0.0, w))
    };
    let spec = QuadratureSpec {
        abs_tol: 1e-10,
        rel_tol: 1e-8,
        ..Default::default()
    };
    let v = 0.5 + integrate_oscillatory_im(f, scale, &spec)?.value / PI;
    if !(-1e-3..=1.0 + 1e-3).contains(&v) {
        warn!("outage probability {v} outside [0, 1] before clamping");
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Optional breakdown of the static power and dynamic slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConstituents {
    /// Signal-processing power `P_SP`.
    pub processing: f64,
    /// Cooling loss `C_c`.
    pub cooling: f64,
    /// Battery-backup and power-supply loss `C_PSBB`.
    pub supply: f64,
    /// Power-amplifier efficiency `η_PA`.
    pub amplifier_efficiency: f64,
}

impl PowerConstituents {
    pub fn static_power(&self) -> f64 {
        self.processing * (1.0 + self.cooling) * (1.0 + self.supply)
    }

    pub fn dynamic_slope(&self) -> f64 {
        (1.0 + self.cooling) * (1.0 + self.supply) / self.amplifier_efficiency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub transmit_power: f64,
    pub static_power: f64,
    pub sleep_power: f64,
    pub dynamic_slope: f64,
    pub zoom: f64,
    pub cells: usize,
    pub active: usize,
    pub sleeping: usize,
    /// Number of zooming BSs; the expected value in analytic use.
    pub zooming: f64,
    pub constituents: Option<PowerConstituents>,
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if self.static_power < 0.0
            || self.sleep_power < 0.0
            || self.dynamic_slope < 0.0
            || self.transmit_power < 0.0
        {
            return domain("power constants must be nonnegative");
        }
        if self.active + self.sleeping != self.cells {
            return domain(format!(
                "{} active plus {} sleeping cells do not make {}",
                self.active, self.sleeping, self.cells
            ));
        }
        if !(0.0..=self.active as f64).contains(&self.zooming) {
            return domain(format!(
                "{} zooming BSs with {} active",
                self.zooming, self.active
            ));
        }
        if let Some(c) = self.constituents {
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
            if !rel(c.static_power(), self.static_power)
                || !rel(c.dynamic_slope(), self.dynamic_slope)
            {
                return domain(
                    "power constituents disagree with the static power or dynamic slope",
                );
            }
        }
        Ok(())
    }
}

/// Network power before sleeping, after sleeping, and after zooming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkPower {
    pub total: f64,
    pub after_sleep: f64,
    pub after_zoom: f64,
}

pub fn network_power(pm: &PowerModel) -> Result<NetworkPower> {
    pm.validate()?;
    let per_bs = pm.dynamic_slope * pm.transmit_power + pm.static_power;
    let total = pm.cells as f64 * per_bs;
    let q = pm.sleeping as f64 / pm.cells as f64;
    let after_sleep = (1.0 - q) * total + pm.sleep_power * pm.sleeping as f64;
    let after_zoom =
        pm.zooming * pm.transmit_power * pm.dynamic_slope * (pm.zoom - 1.0) + after_sleep;
    Ok(NetworkPower {
        total,
        after_sleep,
        after_zoom,
    })
}

/// Network spectral efficiency (bits/s/Hz) per watt.
pub fn energy_efficiency(network_se_bits: f64, power: f64) -> Result<f64> {
    if !(power > 0.0) {
        return domain(format!("network power must be positive, got {power}"));
    }
    Ok(network_se_bits / power)
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// Analytic metrics of a user of the focus cell for one BS it may be served by.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServingMetrics {
    pub bs: usize,
    pub association: f64,
    pub access: f64,
    pub se_nats: f64,
    pub outage: f64,
    pub mean_interference: f64,
}

/// Analytic metrics of a sleeping-cell user under one scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub scheme: Scheme,
    pub cell: usize,
    pub serving: Vec<ServingMetrics>,
    /// Association-averaged spectral efficiency.
    pub se_nats: f64,
    pub se_bits: f64,
    pub outage: f64,
    /// Unconditional access probability.
    pub access: f64,
    /// Expected number of zooming BSs in the network.
    pub expected_zooming: f64,
    pub power: NetworkPower,
}

/// Signal and interference laws of a focus-cell user served by `k`.
pub fn serving_laws(
    model: &AccessModel,
    scheme: Scheme,
    j: usize,
    k: usize,
    mmap: Option<&MmapAssociation>,
) -> Result<(SignalPowerStat, InterferenceStat)> {
    match (scheme.association, mmap) {
        (Association::Mmap, Some(assoc)) => {
            let s = match scheme.scheduling {
                Scheduling::Greedy => signal_stat_greedy_mmap(model, j, assoc)?,
                Scheduling::RoundRobin => signal_stat_rr_mmap(model, j, assoc)?,
            };
            Ok((s, interference_mgf_mmap(model, j, assoc)?))
        }
        (Association::Mrsp, _) => {
            let s = match scheme.scheduling {
                Scheduling::Greedy => signal_stat_greedy_mrsp(model, j, k)?,
                Scheduling::RoundRobin => signal_stat_rr_mrsp(model, j, k)?,
            };
            Ok((s, interference_mgf_mrsp(model, j, k, scheme.scheduling)?))
        }
        (Association::Mmap, None) => Err(Error::Domain("MMAP laws need an association".into())),
        (Association::Hybrid, _) => Err(Error::Unsupported(
            "hybrid association has no analytic signal law; use the simulator".into(),
        )),
    }
}

/// Expected number of zooming BSs, counting every sleeping-cell user.
pub fn expected_zooming(
    model: &AccessModel,
    scheme: Scheme,
    mmap: Option<&MmapAssociation>,
) -> Result<f64> {
    let scn = model.scenario();
    let per_user = scn.options.zoom_counting == ZoomCounting::PerUser;
    let mut total = 0.0;
    for &k in model.active() {
        let mut p = 0.0;
        match (scheme.association, mmap) {
            (Association::Mmap, Some(assoc)) => {
                for &f in assoc.set(k) {
                    let a = match scheme.scheduling {
                        Scheduling::Greedy => model.exact_access_greedy_mmap(f, assoc)?,
                        Scheduling::RoundRobin => model.exact_access_rr_mmap(f, assoc)?,
                    };
                    p += a * if per_user { scn.loads[f] as f64 } else { 1.0 };
                }
            }
            (Association::Mrsp, _) => {
                for l in scn.populated_sleeping() {
                    let a = match scheme.scheduling {
                        Scheduling::Greedy => model.exact_access_greedy_mrsp(l, k)?,
                        Scheduling::RoundRobin => model.exact_access_rr_mrsp(l, k)?,
                    };
                    let users = if per_user { scn.loads[l] as f64 } else { 1.0 };
                    p += users * model.mrsp_association_prob(l, k)? * a;
                }
            }
            _ => {
                return Err(Error::Unsupported(
                    "zoom count needs MMAP or MRSP association".into(),
                ))
            }
        }
        total += p.min(1.0);
    }
    Ok(total)
}

/// Outage of the focus-cell user under `scheme` at several SIR thresholds.
pub fn outage_curve(model: &AccessModel, scheme: Scheme, thresholds: &[f64]) -> Result<Vec<f64>> {
    let scn = model.scenario();
    let j = scn.focus;
    if scn.loads[j] == 0 {
        return Err(Error::Config(format!("focus cell {j} has no users")));
    }
    if scn.options.focus_model == FocusModel::Positioned {
        let focus = PositionedFocus::build(model, scheme)?;
        return thresholds.iter().map(|&q| focus.outage(q)).collect();
    }
    let (mmap, targets) = match scheme.association {
        Association::Mmap => {
            let a = model.mmap_associate(scheme.scheduling)?;
            let k = a.chosen[&j];
            (Some(a), vec![(k, 1.0)])
        }
        Association::Mrsp => (None, model.mrsp_row(j)?),
        Association::Hybrid => {
            return Err(Error::Unsupported(
                "hybrid association has no analytic signal law; use the simulator".into(),
            ))
        }
    };
    let mut curve = vec![0.0; thresholds.len()];
    for (k, weight) in targets {
        let (s, i) = serving_laws(model, scheme, j, k, mmap.as_ref())?;
        for (acc, &q) in curve.iter_mut().zip(thresholds) {
            *acc += weight * outage_probability(&s, &i, q)?;
        }
    }
    Ok(curve)
}

/// Expected number of zooming BSs and the resulting network power under `scheme`.
pub fn scheme_power(
    model: &AccessModel,
    scheme: Scheme,
    mmap: Option<&MmapAssociation>,
) -> Result<(f64, NetworkPower)> {
    let scn = model.scenario();
    let zooming = expected_zooming(model, scheme, mmap)?;
    let power = network_power(&PowerModel {
        transmit_power: scn.link.transmit_power,
        static_power: scn.power.static_power,
        sleep_power: scn.power.sleep_power,
        dynamic_slope: scn.power.dynamic_slope,
        zoom: scn.link.zoom,
        cells: scn.layout.len(),
        active: model.active().len(),
        sleeping: scn.sleeping().len(),
        zooming,
        constituents: None,
    })?;
    Ok((zooming, power))
}

/// Unconditional channel access of the focus-cell user under `scheme`.
pub fn focus_access(model: &AccessModel, scheme: Scheme) -> Result<f64> {
    let scn = model.scenario();
    if scn.options.focus_model == FocusModel::Positioned {
        return Ok(PositionedFocus::build(model, scheme)?.access_probability());
    }
    model
        .access_report(scheme)?
        .exact
        .get(&scn.focus)
        .copied()
        .ok_or_else(|| Error::Config(format!("focus cell {} has no users", scn.focus)))
}

/// Full analytic evaluation of the focus-cell user under `scheme`.
pub fn analyze(model: &AccessModel, scheme: Scheme) -> Result<MetricReport> {
    Ok(analyze_with(model, scheme, &[])?.0)
}

/// As [`analyze`], also returning the outage at each of `thresholds`.
pub fn analyze_with(
    model: &AccessModel,
    scheme: Scheme,
    thresholds: &[f64],
) -> Result<(MetricReport, Vec<f64>)> {
    let scn = model.scenario();
    let j = scn.focus;
    if scn.loads[j] == 0 {
        return Err(Error::Config(format!("focus cell {j} has no users")));
    }
    let mmap = match scheme.association {
        Association::Mmap => Some(model.mmap_associate(scheme.scheduling)?),
        Association::Mrsp => None,
        Association::Hybrid => {
            return Err(Error::Unsupported(
                "hybrid association has no analytic signal law; use the simulator".into(),
            ))
        }
    };
    let targets: Vec<(usize, f64)> = match &mmap {
        Some(a) => vec![(a.chosen[&j], 1.0)],
        None => model.mrsp_row(j)?,
    };
    let mut curve = Vec::with_capacity(thresholds.len());
    let serving: Vec<ServingMetrics> = if scn.options.focus_model == FocusModel::Positioned {
        let focus = PositionedFocus::build(model, scheme)?;
        for &q in thresholds {
            curve.push(focus.outage(q)?);
        }
        focus
            .evaluate(scn.noise, scn.outage_threshold)?
            .into_iter()
            .map(|f| ServingMetrics {
                bs: f.bs,
                association: f.association,
                access: f.access,
                se_nats: f.se_nats,
                outage: f.outage,
                mean_interference: f.mean_interference,
            })
            .collect()
    } else {
        let per_target = targets
            .par_iter()
            .map(|&(k, weight)| {
                let (s, i) = serving_laws(model, scheme, j, k, mmap.as_ref())?;
                let (se_nats, outage) = (
                    spectral_efficiency(&s, &i, scn.noise)?,
                    outage_probability(&s, &i, scn.outage_threshold)?,
                );
                let extra = thresholds
                    .iter()
                    .map(|&q| outage_probability(&s, &i, q))
                    .collect::<Result<Vec<_>>>()?;
                let m = ServingMetrics {
                    bs: k,
                    association: weight,
                    access: s.access_probability(),
                    se_nats,
                    outage,
                    mean_interference: i.mean(),
                };
                Ok((m, extra))
            })
            .collect::<Result<Vec<_>>>()?;
        curve = vec![0.0; thresholds.len()];
        for (m, extra) in &per_target {
            for (acc, v) in curve.iter_mut().zip(extra) {
                *acc += m.association * v;
            }
        }
        per_target.into_iter().map(|(m, _)| m).collect()
    };
    let se_nats = serving
        .iter()
        .map(|m| m.association * m.se_nats)
        .sum::<f64>();
    let outage = serving
        .iter()
        .map(|m| m.association * m.outage)
        .sum::<f64>();
    let access = serving
        .iter()
        .map(|m| m.association * m.access)
        .sum::<f64>();
    let (zooming, power) = scheme_power(model, scheme, mmap.as_ref())?;
    let report = MetricReport {
        scheme,
        cell: j,
        serving,
        se_nats,
        se_bits: nats_to_bits(se_nats),
        outage,
        access,
        expected_zooming: zooming,
        power,
    };
    Ok((report, curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(zooming: f64, zoom: f64, sleeping: usize) -> PowerModel {
        PowerModel {
            transmit_power: 1.0,
            static_power: 200.0,
            sleep_power: 2.0,
            dynamic_slope: 3.77,
            zoom,
            cells: 19,
            active: 19 - sleeping,
            sleeping,
            zooming,
            constituents: None,
        }
    }

    #[test]
    fn network_power_constants() {
        let p = network_power(&model(0.0, 1.0, 0)).unwrap();
        assert!((p.total - 3871.63).abs() < 1e-9);
        assert_eq!(p.after_sleep, p.total);
        let p = network_power(&model(3.0, 1.0, 8)).unwrap();
        assert_eq!(p.after_zoom, p.after_sleep);
        assert!(p.after_sleep < p.total);
        let z = network_power(&model(3.0, 4.0, 8)).unwrap();
        assert!((z.after_zoom - z.after_sleep - 3.0 * 3.77 * 3.0).abs() < 1e-9);
    }

    #[test]
    fn constituents_must_match() {
        let c = PowerConstituents {
            processing: 100.0,
            cooling: 0.5,
            supply: 0.1,
            amplifier_efficiency: 0.4,
        };
        let mut m = model(0.0, 1.0, 0);
        m.constituents = Some(c);
        assert!(network_power(&m).is_err());
        m.static_power = c.static_power();
        m.dynamic_slope = c.dynamic_slope();
        assert!(network_power(&m).is_ok());
    }

    #[test]
    fn energy_ratio() {
        assert_eq!(energy_efficiency(0.0, 10.0).unwrap(), 0.0);
        assert_eq!(
            energy_efficiency(3.0, 2.0).unwrap(),
            2.0 * energy_efficiency(3.0, 4.0).unwrap()
        );
        assert!(energy_efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn average_over_row() {
        let v = average_spectral_efficiency(&[(1, 2.0), (4, 4.0)], &[(1, 0.5), (4, 0.5)]).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        assert_eq!(
            average_spectral_efficiency(&[(1, 2.0)], &[(1, 1.0)]).unwrap(),
            2.0
        );
    }
}
