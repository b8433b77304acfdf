//! Sweep axes of the figure commands.

use std::str::FromStr;

use sleepcell_core::scenario::Scenario;

use crate::CliError;

/// Cell whose load the `U2` axis varies.
pub const SWEPT_CELL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Load of cell 2.
    U2,
    /// Load threshold at or below which a BS sleeps.
    Threshold,
    /// Zoom factor `α`.
    Alpha,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::U2 => "U2",
            Self::Threshold => "U_th",
            Self::Alpha => "alpha",
        }
    }

    /// Scenario at sweep value `v`.
    pub fn apply(self, base: &Scenario, v: f64) -> Result<Scenario, CliError> {
        let mut s = base.clone();
        let count = || -> Result<u32, CliError> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(CliError::Usage(format!(
                    "{} needs whole values, got {v}",
                    self.name()
                )))
            }
        };
        let core = |e| CliError::core(&format!("{}={v}", self.name()), e);
        match self {
            Self::U2 => s.set_load(SWEPT_CELL, count()?).map_err(core)?,
            Self::Threshold => {
                if s.threshold.is_none() {
                    return Err(CliError::Config(
                        "the U_th axis needs a threshold-mode scenario".into(),
                    ));
                }
                s.set_threshold(count()?).map_err(core)?
            }
            Self::Alpha => s.set_zoom(v).map_err(core)?,
        }
        s.validate().map_err(core)?;
        Ok(s)
    }
}

/// `axis=start:step:end`, inclusive of `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub start: f64,
    pub step: f64,
    pub end: f64,
}

impl Sweep {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Sweep {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("sweep must be axis=start:step:end, got {text:?}"));
        let (axis, range) = text.split_once('=').ok_or_else(bad)?;
        let axis = match axis.trim() {
            "U2" => Axis::U2,
            "U_th" => Axis::Threshold,
            "alpha" => Axis::Alpha,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown sweep axis {other:?}; expected U2, U_th or alpha"
                )))
            }
        };
        let parts: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, step, end] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0 && end >= start && start.is_finite() && end.is_finite()) {
            return Err(CliError::Usage(format!(
                "sweep range must be nonempty and increasing, got {range}"
            )));
        }
        Ok(Self {
            axis,
            start,
            step,
            end,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_inclusive_ranges() {
        let s: Sweep = "U2=1:1:10".parse().unwrap();
        assert_eq!(s.axis, Axis::U2);
        assert_eq!(s.points().len(), 10);
        let s: Sweep = "alpha=1:0.5:3".parse().unwrap();
        assert_eq!(s.points(), vec![1.0, 1.5, 2.0, 2.5, 3.0]);
    }

    #[test]
    fn rejects_bad_sweeps() {
        assert!("U3=1:1:2".parse::<Sweep>().is_err());
        assert!("U2=3:1:1".parse::<Sweep>().is_err());
        assert!("U2=1:0:1".parse::<Sweep>().is_err());
        assert!("U2=1:1".parse::<Sweep>().is_err());
    }
}
