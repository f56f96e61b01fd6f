//! Coefficient schedules: piecewise-constant in time, smooth variants, and
//! spatial region maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar region used by spatial coefficient maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Disc { center: [f64; 2], radius: f64 },
    Rect { lower: [f64; 2], upper: [f64; 2] },
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::Disc { center, radius } => {
                let (dx, dy) = (x - center[0], y - center[1]);
                dx * dx + dy * dy <= radius * radius
            }
            Region::Rect { lower, upper } => {
                x >= lower[0] && x <= upper[0] && y >= lower[1] && y <= upper[1]
            }
        }
    }
}

/// Ground-truth value of one PDE coefficient as a function of `(space, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { value: f64 },
    /// `values[i]` holds on `[breakpoints[i-1], breakpoints[i])`; the first value
    /// extends to `-inf` and the last to `+inf`.
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
    /// `start_value` before `t0`, linear on `[t0, t1)`, `end_value` from `t1`.
    Ramp { t0: f64, t1: f64, start_value: f64, end_value: f64 },
    /// `offset + amplitude * sin(frequency * t)`.
    Sinusoid { offset: f64, amplitude: f64, frequency: f64 },
    /// Spatial map with one value inside a region and another outside.
    Region { region: Region, inside: f64, outside: f64 },
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = Schedule::Piecewise { breakpoints, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match self {
            Schedule::Constant { value } if !finite(*value) => {
                Err(Error::Config(format!("non-finite constant coefficient {value}")))
            }
            Schedule::Piecewise { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::Config(format!(
                        "piecewise schedule needs {} values for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Config("piecewise breakpoints must be strictly increasing".into()));
                }
                if !breakpoints.iter().chain(values).all(|&v| finite(v)) {
                    return Err(Error::Config("non-finite entry in piecewise schedule".into()));
                }
                Ok(())
            }
            Schedule::Ramp { t0, t1, start_value, end_value } => {
                if !(t0 < t1) || ![*t0, *t1, *start_value, *end_value].iter().all(|&v| finite(v)) {
                    return Err(Error::Config("ramp schedule needs finite t0 < t1".into()));
                }
                Ok(())
            }
            Schedule::Sinusoid { offset, amplitude, frequency }
                if ![*offset, *amplitude, *frequency].iter().all(|&v| finite(v)) =>
            {
                Err(Error::Config("non-finite sinusoid schedule".into()))
            }
            Schedule::Region { region, inside, outside } => {
                if !finite(*inside) || !finite(*outside) {
                    return Err(Error::Config("non-finite region coefficient".into()));
                }
                match region {
                    Region::Disc { radius, .. } if !(*radius > 0.0) => {
                        Err(Error::Config("disc radius must be positive".into()))
                    }
                    Region::Rect { lower, upper } if !(lower[0] < upper[0] && lower[1] < upper[1]) => {
                        Err(Error::Config("rectangle needs lower < upper".into()))
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn is_spatial(&self) -> bool {
        matches!(self, Schedule::Region { .. })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant { .. })
    }

    pub fn at_time(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant { value } => *value,
            Schedule::Piecewise { breakpoints, values } => {
                values[breakpoints.partition_point(|&b| b <= t)]
            }
            Schedule::Ramp { t0, t1, start_value, end_value } => {
                if t < *t0 {
                    *start_value
                } else if t < *t1 {
                    start_value + (end_value - start_value) * (t - t0) / (t1 - t0)
                } else {
                    *end_value
                }
            }
            Schedule::Sinusoid { offset, amplitude, frequency } => offset + amplitude * (frequency * t).sin(),
            Schedule::Region { outside, .. } => *outside,
        }
    }

    pub fn at_point(&self, x: f64, y: f64) -> f64 {
        match self {
            Schedule::Region { region, inside, outside } => {
                if region.contains(x, y) {
                    *inside
                } else {
                    *outside
                }
            }
            other => other.at_time(0.0),
        }
    }

    /// Value at coordinates `(spatial..., t)`; `has_time` tells whether the last
    /// entry is time.
    pub fn eval(&self, coords: &[f64], has_time: bool) -> f64 {
        if self.is_spatial() {
            let y = if coords.len() > 1 + usize::from(has_time) { coords[1] } else { 0.0 };
            self.at_point(coords[0], y)
        } else if has_time {
            self.at_time(coords[coords.len() - 1])
        } else {
            self.at_time(0.0)
        }
    }

    /// Distinct regime values, in order of first appearance.
    pub fn levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let raw: Vec<f64> = match self {
            Schedule::Constant { value } => vec![*value],
            Schedule::Piecewise { values, .. } => values.clone(),
            Schedule::Ramp { start_value, end_value, .. } => vec![*start_value, *end_value],
            Schedule::Sinusoid { offset, .. } => vec![*offset],
            Schedule::Region { inside, outside, .. } => vec![*outside, *inside],
        };
        for v in raw {
            if !out.iter().any(|&o| o == v) {
                out.push(v);
            }
        }
        out
    }

    /// Largest absolute value over `[0, horizon]` (or over space for region maps).
    pub fn max_abs(&self, horizon: f64) -> f64 {
        match self {
            Schedule::Sinusoid { offset, amplitude, frequency } => {
                if (frequency * horizon).abs() >= std::f64::consts::PI {
                    offset.abs() + amplitude.abs()
                } else {
                    let n = 1000;
                    (0..=n)
                        .map(|i| self.at_time(horizon * i as f64 / n as f64).abs())
                        .fold(0.0, f64::max)
                }
            }
            _ => self.levels().iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn min_value(&self, horizon: f64) -> f64 {
        match self {
            Schedule::Sinusoid { .. } => {
                let n = 1000;
                (0..=n).map(|i| self.at_time(horizon * i as f64 / n as f64)).fold(f64::INFINITY, f64::min)
            }
            _ => self.levels().iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}
