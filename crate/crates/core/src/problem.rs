//! Equation families, initial profiles and forcing terms.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::net::Head;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `u_tt = alpha(t) u_xx + sin u`
    SineGordon,
    /// `u_tt = alpha(x, y) (u_xx + u_yy)`
    Wave2d,
    /// `u_t = c(t) u_xx + u - u^2`
    Fisher,
    /// `u_t = l1(t) u u_x + l2(t) u_xx`
    Burgers,
    /// `u_xx + u_yy + k(x, y)^2 u = f`, complex `u = v + i w`
    Helmholtz,
    /// `u_t = c u_x`, used for sanity checks of the trainer
    Advection,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::SineGordon => "sine_gordon",
            Equation::Wave2d => "wave2d",
            Equation::Fisher => "fisher",
            Equation::Burgers => "burgers",
            Equation::Helmholtz => "helmholtz",
            Equation::Advection => "advection",
        }
    }

    pub fn spatial_dims(self) -> usize {
        match self {
            Equation::Wave2d | Equation::Helmholtz => 2,
            _ => 1,
        }
    }

    pub fn has_time(self) -> bool {
        self != Equation::Helmholtz
    }

    /// Number of input coordinates `(spatial..., t)`.
    pub fn dim(self) -> usize {
        self.spatial_dims() + usize::from(self.has_time())
    }

    /// Solution components.
    pub fn outputs(self) -> usize {
        if self == Equation::Helmholtz {
            2
        } else {
            1
        }
    }

    pub fn coefficient_names(self) -> &'static [&'static str] {
        match self {
            Equation::SineGordon | Equation::Wave2d => &["alpha"],
            Equation::Fisher => &["c"],
            Equation::Burgers => &["lambda1", "lambda2"],
            Equation::Helmholtz => &["k"],
            Equation::Advection => &["c"],
        }
    }

    pub fn coefficient_count(self) -> usize {
        self.coefficient_names().len()
    }

    /// Output maps of the coefficient model; positive coefficients use softplus.
    pub fn coefficient_heads(self) -> Vec<Head> {
        match self {
            Equation::Burgers => vec![Head::Identity, Head::Softplus],
            Equation::Advection => vec![Head::Identity],
            _ => vec![Head::Softplus],
        }
    }

    /// Whether the coefficients depend on space (otherwise on time).
    pub fn spatial_coefficients(self) -> bool {
        matches!(self, Equation::Wave2d | Equation::Helmholtz)
    }

    /// Coordinate indices the coefficient depends on.
    pub fn coefficient_axes(self) -> Vec<usize> {
        if self.spatial_coefficients() {
            (0..self.spatial_dims()).collect()
        } else {
            vec![self.spatial_dims()]
        }
    }

    pub fn second_order_in_time(self) -> bool {
        matches!(self, Equation::SineGordon | Equation::Wave2d)
    }
}

/// Initial displacement profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    /// `sin(pi x)`
    SinePi,
    /// `exp(10 (x + 1))` for `x < -1`, 1 on `[-1, 1]`, `exp(-10 (x - 1))` for `x > 1`
    Plateau,
    /// `exp(-((x - center) / width)^2)`
    Gaussian { center: f64, width: f64 },
    /// `amplitude * exp(-|p - center|^2 / (2 width^2))`
    Bump { center: [f64; 2], width: f64, amplitude: f64 },
    /// `exp(-(x + c t - center)^2 / width^2)` at `t = 0`; the travelling-wave
    /// solution of the advection equation.
    Pulse { center: f64, width: f64 },
}

impl InitialProfile {
    pub fn eval(&self, p: &[f64]) -> f64 {
        let x = p[0];
        match self {
            InitialProfile::SinePi => (PI * x).sin(),
            InitialProfile::Plateau => {
                if x < -1.0 {
                    (10.0 * (x + 1.0)).exp()
                } else if x <= 1.0 {
                    1.0
                } else {
                    (-10.0 * (x - 1.0)).exp()
                }
            }
            InitialProfile::Gaussian { center, width } => (-((x - center) / width).powi(2)).exp(),
            InitialProfile::Bump { center, width, amplitude } => {
                let r2 = (x - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            InitialProfile::Pulse { center, width } => (-((x - center) / width).powi(2)).exp(),
        }
    }
}

/// Right-hand sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceProfile {
    /// `-1 / (2 a sqrt(pi)) exp(-(r / a)^2)` for `r < 0.5`, `a = pi / k0`
    TruncatedGaussian { center: [f64; 2], k0: f64 },
}

impl SourceProfile {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            SourceProfile::TruncatedGaussian { center, k0 } => {
                let a = PI / k0;
                let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                if r < 0.5 {
                    -1.0 / (2.0 * a * PI.sqrt()) * (-(r / a).powi(2)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}
