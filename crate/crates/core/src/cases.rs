//! Experiment configuration and the built-in benchmark cases.
//!
//! A config file is TOML. It names a built-in case and overrides any part of
//! it, or spells out a custom experiment in full. Every file carries
//! `version = 1`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bdmc::BdmcConfig;
use crate::error::{Error, Result};
use crate::grid::{Axis, AxisKind, Grid};
use crate::pinn::{NetworkConfig, PdeProblem, TrainConfig};
use crate::problem::{Equation, InitialProfile, SourceProfile};
use crate::region::RegionConfig;
use crate::schedule::{Region, Schedule};

pub const CONFIG_VERSION: u32 = 1;

/// Per-stage seeds. Every random choice in a run derives from one of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    pub observations: u64,
    pub noise: u64,
    pub network: u64,
    pub training: u64,
    pub estimation: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { observations: 1, noise: 2, network: 3, training: 4, estimation: 5 }
    }
}

impl Seeds {
    /// Offsets every stage seed by `base`, for the `--seed` override.
    pub fn shifted(self, base: u64) -> Seeds {
        Seeds {
            observations: self.observations.wrapping_add(base),
            noise: self.noise.wrapping_add(base),
            network: self.network.wrapping_add(base),
            training: self.training.wrapping_add(base),
            estimation: self.estimation.wrapping_add(base),
        }
    }
}

/// Settings for the mixture stage beyond the birth-death chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateConfig {
    /// Also fit every order up to this bound and score it with AIC/BIC.
    pub criteria_k_max: Option<usize>,
    /// Sample spread below which the field is treated as a single constant.
    pub constant_tolerance: f64,
    /// Smallest relative gap between neighbouring state means that counts
    /// as two states; closer states are merged and the chain refit.
    pub resolution: f64,
    /// Samples whose largest difference to a lattice neighbour exceeds this
    /// fraction of the sample range sit on a transition ramp and are left out
    /// of the mixture fit. `None` fits every sample.
    pub transition_tolerance: Option<f64>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { criteria_k_max: None, constant_tolerance: 1e-12, resolution: 0.1, transition_tolerance: Some(0.01) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructConfig {
    /// Nodes per axis of the dense grid relative to the reference grid.
    pub refine: usize,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig { refine: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Built-in case identifier, or any label for a custom experiment.
    pub case: String,
    pub equation: Equation,
    /// Spatial axes in order, then the time axis if the equation has one.
    pub axes: Vec<Axis>,
    /// Ground-truth schedule per coefficient.
    pub coefficients: Vec<Schedule>,
    #[serde(default)]
    pub initial: Option<InitialProfile>,
    #[serde(default)]
    pub source: Option<SourceProfile>,
    #[serde(default)]
    pub noise_variance: f64,
    pub observations: usize,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub bdmc: BdmcConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub reconstruct: ReconstructConfig,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("config version {} is not supported (expected {CONFIG_VERSION})", self.version)));
        }
        let eq = self.equation;
        self.grid()?;
        if self.axes.len() != eq.dim() {
            return Err(Error::Config(format!("{} needs {} axes, got {}", eq.name(), eq.dim(), self.axes.len())));
        }
        if self.coefficients.len() != eq.coefficient_count() {
            return Err(Error::Config(format!(
                "{} has {} coefficients, got {} schedules",
                eq.name(),
                eq.coefficient_count(),
                self.coefficients.len()
            )));
        }
        for s in &self.coefficients {
            s.validate()?;
            if s.is_spatial() != eq.spatial_coefficients() && !s.is_constant() {
                return Err(Error::Config(format!("{} coefficients vary in {}", eq.name(), if eq.spatial_coefficients() { "space" } else { "time" })));
            }
        }
        if eq.has_time() && self.initial.is_none() {
            return Err(Error::Config(format!("{} needs an initial profile", eq.name())));
        }
        if eq == Equation::Helmholtz && self.source.is_none() {
            return Err(Error::Config("helmholtz needs a source".into()));
        }
        if eq == Equation::Advection {
            return Err(Error::Config("the advection equation has no reference solver".into()));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::Config(format!("noise variance must be >= 0, got {}", self.noise_variance)));
        }
        if self.observations == 0 {
            return Err(Error::Config("need at least one observation".into()));
        }
        if self.reconstruct.refine == 0 {
            return Err(Error::Config("reconstruction refinement must be at least 1".into()));
        }
        self.bdmc.validate()
    }

    pub fn grid(&self) -> Result<Grid> {
        let spatial: Vec<Axis> = self.axes.iter().filter(|a| a.kind == AxisKind::Space).cloned().collect();
        let times: Vec<Axis> = self.axes.iter().filter(|a| a.kind == AxisKind::Time).cloned().collect();
        if times.len() > 1 {
            return Err(Error::Config("at most one time axis".into()));
        }
        if let Some(pos) = self.axes.iter().position(|a| a.kind == AxisKind::Time) {
            if pos + 1 != self.axes.len() {
                return Err(Error::Config("the time axis must come last".into()));
            }
        }
        for a in &self.axes {
            Axis::new(&a.name, a.kind, a.lower, a.upper, a.nodes)?;
        }
        Grid::new(spatial, times.into_iter().next())
    }

    pub fn problem(&self) -> PdeProblem {
        PdeProblem {
            equation: self.equation,
            bounds: self.axes.iter().map(|a| (a.lower, a.upper)).collect(),
            initial: self.initial.clone(),
            source: self.source.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::format("config", e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        match user.get("version") {
            Some(toml::Value::Integer(v)) if *v == CONFIG_VERSION as i64 => {}
            Some(v) => return Err(Error::Config(format!("config version {v} is not supported (expected {CONFIG_VERSION})"))),
            None => return Err(Error::Config("config is missing `version`".into())),
        }
        let merged = match user.get("case").and_then(|c| c.as_str()).and_then(builtin) {
            Some(base) => {
                let mut table = toml::Table::try_from(&base).map_err(|e| Error::format("config", e.to_string()))?;
                merge(&mut table, user);
                table
            }
            None => user,
        };
        let cfg: ExperimentConfig = toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Recursive table merge; `over` wins, arrays are replaced whole.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Identifiers of the built-in cases.
pub const BUILTIN_CASES: &[&str] = &["1.1", "1.2", "1.3", "2.1", "2.2", "3.1", "3.2", "3.3", "3.4", "3.5", "3.6", "5"];

fn axis(name: &str, kind: AxisKind, lower: f64, upper: f64, nodes: usize) -> Axis {
    Axis { name: name.into(), kind, lower, upper, nodes }
}

fn steps(breakpoints: &[f64], values: &[f64]) -> Schedule {
    Schedule::Piecewise { breakpoints: breakpoints.to_vec(), values: values.to_vec() }
}

/// Desk-scale defaults of a built-in case, or `None` for an unknown id.
pub fn builtin(id: &str) -> Option<ExperimentConfig> {
    use AxisKind::{Space, Time};
    let line = |lo: f64, hi: f64| vec![axis("x", Space, lo, hi, 256), axis("t", Time, 0.0, 10.0, 256)];
    let mut cfg = ExperimentConfig {
        version: CONFIG_VERSION,
        case: id.to_string(),
        equation: Equation::SineGordon,
        axes: line(0.0, 1.0),
        coefficients: vec![],
        initial: None,
        source: None,
        noise_variance: 0.0,
        observations: 4000,
        network: NetworkConfig { main_hidden: vec![32; 3], sub_hidden: vec![16; 2], ..NetworkConfig::default() },
        train: TrainConfig {
            iterations: 20_000,
            learning_rate: 2e-3,
            final_learning_rate: Some(1e-4),
            collocation: vec![64, 64],
            residual_batch: Some(512),
            observation_batch: Some(512),
            ..TrainConfig::default()
        },
        bdmc: BdmcConfig::default(),
        estimate: EstimateConfig::default(),
        region: RegionConfig::default(),
        reconstruct: ReconstructConfig::default(),
        seeds: Seeds::default(),
        output: None,
    };
    match id {
        "1.1" | "1.2" => {
            cfg.initial = Some(InitialProfile::SinePi);
            // several oscillation periods over the horizon need a wider solution net
            cfg.network.main_hidden = vec![64; 3];
            cfg.coefficients = vec![if id == "1.1" { Schedule::constant(1.0) } else { steps(&[5.0], &[0.5, 1.0]) }];
        }
        "1.3" => {
            cfg.equation = Equation::Wave2d;
            cfg.axes = vec![axis("x", Space, 0.0, 0.15, 48), axis("y", Space, 0.0, 0.45, 96), axis("t", Time, 0.0, 0.2, 64)];
            cfg.initial = Some(InitialProfile::Bump { center: [0.075, 0.3], width: 0.02, amplitude: 1.0 });
            cfg.coefficients = vec![Schedule::Region {
                region: Region::Disc { center: [0.1125, 0.225], radius: 0.03 },
                inside: 2.5,
                outside: 3.0,
            }];
            cfg.train.collocation = vec![24, 48, 32];
        }
        "2.1" | "2.2" => {
            cfg.equation = Equation::Fisher;
            cfg.axes = line(-6.0, 6.0);
            cfg.initial = Some(InitialProfile::Plateau);
            cfg.coefficients = vec![if id == "2.1" {
                steps(&[5.0], &[0.2, 0.1])
            } else {
                steps(&[2.0, 4.0, 6.0, 8.0], &[0.05, 0.1, 0.2, 0.1, 0.05])
            }];
        }
        "3.1" | "3.2" | "3.3" | "3.4" | "3.5" | "3.6" => {
            cfg.equation = Equation::Burgers;
            cfg.axes = line(-8.0, 8.0);
            cfg.initial = Some(InitialProfile::Gaussian { center: -1.0, width: 1.0 });
            let three = |a: f64, b: f64, c: f64| steps(&[2.0, 4.0, 6.0, 8.0], &[a, b, c, b, a]);
            let nu = Schedule::constant(0.1);
            cfg.coefficients = match id {
                "3.1" => vec![Schedule::constant(1.5), nu],
                "3.2" => vec![steps(&[5.0], &[0.5, 1.0]), nu],
                "3.3" => vec![three(1.0, 0.75, 0.5), nu],
                "3.4" => vec![three(1.0, 0.75, 0.5), three(1.0, 4.0 / 3.0, 2.0)],
                "3.5" => vec![Schedule::Ramp { t0: 305.0 / 64.0, t1: 675.0 / 128.0, start_value: 0.5, end_value: 1.0 }, nu],
                _ => vec![Schedule::Sinusoid { offset: -1.0, amplitude: -0.25, frequency: 1.0 }, nu],
            };
        }
        "5" => {
            cfg.equation = Equation::Helmholtz;
            cfg.axes = vec![axis("x", Space, -1.0, 1.0, 96), axis("y", Space, -1.0, 1.0, 96)];
            let k0 = 20.0;
            cfg.source = Some(SourceProfile::TruncatedGaussian { center: [0.5, 0.0], k0 });
            cfg.coefficients = vec![Schedule::Region {
                region: Region::Rect { lower: [-0.7, -0.25], upper: [-0.2, 0.25] },
                inside: k0 / 1.5,
                outside: k0,
            }];
            cfg.network.coefficient_init = vec![k0];
            cfg.train.collocation = vec![96, 96];
        }
        _ => return None,
    }
    Some(cfg)
}
