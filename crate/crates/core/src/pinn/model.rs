use serde::{Deserialize, Serialize};

use super::residual::PdeProblem;
use crate::error::{Error, Result};
use crate::net::{Head, JetBatch, JetSpec, JetTape, Mlp, MlpCheckpoint};

/// How the unknown coefficients are represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Coefficient network over the coefficient's arguments, residual
    /// weighted by the coefficient gradient.
    Gws,
    /// One learnable scalar per coefficient, unweighted residual.
    Std,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub main_hidden: Vec<usize>,
    pub sub_hidden: Vec<usize>,
    pub mode: Mode,
    /// Starting value of every coefficient.
    pub coefficient_init: Vec<f64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { main_hidden: vec![64; 4], sub_hidden: vec![32; 3], mode: Mode::Gws, coefficient_init: Vec::new() }
    }
}

/// Coefficient representation.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientModel {
    Network(Mlp),
    Scalars { raw: Vec<f64>, heads: Vec<Head> },
}

/// Coefficient values at a batch of points.
pub struct CoefficientEval {
    pub points: usize,
    /// `points x count`, row-major.
    pub values: Vec<f64>,
    /// Squared gradient norm over the coefficient's arguments, summed over
    /// coefficients; zeros for scalar coefficients.
    pub grad_norm2: Vec<f64>,
    tape: Option<JetTape>,
}

impl CoefficientModel {
    pub fn count(&self) -> usize {
        match self {
            CoefficientModel::Network(m) => m.outputs(),
            CoefficientModel::Scalars { raw, .. } => raw.len(),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            CoefficientModel::Network(m) => m.params(),
            CoefficientModel::Scalars { raw, .. } => raw,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            CoefficientModel::Network(m) => m.params_mut(),
            CoefficientModel::Scalars { raw, .. } => raw,
        }
    }

    /// Evaluates at `inputs` (coefficient arguments per point).
    pub fn evaluate(&self, inputs: &[f64], points: usize, with_gradient: bool) -> Result<CoefficientEval> {
        match self {
            CoefficientModel::Network(m) => {
                let axes: Vec<usize> = (0..m.inputs()).collect();
                let spec = if with_gradient { JetSpec::new(&axes, &[]) } else { JetSpec::value() };
                let tape = m.forward_jet(inputs, &spec)?;
                let p = m.outputs();
                let out = &tape.output;
                let values = out.data[..points * p].to_vec();
                let grad_norm2 = (0..points)
                    .map(|i| {
                        if !with_gradient {
                            return 0.0;
                        }
                        let mut s = 0.0;
                        for o in 0..p {
                            for &a in &axes {
                                s += out.d(i, o, a).powi(2);
                            }
                        }
                        s
                    })
                    .collect();
                Ok(CoefficientEval { points, values, grad_norm2, tape: Some(tape) })
            }
            CoefficientModel::Scalars { raw, heads } => {
                let v: Vec<f64> = raw.iter().zip(heads).map(|(&r, h)| h.apply(r)).collect();
                let values = (0..points).flat_map(|_| v.iter().copied()).collect();
                Ok(CoefficientEval { points, values, grad_norm2: vec![0.0; points], tape: None })
            }
        }
    }

    /// Accumulates parameter gradients given `d loss / d value` per point and coefficient.
    pub fn backward_into(&self, eval: &CoefficientEval, dvalues: &[f64], grad: &mut [f64]) {
        match self {
            CoefficientModel::Network(m) => {
                let tape = eval.tape.as_ref().expect("network evaluation keeps its tape");
                let mut seed = JetBatch::zeros(tape.spec().clone(), eval.points, m.outputs());
                seed.data[..dvalues.len()].copy_from_slice(dvalues);
                m.backward_into(tape, &seed, grad);
            }
            CoefficientModel::Scalars { raw, heads } => {
                let p = raw.len();
                for (k, (&r, h)) in raw.iter().zip(heads).enumerate() {
                    let slope = h.eval(r)[1];
                    let total: f64 = (0..eval.points).map(|i| dvalues[i * p + k]).sum();
                    grad[k] += total * slope;
                }
            }
        }
    }
}

/// Solution network plus coefficient model.
#[derive(Clone, Debug, PartialEq)]
pub struct DualNetwork {
    pub main: Mlp,
    pub coefficients: CoefficientModel,
    /// Coordinate indices feeding the coefficient model.
    pub coefficient_axes: Vec<usize>,
}

/// Serialised dual network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCheckpoint {
    pub main: MlpCheckpoint,
    pub coefficient_network: Option<MlpCheckpoint>,
    pub coefficient_scalars: Option<Vec<f64>>,
    pub coefficient_heads: Vec<Head>,
    pub coefficient_axes: Vec<usize>,
}

impl DualNetwork {
    pub fn new(problem: &PdeProblem, config: &NetworkConfig, seed: u64) -> Result<Self> {
        let eq = problem.equation;
        if problem.bounds.len() != eq.dim() {
            return Err(Error::Config(format!("{} needs {} coordinate bounds", eq.name(), eq.dim())));
        }
        let lower: Vec<f64> = problem.bounds.iter().map(|b| b.0).collect();
        let upper: Vec<f64> = problem.bounds.iter().map(|b| b.1).collect();
        let mut sizes = vec![eq.dim()];
        sizes.extend(&config.main_hidden);
        sizes.push(eq.outputs());
        let main = Mlp::new(&sizes, vec![Head::Identity; eq.outputs()], seed)?.with_input_box(&lower, &upper)?;
        let heads = eq.coefficient_heads();
        let init = if config.coefficient_init.is_empty() {
            vec![1.0; heads.len()]
        } else if config.coefficient_init.len() == heads.len() {
            config.coefficient_init.clone()
        } else {
            return Err(Error::Config(format!("{} coefficient start values for {} coefficients", config.coefficient_init.len(), heads.len())));
        };
        let axes = eq.coefficient_axes();
        let coefficients = match config.mode {
            Mode::Gws => {
                let mut sizes = vec![axes.len()];
                sizes.extend(&config.sub_hidden);
                sizes.push(heads.len());
                let lo: Vec<f64> = axes.iter().map(|&a| lower[a]).collect();
                let hi: Vec<f64> = axes.iter().map(|&a| upper[a]).collect();
                let mut sub = Mlp::new(&sizes, heads, seed.wrapping_add(1))?.with_input_box(&lo, &hi)?;
                sub.set_output_bias(&init);
                CoefficientModel::Network(sub)
            }
            Mode::Std => {
                let raw = heads.iter().zip(&init).map(|(h, &v)| h.inverse(v)).collect();
                CoefficientModel::Scalars { raw, heads }
            }
        };
        Ok(DualNetwork { main, coefficients, coefficient_axes: axes })
    }

    pub fn mode(&self) -> Mode {
        match self.coefficients {
            CoefficientModel::Network(_) => Mode::Gws,
            CoefficientModel::Scalars { .. } => Mode::Std,
        }
    }

    /// Coefficient arguments of points given in full coordinates.
    pub fn coefficient_inputs(&self, coords: &[f64], dim: usize) -> Vec<f64> {
        coords.chunks(dim).flat_map(|p| self.coefficient_axes.iter().map(move |&a| p[a])).collect()
    }

    pub fn to_checkpoint(&self) -> DualCheckpoint {
        let (net, scalars, heads) = match &self.coefficients {
            CoefficientModel::Network(m) => (Some(m.to_checkpoint()), None, m.heads().to_vec()),
            CoefficientModel::Scalars { raw, heads } => (None, Some(raw.clone()), heads.clone()),
        };
        DualCheckpoint {
            main: self.main.to_checkpoint(),
            coefficient_network: net,
            coefficient_scalars: scalars,
            coefficient_heads: heads,
            coefficient_axes: self.coefficient_axes.clone(),
        }
    }

    pub fn from_checkpoint(c: &DualCheckpoint) -> Result<Self> {
        let main = Mlp::from_checkpoint(&c.main)?;
        let coefficients = match (&c.coefficient_network, &c.coefficient_scalars) {
            (Some(m), None) => CoefficientModel::Network(Mlp::from_checkpoint(m)?),
            (None, Some(raw)) if raw.len() == c.coefficient_heads.len() => {
                CoefficientModel::Scalars { raw: raw.clone(), heads: c.coefficient_heads.clone() }
            }
            _ => return Err(Error::format("checkpoint", "expected exactly one coefficient representation")),
        };
        Ok(DualNetwork { main, coefficients, coefficient_axes: c.coefficient_axes.clone() })
    }
}
