use serde::{Deserialize, Serialize};

use super::model::DualNetwork;
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::grid::Grid;

/// Coefficient values sampled on the coefficient's own grid axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSamples {
    /// Axis names of the sample coordinates.
    pub axes: Vec<String>,
    /// Storage shape of the sample lattice.
    pub shape: Vec<usize>,
    /// Spacing per storage axis.
    pub spacing: Vec<f64>,
    /// `len x axes`, row-major.
    pub coords: Vec<f64>,
    pub names: Vec<String>,
    /// One series per coefficient.
    pub values: Vec<Vec<f64>>,
}

impl CoefficientSamples {
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluates the coefficient model on the time axis of `grid` (time-varying
/// coefficients) or on its spatial lattice (space-varying coefficients).
pub fn sample_coefficients(net: &DualNetwork, grid: &Grid, names: &[&str]) -> Result<CoefficientSamples> {
    let spatial = net.coefficient_axes.len() > 1 || grid.time().is_none();
    let (axes, coords, shape, spacing) = if spatial {
        let axes = grid.spatial();
        if axes.len() != net.coefficient_axes.len() {
            return Err(Error::Config("coefficient arguments do not match the grid".into()));
        }
        let sub = crate::grid::Grid::new(axes.to_vec(), None)?;
        (
            sub.coord_names(),
            sub.all_coords(),
            axes.iter().map(|a| a.nodes).collect::<Vec<_>>(),
            axes.iter().map(|a| a.step()).collect::<Vec<_>>(),
        )
    } else {
        let t = grid.time().ok_or_else(|| Error::Config("time-varying coefficient needs a time axis".into()))?;
        (vec![t.name.clone()], t.coords(), vec![t.nodes], vec![t.step()])
    };
    let n = shape.iter().product();
    let eval = net.coefficients.evaluate(&coords, n, false)?;
    let p = net.coefficients.count();
    let values = (0..p).map(|k| (0..n).map(|i| eval.values[i * p + k]).collect()).collect();
    Ok(CoefficientSamples { axes, shape, spacing, coords, names: names.iter().map(|s| s.to_string()).collect(), values })
}

/// Main-network prediction on every node of `grid`.
pub fn reconstruct(net: &DualNetwork, grid: &Grid) -> Result<SolutionField> {
    let dim = grid.dim();
    if dim != net.main.inputs() {
        return Err(Error::Argument(format!("grid has {dim} coordinates, network takes {}", net.main.inputs())));
    }
    let coords = grid.all_coords();
    let mut values = Vec::with_capacity(grid.len() * net.main.outputs());
    for chunk in coords.chunks(4096 * dim) {
        values.extend(net.main.forward(chunk)?);
    }
    Ok(SolutionField { grid: grid.clone(), channels: net.main.outputs(), values })
}

/// Mean squared difference over all nodes and channels.
pub fn mse(predicted: &SolutionField, reference: &SolutionField) -> Result<f64> {
    if predicted.grid != reference.grid || predicted.channels != reference.channels {
        return Err(Error::Argument("fields live on different grids".into()));
    }
    let n = predicted.values.len() as f64;
    Ok(predicted.values.iter().zip(&reference.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n)
}
