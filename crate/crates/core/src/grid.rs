//! Rectilinear space-time grids and row-major flattening.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Space,
    Time,
}

/// Uniformly spaced closed interval `[lower, upper]` with `nodes` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub kind: AxisKind,
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn new(name: &str, kind: AxisKind, lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
            return Err(Error::Config(format!(
                "axis {name}: need finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        if nodes < 2 {
            return Err(Error::Config(format!("axis {name}: need at least 2 nodes, got {nodes}")));
        }
        Ok(Axis { name: name.to_string(), kind, lower, upper, nodes })
    }

    pub fn space(name: &str, lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        Self::new(name, AxisKind::Space, lower, upper, nodes)
    }

    pub fn time(upper: f64, nodes: usize) -> Result<Self> {
        Self::new("t", AxisKind::Time, 0.0, upper, nodes)
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / (self.nodes - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.upper
        } else {
            self.lower + i as f64 * self.step()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.coord(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Row-major index map for an n-dimensional array; the first axis is the slowest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlattenMap {
    shape: Vec<usize>,
}

impl FlattenMap {
    pub fn new(shape: Vec<usize>) -> Self {
        FlattenMap { shape }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| {
                debug_assert!(i < n);
                acc * n + i
            })
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.shape.len()];
        for (slot, &n) in out.iter_mut().zip(&self.shape).rev() {
            *slot = flat % n;
            flat /= n;
        }
        out
    }
}

/// Spatial axes plus an optional time axis.
///
/// Coordinates are always reported in the order `(spatial..., t)`. Storage
/// order puts time slowest, followed by the spatial axes in declared order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    spatial: Vec<Axis>,
    time: Option<Axis>,
}

impl Grid {
    pub fn new(spatial: Vec<Axis>, time: Option<Axis>) -> Result<Self> {
        if spatial.is_empty() {
            return Err(Error::Config("grid needs at least one spatial axis".into()));
        }
        if spatial.iter().any(|a| a.kind != AxisKind::Space) {
            return Err(Error::Config("spatial axis list contains a time axis".into()));
        }
        if let Some(t) = &time {
            if t.kind != AxisKind::Time {
                return Err(Error::Config("time axis must have kind time".into()));
            }
        }
        Ok(Grid { spatial, time })
    }

    pub fn spatial(&self) -> &[Axis] {
        &self.spatial
    }

    pub fn time(&self) -> Option<&Axis> {
        self.time.as_ref()
    }

    /// Number of coordinates per node, time included.
    pub fn dim(&self) -> usize {
        self.spatial.len() + usize::from(self.time.is_some())
    }

    pub fn spatial_len(&self) -> usize {
        self.spatial.iter().map(|a| a.nodes).product()
    }

    pub fn time_len(&self) -> usize {
        self.time.as_ref().map_or(1, |a| a.nodes)
    }

    pub fn len(&self) -> usize {
        self.spatial_len() * self.time_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axes in storage order (time first when present).
    pub fn storage_axes(&self) -> Vec<&Axis> {
        self.time.iter().chain(self.spatial.iter()).collect()
    }

    /// Axes in coordinate order (time last when present).
    pub fn coord_axes(&self) -> Vec<&Axis> {
        self.spatial.iter().chain(self.time.iter()).collect()
    }

    pub fn flatten_map(&self) -> FlattenMap {
        FlattenMap::new(self.storage_axes().iter().map(|a| a.nodes).collect())
    }

    /// Physical coordinates `(spatial..., t)` of a storage index.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let idx = self.flatten_map().unflatten(flat);
        let (t_idx, s_idx) = if self.time.is_some() { (Some(idx[0]), &idx[1..]) } else { (None, &idx[..]) };
        let mut out: Vec<f64> = self.spatial.iter().zip(s_idx).map(|(a, &i)| a.coord(i)).collect();
        if let (Some(t), Some(i)) = (&self.time, t_idx) {
            out.push(t.coord(i));
        }
        out
    }

    /// All node coordinates, row per node in storage order.
    pub fn all_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.dim());
        for k in 0..self.len() {
            out.extend(self.coords(k));
        }
        out
    }

    /// Axis names in coordinate order, used for file headers.
    pub fn coord_names(&self) -> Vec<String> {
        self.coord_axes().iter().map(|a| a.name.clone()).collect()
    }
}
