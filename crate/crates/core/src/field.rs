//! Solution fields on grids and scattered observation sets.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Values on every node of a grid, `channels` values per node, nodes in storage order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub grid: Grid,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl SolutionField {
    pub fn zeros(grid: Grid, channels: usize) -> Self {
        let n = grid.len() * channels;
        SolutionField { grid, channels, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Grid, channels: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(grid.len() * channels);
        for k in 0..grid.len() {
            let v = f(&grid.coords(k));
            debug_assert_eq!(v.len(), channels);
            values.extend(v);
        }
        SolutionField { grid, channels, values }
    }

    pub fn get(&self, node: usize, channel: usize) -> f64 {
        self.values[node * self.channels + channel]
    }

    /// Node values of one channel.
    pub fn channel(&self, channel: usize) -> Vec<f64> {
        self.values.iter().skip(channel).step_by(self.channels).copied().collect()
    }

    /// Copy with independent `N(0, variance)` noise added to every value.
    pub fn add_noise(&self, variance: f64, seed: u64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Argument(format!("noise variance must be >= 0, got {variance}")));
        }
        let mut out = self.clone();
        if variance == 0.0 {
            return Ok(out);
        }
        let normal = Normal::new(0.0, variance.sqrt()).expect("finite std");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut out.values {
            *v += normal.sample(&mut rng);
        }
        Ok(out)
    }

    /// Random subset of `count` distinct nodes, ordered by storage index.
    pub fn subsample(&self, count: usize, seed: u64) -> Result<ObservationSet> {
        let n = self.grid.len();
        if count == 0 || count > n {
            return Err(Error::Argument(format!("observation count {count} not in 1..={n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes = index::sample(&mut rng, n, count).into_vec();
        nodes.sort_unstable();
        Ok(self.observe(&nodes))
    }

    /// Observation set at the given storage indices.
    pub fn observe(&self, nodes: &[usize]) -> ObservationSet {
        let dim = self.grid.dim();
        let mut coords = Vec::with_capacity(nodes.len() * dim);
        let mut values = Vec::with_capacity(nodes.len() * self.channels);
        for &k in nodes {
            coords.extend(self.grid.coords(k));
            values.extend_from_slice(&self.values[k * self.channels..(k + 1) * self.channels]);
        }
        ObservationSet { dim, channels: self.channels, coords, values, nodes: nodes.to_vec() }
    }

    pub fn all_observations(&self) -> ObservationSet {
        let nodes: Vec<usize> = (0..self.grid.len()).collect();
        self.observe(&nodes)
    }
}

/// Scattered solution values; `coords` holds `dim` entries per point in the
/// order `(spatial..., t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub dim: usize,
    pub channels: usize,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    /// Storage index of each point in the source grid, when it came from one.
    pub nodes: Vec<usize>,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize, channel: usize) -> f64 {
        self.values[i * self.channels + channel]
    }
}
