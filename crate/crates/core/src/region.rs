//! Marks grid nodes near coefficient jumps from mixture membership probabilities.
//!
//! At each node the uncertainty is `1 - sum_k prod_{m in stencil} P(S_m = k)`
//! over the node and its axis neighbours (edges clamped). It is near one where
//! neighbouring nodes disagree on their regime. Nodes above the threshold are
//! flagged and the mask grows by a physical distance around them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FlattenMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionConfig {
    pub threshold: f64,
    /// Dilation distance; `None` means half the mean grid spacing.
    pub dilation: Option<f64>,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig { threshold: 0.9, dilation: None }
    }
}

/// Node layout: storage shape plus physical spacing per storage axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub map: FlattenMap,
    pub spacing: Vec<f64>,
}

impl Lattice {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        if shape.len() != spacing.len() || shape.is_empty() {
            return Err(Error::Argument("lattice shape and spacing lengths differ".into()));
        }
        if spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Argument("lattice spacing must be positive".into()));
        }
        Ok(Lattice { map: FlattenMap::new(shape), spacing })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn mean_spacing(&self) -> f64 {
        self.spacing.iter().sum::<f64>() / self.spacing.len() as f64
    }
}

/// Uncertainty at every node. `probs` holds `k` membership probabilities per node.
pub fn uncertainty(lattice: &Lattice, probs: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = lattice.len();
    if k == 0 || probs.len() != n * k {
        return Err(Error::Argument(format!("expected {} probabilities ({n} nodes x {k}), got {}", n * k, probs.len())));
    }
    let shape = lattice.map.shape().to_vec();
    let mut out = vec![0.0; n];
    let mut stencil = Vec::with_capacity(1 + 2 * shape.len());
    for (node, slot) in out.iter_mut().enumerate() {
        let idx = lattice.map.unflatten(node);
        stencil.clear();
        stencil.push(node);
        let mut nb = idx.clone();
        for (axis, &len) in shape.iter().enumerate() {
            let i = idx[axis];
            nb[axis] = i.saturating_sub(1);
            stencil.push(lattice.map.flatten(&nb));
            nb[axis] = (i + 1).min(len - 1);
            stencil.push(lattice.map.flatten(&nb));
            nb[axis] = i;
        }
        let agree: f64 = (0..k).map(|c| stencil.iter().map(|&m| probs[m * k + c]).product::<f64>()).sum();
        *slot = (1.0 - agree).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Flags nodes with uncertainty at or above the threshold and dilates the set.
pub fn mask(lattice: &Lattice, uncertainty: &[f64], config: &RegionConfig) -> Result<Vec<bool>> {
    if uncertainty.len() != lattice.len() {
        return Err(Error::Argument("uncertainty field does not match the lattice".into()));
    }
    if !(0.0..=1.0).contains(&config.threshold) {
        return Err(Error::Config(format!("threshold {} outside [0, 1]", config.threshold)));
    }
    let radius = config.dilation.unwrap_or(0.5 * lattice.mean_spacing());
    if !(radius >= 0.0) {
        return Err(Error::Config("dilation distance must be >= 0".into()));
    }
    let shape = lattice.map.shape().to_vec();
    let reach: Vec<usize> = lattice.spacing.iter().map(|h| (radius / h).floor() as usize).collect();
    let mut out = vec![false; lattice.len()];
    let mut offset = vec![0i64; shape.len()];
    for (node, &f) in uncertainty.iter().enumerate() {
        if f < config.threshold {
            continue;
        }
        let idx = lattice.map.unflatten(node);
        // walk the box of offsets and keep those within the radius
        for (o, &r) in offset.iter_mut().zip(&reach) {
            *o = -(r as i64);
        }
        loop {
            let mut dist2 = 0.0;
            let mut target = Vec::with_capacity(shape.len());
            let mut inside = true;
            for a in 0..shape.len() {
                let j = idx[a] as i64 + offset[a];
                if j < 0 || j >= shape[a] as i64 {
                    inside = false;
                    break;
                }
                target.push(j as usize);
                dist2 += (offset[a] as f64 * lattice.spacing[a]).powi(2);
            }
            if inside && dist2 <= radius * radius * (1.0 + 1e-12) {
                out[lattice.map.flatten(&target)] = true;
            }
            let mut a = 0;
            loop {
                if a == shape.len() {
                    break;
                }
                if offset[a] < reach[a] as i64 {
                    offset[a] += 1;
                    break;
                }
                offset[a] = -(reach[a] as i64);
                a += 1;
            }
            if a == shape.len() {
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hard_probs(labels: &[usize], k: usize) -> Vec<f64> {
        labels.iter().flat_map(|&l| (0..k).map(move |c| if c == l { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn single_regime_gives_empty_mask() {
        let lat = Lattice::new(vec![8, 8], vec![1.0, 1.0]).unwrap();
        let probs = vec![1.0; 64];
        let f = uncertainty(&lat, &probs, 1).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
        assert!(mask(&lat, &f, &RegionConfig::default()).unwrap().iter().all(|&m| !m));
    }

    #[test]
    fn step_in_one_dimension_flags_both_sides() {
        let lat = Lattice::new(vec![10], vec![0.1]).unwrap();
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let f = uncertainty(&lat, &hard_probs(&labels, 2), 2).unwrap();
        let flagged: Vec<usize> = (0..10).filter(|&i| f[i] >= 0.9).collect();
        assert_eq!(flagged, vec![4, 5]);
        let m = mask(&lat, &f, &RegionConfig { threshold: 0.9, dilation: Some(0.1) }).unwrap();
        let masked: Vec<usize> = (0..10).filter(|&i| m[i]).collect();
        assert_eq!(masked, vec![3, 4, 5, 6]);
    }
}
