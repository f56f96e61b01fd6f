//! Parameter counts and information criteria for choosing the number of
//! mixture components, plus the fit-every-order baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{initial_mixture, run_gibbs, GibbsConfig, Priors};

/// Free parameters of a univariate mixture: means, variances and `k - 1` weights.
pub fn param_count_univariate(k: usize) -> usize {
    3 * k - 1
}

/// Free parameters of a `d`-variate mixture with full covariances.
pub fn param_count_multivariate(k: usize, d: usize) -> usize {
    k * (d * d + 3 * d + 2) / 2 - 1
}

/// Parameters touched by fitting every order `1..=k_max` separately.
pub fn search_cost_univariate(k_max: usize) -> usize {
    (1..=k_max).map(param_count_univariate).sum()
}

pub fn search_cost_multivariate(k_max: usize, d: usize) -> usize {
    (1..=k_max).map(|k| param_count_multivariate(k, d)).sum()
}

/// Birth-death cost: the mixture parameters plus one death rate per component.
pub fn birth_death_cost_univariate(k_max: usize) -> usize {
    4 * k_max
}

pub fn birth_death_cost_multivariate(k_max: usize, d: usize) -> usize {
    k_max * (d * d + 3 * d + 4) / 2
}

pub fn aic(log_likelihood: f64, k: usize, d: usize) -> f64 {
    -2.0 * log_likelihood + (k * (d * d + 3 * d + 2)) as f64 - 2.0
}

pub fn bic(log_likelihood: f64, k: usize, d: usize, n: usize) -> f64 {
    let ln_n = (n as f64).ln();
    -2.0 * log_likelihood + ln_n * (k * (d * d + 3 * d + 2)) as f64 / 2.0 - ln_n
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionScan {
    /// Orders `1..=k_max`.
    pub orders: Vec<usize>,
    pub log_likelihood: Vec<f64>,
    pub aic: Vec<f64>,
    pub bic: Vec<f64>,
    pub k_aic: usize,
    pub k_bic: usize,
}

fn argmin(v: &[f64]) -> usize {
    // first minimum, so ties go to the smaller order
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best + 1
}

/// Fits orders `1..=k_max` with fixed-order chains and scores each at its
/// posterior mean.
pub fn select_by_criteria<R: Rng>(y: &[f64], k_max: usize, priors: &Priors, chain: &GibbsConfig, rng: &mut R) -> Result<CriterionScan> {
    if k_max == 0 {
        return Err(Error::Argument("k_max must be at least 1".into()));
    }
    let mut scan = CriterionScan { orders: (1..=k_max).collect(), log_likelihood: vec![], aic: vec![], bic: vec![], k_aic: 1, k_bic: 1 };
    for k in 1..=k_max {
        let run = run_gibbs(y, initial_mixture(y, k), priors, chain, rng)?;
        let ll = run.estimate.mixture().log_likelihood(y);
        scan.log_likelihood.push(ll);
        scan.aic.push(aic(ll, k, 1));
        scan.bic.push(bic(ll, k, 1, y.len()));
    }
    scan.k_aic = argmin(&scan.aic);
    scan.k_bic = argmin(&scan.bic);
    Ok(scan)
}
