//! Birth-death Markov chain over the number of mixture components.
//!
//! Births arrive at a fixed rate with weight `Beta(1, k)` and parameters drawn
//! from the priors; each component dies at the rate that balances births
//! under the chosen prior on the number of components. Between events the
//! continuous parameters are refreshed by Gibbs sweeps on a fixed clock of
//! process time. The selected order is the one with the longest occupation
//! time.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{self, draw_from_prior, gibbs_sweep, initial_mixture, Component, GibbsConfig, GibbsRun, Mixture, Priors};

/// Prior on the number of components, truncated to `1..=ceiling`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderPrior {
    Uniform,
    Poisson { mean: f64 },
}

impl OrderPrior {
    /// `ln p(k - 1) - ln p(k)`.
    pub fn log_ratio_down(&self, k: usize) -> f64 {
        match self {
            OrderPrior::Uniform => 0.0,
            OrderPrior::Poisson { mean } => (k as f64).ln() - mean.ln(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BdmcConfig {
    pub birth_rate: f64,
    /// Total process time.
    pub horizon: f64,
    pub initial_k: usize,
    /// Largest number of components; births are switched off there.
    pub ceiling: usize,
    pub order_prior: OrderPrior,
    /// Process time between Gibbs refreshes of the continuous parameters.
    pub refresh_interval: f64,
    pub sweeps_per_refresh: usize,
    /// Fail with [`Error::CeilingReached`] instead of treating the ceiling as
    /// the edge of the prior support.
    pub strict_ceiling: bool,
    /// Fixed-order chain run at the selected order.
    pub final_chain: GibbsConfig,
}

impl Default for BdmcConfig {
    fn default() -> Self {
        BdmcConfig {
            birth_rate: 1.0,
            horizon: 200.0,
            initial_k: 1,
            ceiling: 10,
            order_prior: OrderPrior::Poisson { mean: 1.0 },
            refresh_interval: 1.0,
            sweeps_per_refresh: 10,
            strict_ceiling: false,
            final_chain: GibbsConfig::default(),
        }
    }
}

impl BdmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.birth_rate > 0.0 && self.horizon > 0.0 && self.refresh_interval > 0.0) {
            return Err(Error::Config("birth rate, horizon and refresh interval must be positive".into()));
        }
        if let OrderPrior::Poisson { mean } = self.order_prior {
            if !(mean > 0.0) {
                return Err(Error::Config("order prior mean must be positive".into()));
            }
        }
        if self.initial_k == 0 || self.initial_k > self.ceiling {
            return Err(Error::Config(format!(
                "initial order {} must lie in 1..={}",
                self.initial_k, self.ceiling
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Birth,
    Death,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub k_before: usize,
    pub k_after: usize,
}

#[derive(Clone, Debug)]
pub struct BdmcRun {
    pub k_hat: usize,
    /// Occupation time per order.
    pub visits: BTreeMap<usize, f64>,
    pub events: Vec<Event>,
    pub final_state: Mixture,
}

impl BdmcRun {
    pub fn occupation_fractions(&self) -> BTreeMap<usize, f64> {
        let total: f64 = self.visits.values().sum();
        self.visits.iter().map(|(&k, &t)| (k, t / total)).collect()
    }
}

/// Per-sample log terms `ln eta_j + ln N(y_i; mu_j, sigma2_j)` reduced to
/// what the death rates need.
struct Terms {
    /// `exp(l_ij - m_i)`, row-major `n x k`.
    scaled: Vec<f64>,
    row_max: Vec<f64>,
    k: usize,
}

impl Terms {
    fn new(mixture: &Mixture, y: &[f64]) -> Self {
        let k = mixture.k();
        let mut scaled = vec![0.0; y.len() * k];
        let mut row_max = vec![0.0; y.len()];
        for (i, &v) in y.iter().enumerate() {
            let row = &mut scaled[i * k..(i + 1) * k];
            for (slot, c) in row.iter_mut().zip(&mixture.components) {
                *slot = c.eta.ln() + gmm::log_normal(v, c.mu, c.sigma2);
            }
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for slot in row.iter_mut() {
                *slot = (*slot - m).exp();
            }
            row_max[i] = m;
        }
        Terms { scaled, row_max, k }
    }

    fn log_likelihood(&self) -> f64 {
        self.scaled
            .chunks(self.k)
            .zip(&self.row_max)
            .map(|(row, m)| m + row.iter().sum::<f64>().ln())
            .sum()
    }

    /// Log-likelihood with component `drop` removed and weights renormalised.
    fn log_likelihood_without(&self, drop: usize, drop_eta: f64) -> f64 {
        let shift = -(1.0 - drop_eta).ln();
        self.scaled
            .chunks(self.k)
            .zip(&self.row_max)
            .map(|(row, m)| {
                let s: f64 = row.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, v)| v).sum();
                m + s.ln() + shift
            })
            .sum()
    }
}

/// Death rate of every component at the current state.
pub fn death_rates(mixture: &Mixture, y: &[f64], birth_rate: f64, prior: &OrderPrior) -> Vec<f64> {
    let k = mixture.k();
    if k < 2 {
        return vec![0.0; k];
    }
    let terms = Terms::new(mixture, y);
    let ll = terms.log_likelihood();
    (0..k)
        .map(|j| {
            let lj = terms.log_likelihood_without(j, mixture.components[j].eta);
            let log_rate = birth_rate.ln() - (k as f64).ln() + prior.log_ratio_down(k) + lj - ll;
            if log_rate.is_nan() {
                0.0
            } else {
                log_rate.min(700.0).exp()
            }
        })
        .collect()
}

/// Adds a component with weight `Beta(1, k)` and prior parameters.
pub fn birth<R: Rng>(mixture: &mut Mixture, priors: &Priors, rng: &mut R) {
    let k = mixture.k() as f64;
    let y1 = Gamma::new(1.0, 1.0).unwrap().sample(rng);
    let y2 = Gamma::new(k, 1.0).unwrap().sample(rng);
    let eta = y1 / (y1 + y2);
    for c in &mut mixture.components {
        c.eta *= 1.0 - eta;
    }
    let (mu, sigma2) = draw_from_prior(priors, rng);
    mixture.components.push(Component { eta, mu, sigma2 });
}

pub fn run_bdmc<R: Rng>(y: &[f64], priors: &Priors, config: &BdmcConfig, rng: &mut R) -> Result<BdmcRun> {
    config.validate()?;
    let mut mixture = initial_mixture(y, config.initial_k);
    for _ in 0..config.sweeps_per_refresh {
        gibbs_sweep(&mut mixture, y, priors, rng);
    }
    let mut visits: BTreeMap<usize, f64> = BTreeMap::new();
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut next_refresh = config.refresh_interval;
    while t < config.horizon {
        let k = mixture.k();
        let b = if k >= config.ceiling { 0.0 } else { config.birth_rate };
        let deaths = death_rates(&mixture, y, config.birth_rate, &config.order_prior);
        let total = b + deaths.iter().sum::<f64>();
        let wait = if total > 0.0 { Exp::new(total).unwrap().sample(rng) } else { f64::INFINITY };
        let stop = next_refresh.min(config.horizon);
        if t + wait >= stop {
            *visits.entry(k).or_default() += stop - t;
            t = stop;
            if t >= config.horizon {
                break;
            }
            for _ in 0..config.sweeps_per_refresh {
                gibbs_sweep(&mut mixture, y, priors, rng);
            }
            next_refresh += config.refresh_interval;
            continue;
        }
        *visits.entry(k).or_default() += wait;
        t += wait;
        let mut u = rng.gen::<f64>() * total;
        if u < b {
            birth(&mut mixture, priors, rng);
            events.push(Event { time: t, kind: EventKind::Birth, k_before: k, k_after: k + 1 });
            if config.strict_ceiling && k + 1 >= config.ceiling {
                return Err(Error::CeilingReached { ceiling: config.ceiling, time: t });
            }
        } else {
            u -= b;
            let mut victim = k - 1;
            for (j, d) in deaths.iter().enumerate() {
                if u < *d {
                    victim = j;
                    break;
                }
                u -= d;
            }
            mixture = mixture.without(victim);
            events.push(Event { time: t, kind: EventKind::Death, k_before: k, k_after: k - 1 });
        }
    }
    let k_hat = select_order(&visits);
    Ok(BdmcRun { k_hat, visits, events, final_state: mixture })
}

/// Order with the longest occupation time; ties go to the smaller order.
pub fn select_order(visits: &BTreeMap<usize, f64>) -> usize {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (&k, &t) in visits {
        if t > best.1 {
            best = (k, t);
        }
    }
    best.0
}

/// Selects the order and then runs the fixed-order chain at it.
pub fn select_and_estimate<R: Rng>(y: &[f64], config: &BdmcConfig, rng: &mut R) -> Result<(BdmcRun, GibbsRun)> {
    let priors = Priors::from_data(y)?;
    let run = run_bdmc(y, &priors, config, rng)?;
    let start = initial_mixture(y, run.k_hat);
    let gibbs = gmm::run_gibbs(y, start, &priors, &config.final_chain, rng)?;
    Ok((run, gibbs))
}
