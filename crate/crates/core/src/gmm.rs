//! Bayesian univariate Gaussian mixture with conjugate priors, sampled by Gibbs.
//!
//! Priors: `sigma2_k ~ IG(c0, C0)`, `mu_k | sigma2_k ~ N(b0, sigma2_k)`,
//! weights uniform Dirichlet. Data-driven defaults are `c0 = 2.5`,
//! `C0 = 0.5 var(y)`, `b0 = mean(y)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SHAPE: f64 = 2.5;
pub const DEFAULT_SCALE_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    /// Inverse-gamma shape of the variances.
    pub shape: f64,
    /// Inverse-gamma scale of the variances.
    pub scale: f64,
    /// Prior mean of the component means.
    pub mean: f64,
}

impl Priors {
    pub fn from_data(y: &[f64]) -> Result<Self> {
        let (mean, var) = mean_var(y);
        if y.len() < 2 {
            return Err(Error::DegenerateData(format!("need at least 2 samples, got {}", y.len())));
        }
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::DegenerateData(format!("sample variance {var} is not positive")));
        }
        Ok(Priors { shape: DEFAULT_SHAPE, scale: DEFAULT_SCALE_FRACTION * var, mean })
    }
}

/// Population mean and variance (divisor `n`).
pub fn mean_var(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    if y.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub eta: f64,
    pub mu: f64,
    pub sigma2: f64,
}

/// Mixture parameters; component order carries no meaning during sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<Component>,
}

impl Mixture {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Components sorted by increasing mean.
    pub fn sorted(&self) -> Mixture {
        let mut c = self.components.clone();
        c.sort_by(|a, b| a.mu.total_cmp(&b.mu));
        Mixture { components: c }
    }

    pub fn log_density(&self, y: f64) -> f64 {
        let terms: Vec<f64> = self.components.iter().map(|c| c.eta.ln() + log_normal(y, c.mu, c.sigma2)).collect();
        log_sum_exp(&terms)
    }

    pub fn log_likelihood(&self, y: &[f64]) -> f64 {
        y.iter().map(|&v| self.log_density(v)).sum()
    }

    /// Membership probabilities, one row of length `k` per sample.
    pub fn responsibilities(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let mut terms = vec![0.0; self.k()];
        y.iter()
            .map(|&v| {
                for (t, c) in terms.iter_mut().zip(&self.components) {
                    *t = c.eta.ln() + log_normal(v, c.mu, c.sigma2);
                }
                let z = log_sum_exp(&terms);
                terms.iter().map(|t| (t - z).exp()).collect()
            })
            .collect()
    }

    /// Mixture with component `k` removed and the remaining weights renormalised.
    pub fn without(&self, k: usize) -> Mixture {
        let rest = 1.0 - self.components[k].eta;
        let components = self
            .components
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, c)| Component { eta: c.eta / rest, ..*c })
            .collect();
        Mixture { components }
    }
}

pub fn log_normal(y: f64, mu: f64, sigma2: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * sigma2).ln() + (y - mu).powi(2) / sigma2)
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Conditional posterior of one component given its allocated samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentPosterior {
    pub count: usize,
    /// Inverse-gamma shape of `sigma2`.
    pub shape: f64,
    /// Inverse-gamma scale of `sigma2`.
    pub scale: f64,
    /// Mean of `mu` given `sigma2`.
    pub mean: f64,
    /// `mu | sigma2` has variance `sigma2 * mean_variance_factor`.
    pub mean_variance_factor: f64,
}

impl ComponentPosterior {
    pub fn new(priors: &Priors, samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return ComponentPosterior { count: 0, shape: priors.shape, scale: priors.scale, mean: priors.mean, mean_variance_factor: 1.0 };
        }
        let (ybar, s2) = mean_var(samples);
        let nf = n as f64;
        ComponentPosterior {
            count: n,
            shape: priors.shape + 0.5 * nf,
            scale: priors.scale + 0.5 * (nf * s2 + nf / (nf + 1.0) * (ybar - priors.mean).powi(2)),
            mean: (priors.mean + nf * ybar) / (nf + 1.0),
            mean_variance_factor: 1.0 / (nf + 1.0),
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let sigma2 = draw_inverse_gamma(self.shape, self.scale, rng);
        let mu = Normal::new(self.mean, (sigma2 * self.mean_variance_factor).sqrt()).expect("finite").sample(rng);
        (mu, sigma2)
    }
}

pub fn draw_inverse_gamma<R: Rng>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    1.0 / Gamma::new(shape, 1.0 / scale).expect("positive gamma parameters").sample(rng)
}

/// Component parameters drawn from the priors.
pub fn draw_from_prior<R: Rng>(priors: &Priors, rng: &mut R) -> (f64, f64) {
    ComponentPosterior::new(priors, &[]).draw(rng)
}

pub fn draw_dirichlet<R: Rng>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = alpha.iter().map(|&a| Gamma::new(a, 1.0).expect("positive").sample(rng)).collect();
    let s: f64 = g.iter().sum();
    g.iter().map(|v| v / s).collect()
}

/// Draws a component label for every sample.
pub fn sample_allocations<R: Rng>(mixture: &Mixture, y: &[f64], rng: &mut R) -> Vec<usize> {
    let k = mixture.k();
    let log_eta: Vec<f64> = mixture.components.iter().map(|c| c.eta.ln()).collect();
    let mut terms = vec![0.0; k];
    let mut underflow = 0usize;
    let labels = y
        .iter()
        .map(|&v| {
            for (j, c) in mixture.components.iter().enumerate() {
                terms[j] = log_eta[j] + log_normal(v, c.mu, c.sigma2);
            }
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !m.is_finite() {
                underflow += 1;
                return rng.gen_range(0..k);
            }
            let total: f64 = terms.iter().map(|t| (t - m).exp()).sum();
            let mut u = rng.gen::<f64>() * total;
            for (j, t) in terms.iter().enumerate() {
                u -= (t - m).exp();
                if u <= 0.0 {
                    return j;
                }
            }
            k - 1
        })
        .collect();
    if underflow > 0 {
        log::warn!("{underflow} samples had zero density under every component; labels drawn uniformly");
    }
    labels
}

/// One full sweep: allocations, weights, then variance and mean per component.
pub fn gibbs_sweep<R: Rng>(mixture: &mut Mixture, y: &[f64], priors: &Priors, rng: &mut R) -> Vec<usize> {
    let labels = sample_allocations(mixture, y, rng);
    let k = mixture.k();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (&l, &v) in labels.iter().zip(y) {
        groups[l].push(v);
    }
    let alpha: Vec<f64> = groups.iter().map(|g| g.len() as f64 + 1.0).collect();
    let eta = draw_dirichlet(&alpha, rng);
    for (j, g) in groups.iter().enumerate() {
        let (mu, sigma2) = ComponentPosterior::new(priors, g).draw(rng);
        mixture.components[j] = Component { eta: eta[j], mu, sigma2 };
    }
    labels
}

/// Starting point: equal weights, means at evenly spaced sample quantiles,
/// variances equal to the sample variance over `k^2`.
pub fn initial_mixture(y: &[f64], k: usize) -> Mixture {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (_, var) = mean_var(y);
    let n = sorted.len();
    let components = (0..k)
        .map(|j| {
            let q = ((2 * j + 1) * n) / (2 * k);
            Component { eta: 1.0 / k as f64, mu: sorted[q.min(n - 1)], sigma2: (var / (k * k) as f64).max(1e-300) }
        })
        .collect();
    Mixture { components }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub sweeps: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig { burn_in: 1000, sweeps: 4000 }
    }
}

/// Posterior-mean estimate with components ordered by increasing mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureEstimate {
    #[serde(rename = "K")]
    pub k: usize,
    pub components: Vec<Component>,
    pub burn_in: usize,
    pub sweeps: usize,
}

impl MixtureEstimate {
    pub fn mixture(&self) -> Mixture {
        Mixture { components: self.components.clone() }
    }
}

/// One row of the chain trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub sweep: usize,
    pub component: usize,
    pub params: Component,
    pub log_likelihood: f64,
}

pub struct GibbsRun {
    pub estimate: MixtureEstimate,
    pub trace: Vec<TraceRow>,
}

/// Runs the sampler at fixed `k` from `start` and averages the label-sorted
/// draws after burn-in.
pub fn run_gibbs<R: Rng>(y: &[f64], start: Mixture, priors: &Priors, config: &GibbsConfig, rng: &mut R) -> Result<GibbsRun> {
    if config.sweeps == 0 {
        return Err(Error::Argument("need at least one retained sweep".into()));
    }
    let k = start.k();
    let mut mixture = start;
    let mut sums = vec![Component { eta: 0.0, mu: 0.0, sigma2: 0.0 }; k];
    let mut trace = Vec::with_capacity(config.sweeps * k);
    for sweep in 0..config.burn_in + config.sweeps {
        gibbs_sweep(&mut mixture, y, priors, rng);
        if sweep < config.burn_in {
            continue;
        }
        let sorted = mixture.sorted();
        let ll = sorted.log_likelihood(y);
        for (j, c) in sorted.components.iter().enumerate() {
            sums[j].eta += c.eta;
            sums[j].mu += c.mu;
            sums[j].sigma2 += c.sigma2;
            trace.push(TraceRow { sweep, component: j, params: *c, log_likelihood: ll });
        }
    }
    let m = config.sweeps as f64;
    let components = sums.iter().map(|s| Component { eta: s.eta / m, mu: s.mu / m, sigma2: s.sigma2 / m }).collect();
    Ok(GibbsRun {
        estimate: MixtureEstimate { k, components, burn_in: config.burn_in, sweeps: config.sweeps },
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_component_uses_prior() {
        let p = Priors { shape: 2.5, scale: 0.3, mean: 1.0 };
        let post = ComponentPosterior::new(&p, &[]);
        assert_eq!((post.shape, post.scale, post.mean, post.mean_variance_factor), (2.5, 0.3, 1.0, 1.0));
    }

    #[test]
    fn removing_a_component_renormalises() {
        let m = Mixture {
            components: vec![
                Component { eta: 0.5, mu: 0.0, sigma2: 1.0 },
                Component { eta: 0.3, mu: 1.0, sigma2: 1.0 },
                Component { eta: 0.2, mu: 2.0, sigma2: 1.0 },
            ],
        };
        let r = m.without(0);
        assert!((r.components[0].eta - 0.6).abs() < 1e-15);
        assert!((r.components[1].eta - 0.4).abs() < 1e-15);
    }

    #[test]
    fn recovers_two_separated_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut y: Vec<f64> = (0..300).map(|_| Normal::new(0.5, 0.01).unwrap().sample(&mut rng)).collect();
        y.extend((0..300).map(|_| Normal::new(1.0, 0.01).unwrap().sample(&mut rng)));
        let priors = Priors::from_data(&y).unwrap();
        let cfg = GibbsConfig { burn_in: 200, sweeps: 500 };
        let est = run_gibbs(&y, initial_mixture(&y, 2), &priors, &cfg, &mut rng).unwrap().estimate;
        assert!((est.components[0].mu - 0.5).abs() < 0.005);
        assert!((est.components[1].mu - 1.0).abs() < 0.005);
        assert!((est.components[0].eta - 0.5).abs() < 0.06);
    }

    #[test]
    fn constant_samples_are_degenerate() {
        assert!(matches!(Priors::from_data(&[1.0; 10]), Err(Error::DegenerateData(_))));
    }
}
