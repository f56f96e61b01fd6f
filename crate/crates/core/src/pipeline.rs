//! End-to-end stages: reference data, training, coefficient sampling, mixture
//! estimation, jump-region marking, reconstruction and report rows.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bdmc::{run_bdmc, BdmcConfig, BdmcRun, Event};
use crate::cases::{EstimateConfig, ExperimentConfig};
use crate::criteria::{select_by_criteria, CriterionScan};
use crate::error::{Error, Result};
use crate::field::{ObservationSet, SolutionField};
use crate::forward::{self, helmholtz, wave2d, SolverOptions};
use crate::gmm::{self, initial_mixture, Component, MixtureEstimate, Priors, TraceRow};
use crate::grid::{Axis, FlattenMap, Grid};
use crate::markov::empirical_transition_matrix;
use crate::pinn::{self, CoefficientSamples, DualNetwork, LossRecord, TrainReport};
use crate::problem::Equation;
use crate::region::{self, Lattice, RegionConfig};

/// Reference solution on the config grid.
pub fn solve_reference(cfg: &ExperimentConfig) -> Result<SolutionField> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let opts = SolverOptions::default();
    let co = &cfg.coefficients;
    let init = cfg.initial.clone();
    let g1 = |x: f64| init.as_ref().map_or(0.0, |g| g.eval(&[x]));
    match cfg.equation {
        Equation::SineGordon => forward::sine_gordon::solve(&grid, &co[0], &g1, &opts),
        Equation::Fisher => forward::fisher::solve(&grid, &co[0], &g1, &opts),
        Equation::Burgers => forward::burgers::solve(&grid, &co[0], &co[1], &g1, &opts),
        Equation::Wave2d => {
            let disp = |x: f64, y: f64| init.as_ref().map_or(0.0, |g| g.eval(&[x, y]));
            let vel = |_: f64, _: f64| 0.0;
            wave2d::solve(&grid, &co[0], &wave2d::InitialState { displacement: &disp, velocity: &vel }, &opts)
        }
        Equation::Helmholtz => {
            let src = cfg.source.clone().expect("validated");
            let f = move |x: f64, y: f64| Complex64::new(src.eval(&[x, y]), 0.0);
            helmholtz::solve(&grid, &co[0], &helmholtz::HelmholtzOptions { source: &f, boundary: None, tolerance: 1e-8, max_refinements: 5 })
        }
        Equation::Advection => Err(Error::Config("the advection equation has no reference solver".into())),
    }
}

/// Clean reference field plus the noisy observations drawn from it.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub reference: SolutionField,
    pub observations: ObservationSet,
}

pub fn generate(cfg: &ExperimentConfig) -> Result<Dataset> {
    let reference = solve_reference(cfg)?;
    let noisy = reference.add_noise(cfg.noise_variance, cfg.seeds.noise)?;
    let count = cfg.observations.min(reference.grid.len());
    let observations = noisy.subsample(count, cfg.seeds.observations)?;
    Ok(Dataset { reference, observations })
}

pub fn train(cfg: &ExperimentConfig, obs: &ObservationSet, progress: &mut dyn FnMut(&LossRecord)) -> Result<(DualNetwork, TrainReport)> {
    let problem = cfg.problem();
    let mut net = DualNetwork::new(&problem, &cfg.network, cfg.seeds.network)?;
    let mut tc = cfg.train.clone();
    tc.seed = cfg.seeds.training;
    let report = pinn::train(&mut net, &problem, obs, &tc, progress)?;
    Ok((net, report))
}

pub fn sample(cfg: &ExperimentConfig, net: &DualNetwork) -> Result<CoefficientSamples> {
    pinn::sample_coefficients(net, &cfg.grid()?, cfg.equation.coefficient_names())
}

/// Mixture fit of one coefficient's flattened samples.
#[derive(Clone, Debug)]
pub struct SeriesEstimate {
    pub estimate: MixtureEstimate,
    /// Birth-death run; absent when the samples were constant.
    pub bdmc: Option<BdmcRun>,
    pub trace: Vec<TraceRow>,
    /// Most probable component per sample under the estimate.
    pub labels: Vec<usize>,
    /// Membership probabilities, `k` per sample.
    pub probabilities: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub criteria: Option<CriterionScan>,
}

/// Birth-death order selection, fixed-order chain, and the derived labelling.
///
/// `shape` is the storage shape of the sample lattice; it decides which
/// samples are neighbours when transition ramps are screened out.
pub fn estimate_series(y: &[f64], shape: &[usize], bdmc: &BdmcConfig, opts: &EstimateConfig, seed: u64) -> Result<SeriesEstimate> {
    if y.is_empty() {
        return Err(Error::Argument("empty sample series".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite coefficient samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mean, var) = gmm::mean_var(y);
    if y.len() < 2 || var.sqrt() <= opts.constant_tolerance * mean.abs().max(1.0) {
        let estimate = MixtureEstimate { k: 1, components: vec![Component { eta: 1.0, mu: mean, sigma2: var }], burn_in: 0, sweeps: 0 };
        return Ok(SeriesEstimate {
            estimate,
            bdmc: None,
            trace: vec![],
            labels: vec![0; y.len()],
            probabilities: vec![1.0; y.len()],
            transition: vec![vec![1.0]],
            criteria: None,
        });
    }
    let plateau = match opts.transition_tolerance {
        Some(tol) => plateau_samples(y, shape, tol)?,
        None => y.to_vec(),
    };
    let fit: &[f64] = if plateau.len() >= (y.len() / 10).max(2) && gmm::mean_var(&plateau).1 > 0.0 { &plateau } else { y };
    let priors = Priors::from_data(fit)?;
    let run = run_bdmc(fit, &priors, bdmc, &mut rng)?;
    let mut gibbs = gmm::run_gibbs(fit, initial_mixture(fit, run.k_hat), &priors, &bdmc.final_chain, &mut rng)?;
    loop {
        let resolved = resolved_states(&gibbs.estimate.components, opts.resolution);
        if resolved >= gibbs.estimate.k {
            break;
        }
        gibbs = gmm::run_gibbs(fit, initial_mixture(fit, resolved), &priors, &bdmc.final_chain, &mut rng)?;
    }
    let mixture = gibbs.estimate.mixture();
    let resp = mixture.responsibilities(y);
    let k = mixture.k();
    let labels: Vec<usize> = resp
        .iter()
        .map(|r| r.iter().enumerate().fold(0, |best, (j, &p)| if p > r[best] { j } else { best }))
        .collect();
    let probabilities = resp.concat();
    let m = empirical_transition_matrix(&labels, k);
    let transition = (0..k).map(|i| m.row(i).to_vec()).collect();
    let criteria = match opts.criteria_k_max {
        Some(k_max) => Some(select_by_criteria(y, k_max, &priors, &bdmc.final_chain, &mut rng)?),
        None => None,
    };
    Ok(SeriesEstimate { estimate: gibbs.estimate, bdmc: Some(run), trace: gibbs.trace, labels, probabilities, transition, criteria })
}

/// Samples whose largest difference to any axis neighbour on the lattice is
/// at most `tolerance` times the sample range.
pub fn plateau_samples(y: &[f64], shape: &[usize], tolerance: f64) -> Result<Vec<f64>> {
    let map = FlattenMap::new(shape.to_vec());
    if map.len() != y.len() {
        return Err(Error::Argument(format!("lattice of {} nodes for {} samples", map.len(), y.len())));
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let limit = tolerance * (hi - lo);
    let keep = |node: usize| {
        let idx = map.unflatten(node);
        let mut nb = idx.clone();
        for (axis, &len) in shape.iter().enumerate() {
            for j in [idx[axis].wrapping_sub(1), idx[axis] + 1] {
                if j < len {
                    nb[axis] = j;
                    if (y[map.flatten(&nb)] - y[node]).abs() > limit {
                        return false;
                    }
                }
            }
            nb[axis] = idx[axis];
        }
        true
    };
    Ok((0..y.len()).filter(|&k| keep(k)).map(|k| y[k]).collect())
}

/// Number of groups left after joining neighbouring means (sorted ascending)
/// whose gap is below `resolution` times the larger magnitude.
pub fn resolved_states(components: &[Component], resolution: f64) -> usize {
    if components.is_empty() {
        return 0;
    }
    1 + components
        .windows(2)
        .filter(|w| (w[1].mu - w[0].mu).abs() >= resolution * w[0].mu.abs().max(w[1].mu.abs()))
        .count()
}

/// One estimate per coefficient, seeds offset by the coefficient index.
pub fn estimate(cfg: &ExperimentConfig, samples: &CoefficientSamples) -> Result<Vec<SeriesEstimate>> {
    samples
        .values
        .iter()
        .enumerate()
        .map(|(i, y)| estimate_series(y, &samples.shape, &cfg.bdmc, &cfg.estimate, cfg.seeds.estimation.wrapping_add(i as u64)))
        .collect()
}

/// Uncertainty field and dilated mask on the sample lattice.
pub fn identify(samples: &CoefficientSamples, est: &SeriesEstimate, config: &RegionConfig) -> Result<(Vec<f64>, Vec<bool>)> {
    identify_probabilities(samples, &est.probabilities, est.estimate.k, config)
}

/// Same as [`identify`] from membership probabilities (`k` per sample).
pub fn identify_probabilities(samples: &CoefficientSamples, probabilities: &[f64], k: usize, config: &RegionConfig) -> Result<(Vec<f64>, Vec<bool>)> {
    let lattice = Lattice::new(samples.shape.clone(), samples.spacing.clone())?;
    let f = region::uncertainty(&lattice, probabilities, k)?;
    let mask = region::mask(&lattice, &f, config)?;
    Ok((f, mask))
}

/// Membership probabilities of `y` under a fitted mixture, `k` per sample.
pub fn memberships(estimate: &MixtureEstimate, y: &[f64]) -> Vec<f64> {
    estimate.mixture().responsibilities(y).concat()
}

/// Grid with `(nodes - 1) * refine + 1` nodes per axis over the same box.
pub fn refined_grid(grid: &Grid, refine: usize) -> Result<Grid> {
    let up = |a: &Axis| Axis::new(&a.name, a.kind, a.lower, a.upper, (a.nodes - 1) * refine + 1);
    let spatial = grid.spatial().iter().map(up).collect::<Result<Vec<_>>>()?;
    let time = grid.time().map(up).transpose()?;
    Grid::new(spatial, time)
}

/// Table row: one reference state of one coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub equation: String,
    pub case: String,
    pub noise_variance: f64,
    pub mse: f64,
    pub parameter: String,
    pub reference: f64,
    pub predicted: f64,
    /// `(predicted - reference) / reference * 100`.
    pub relative_error: f64,
}

/// Pairs every reference level with the nearest estimated component mean.
pub fn report_rows(cfg: &ExperimentConfig, mse: f64, estimates: &[&MixtureEstimate]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for ((schedule, name), est) in cfg.coefficients.iter().zip(cfg.equation.coefficient_names()).zip(estimates) {
        let mut levels = schedule.levels();
        levels.sort_by(f64::total_cmp);
        for reference in levels {
            let predicted = est
                .components
                .iter()
                .map(|c| c.mu)
                .min_by(|a, b| (a - reference).abs().total_cmp(&(b - reference).abs()))
                .unwrap_or(f64::NAN);
            rows.push(ReportRow {
                equation: cfg.equation.name().into(),
                case: cfg.case.clone(),
                noise_variance: cfg.noise_variance,
                mse,
                parameter: name.to_string(),
                reference,
                predicted,
                relative_error: relative_error(predicted, reference),
            });
        }
    }
    rows
}

pub fn relative_error(predicted: f64, reference: f64) -> f64 {
    (predicted - reference) / reference * 100.0
}

/// Everything one full run produces.
pub struct RunOutput {
    pub dataset: Dataset,
    pub network: DualNetwork,
    pub training: TrainReport,
    pub samples: CoefficientSamples,
    pub estimates: Vec<SeriesEstimate>,
    pub mse: f64,
    pub rows: Vec<ReportRow>,
}

impl RunOutput {
    pub fn events(&self, coefficient: usize) -> &[Event] {
        self.estimates[coefficient].bdmc.as_ref().map_or(&[], |r| r.events.as_slice())
    }
}

/// Generate, train, sample, estimate and score in one go.
pub fn run_all(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&LossRecord)) -> Result<RunOutput> {
    let dataset = generate(cfg)?;
    let (network, training) = train(cfg, &dataset.observations, progress)?;
    let samples = sample(cfg, &network)?;
    let estimates = estimate(cfg, &samples)?;
    let predicted = pinn::reconstruct(&network, &dataset.reference.grid)?;
    let mse = pinn::mse(&predicted, &dataset.reference)?;
    let rows = report_rows(cfg, mse, &estimates.iter().map(|e| &e.estimate).collect::<Vec<_>>());
    Ok(RunOutput { dataset, network, training, samples, estimates, mse, rows })
}
