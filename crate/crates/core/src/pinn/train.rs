use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::DualNetwork;
use super::residual::{solution_jet_spec, PdeProblem, PointKind, Term, MAX_CHANNELS};
use crate::error::{Error, Result};
use crate::field::ObservationSet;
use crate::net::{Adam, JetBatch, JetSpec};

/// Fixed set of residual points.
#[derive(Clone, Debug, PartialEq)]
pub struct Collocation {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub kinds: Vec<PointKind>,
}

impl Collocation {
    /// Uniform grid with `per_axis[a]` nodes along coordinate `a`, faces included.
    pub fn uniform(problem: &PdeProblem, per_axis: &[usize]) -> Result<Self> {
        let dim = problem.bounds.len();
        if per_axis.len() != dim || per_axis.iter().any(|&n| n < 2) {
            return Err(Error::Config(format!("collocation needs {dim} axis sizes of at least 2")));
        }
        let total: usize = per_axis.iter().product();
        let mut coords = Vec::with_capacity(total * dim);
        let mut kinds = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let p: Vec<f64> = (0..dim)
                .map(|a| {
                    let (lo, hi) = problem.bounds[a];
                    if idx[a] + 1 == per_axis[a] {
                        hi
                    } else {
                        lo + (hi - lo) * idx[a] as f64 / (per_axis[a] - 1) as f64
                    }
                })
                .collect();
            kinds.push(problem.classify(&p));
            coords.extend(p);
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < per_axis[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Collocation { dim, coords, kinds })
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}

/// Loss weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub residual: f64,
    pub observation: f64,
    /// Scale of the squared coefficient gradient in the residual weight
    /// `1 / (beta |grad theta|^2 + 1)`; only used by the gradient-weighted mode.
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { residual: 1.0, observation: 1.0, beta: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub residual: f64,
    pub observation: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss: LossBreakdown,
}

/// Gradients with respect to the solution network and the coefficient model.
pub struct Gradients {
    pub main: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl Gradients {
    pub fn zeros(net: &DualNetwork) -> Self {
        Gradients { main: vec![0.0; net.main.n_params()], coefficients: vec![0.0; net.coefficients.params().len()] }
    }
}

/// Loss over the chosen residual points and observations, optionally
/// accumulating parameter gradients.
pub fn evaluate_loss(
    net: &DualNetwork,
    problem: &PdeProblem,
    colloc: &Collocation,
    points: &[usize],
    obs: &ObservationSet,
    obs_points: &[usize],
    weights: &LossWeights,
    grads: Option<&mut Gradients>,
) -> Result<LossBreakdown> {
    evaluate_loss_with(net, problem, colloc, points, obs, obs_points, weights, None, grads)
}

/// Residual weights `1 / (beta |grad theta|^2 + 1)` at the chosen points
/// (all ones for scalar coefficients).
pub fn residual_weights(net: &DualNetwork, colloc: &Collocation, points: &[usize], beta: f64) -> Result<Vec<f64>> {
    let dim = colloc.dim;
    let coords: Vec<f64> = points.iter().flat_map(|&i| colloc.coords[i * dim..(i + 1) * dim].iter().copied()).collect();
    let gws = matches!(net.coefficients, super::model::CoefficientModel::Network(_));
    let coef = net.coefficients.evaluate(&net.coefficient_inputs(&coords, dim), points.len(), gws)?;
    Ok(coef.grad_norm2.iter().map(|g| if gws { 1.0 / (beta * g + 1.0) } else { 1.0 }).collect())
}

/// As [`evaluate_loss`], with the residual weights given explicitly instead
/// of computed from the coefficient model.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_loss_with(
    net: &DualNetwork,
    problem: &PdeProblem,
    colloc: &Collocation,
    points: &[usize],
    obs: &ObservationSet,
    obs_points: &[usize],
    weights: &LossWeights,
    fixed_weights: Option<&[f64]>,
    mut grads: Option<&mut Gradients>,
) -> Result<LossBreakdown> {
    let dim = colloc.dim;
    let n = points.len();
    let mut residual = 0.0;
    if n > 0 {
        let mut coords = Vec::with_capacity(n * dim);
        for &i in points {
            coords.extend_from_slice(&colloc.coords[i * dim..(i + 1) * dim]);
        }
        let spec = solution_jet_spec(problem.equation);
        let tape = net.main.forward_jet(&coords, &spec)?;
        let gws = matches!(net.coefficients, super::model::CoefficientModel::Network(_));
        let sub_inputs = net.coefficient_inputs(&coords, dim);
        let coef = net.coefficients.evaluate(&sub_inputs, n, gws && fixed_weights.is_none())?;
        let p = net.coefficients.count();
        let want = grads.is_some();
        let mut seed = if want { Some(JetBatch::zeros(spec.clone(), n, tape.output.outputs)) } else { None };
        let mut dtheta = if want { vec![0.0; n * p] } else { Vec::new() };
        let scale = weights.residual / n as f64;
        let mut terms = [Term::default(); 2];
        for (row, &i) in points.iter().enumerate() {
            let pt = &coords[row * dim..(row + 1) * dim];
            let theta = &coef.values[row * p..(row + 1) * p];
            let w = match fixed_weights {
                Some(fw) => fw[row],
                None if gws => 1.0 / (weights.beta * coef.grad_norm2[row] + 1.0),
                None => 1.0,
            };
            let count = problem.terms(colloc.kinds[i], pt, &tape.output, row, theta, &mut terms);
            for t in &terms[..count] {
                residual += scale * w * t.r * t.r;
                if let Some(s) = seed.as_mut() {
                    let g = 2.0 * scale * w * t.r;
                    for c in 0..spec.channels().min(MAX_CHANNELS) {
                        for o in 0..tape.output.outputs {
                            let d = t.du[c][o];
                            if d != 0.0 {
                                *s.slot(c, row, o) += g * d;
                            }
                        }
                    }
                    for k in 0..p {
                        dtheta[row * p + k] += g * t.dtheta[k];
                    }
                }
            }
        }
        if let (Some(g), Some(s)) = (grads.as_deref_mut(), seed.as_ref()) {
            net.main.backward_into(&tape, s, &mut g.main);
            net.coefficients.backward_into(&coef, &dtheta, &mut g.coefficients);
        }
    }
    let mut observation = 0.0;
    let m = obs_points.len();
    if m > 0 {
        let d = obs.dim;
        let mut coords = Vec::with_capacity(m * d);
        for &j in obs_points {
            coords.extend_from_slice(obs.point(j));
        }
        let tape = net.main.forward_jet(&coords, &JetSpec::value())?;
        let outs = tape.output.outputs;
        let scale = weights.observation / m as f64;
        let mut seed = JetBatch::zeros(JetSpec::value(), m, outs);
        for (row, &j) in obs_points.iter().enumerate() {
            for o in 0..outs {
                let diff = tape.output.value(row, o) - obs.value(j, o);
                observation += scale * diff * diff;
                *seed.slot(0, row, o) = 2.0 * scale * diff;
            }
        }
        if let Some(g) = grads.as_deref_mut() {
            net.main.backward_into(&tape, &seed, &mut g.main);
        }
    }
    Ok(LossBreakdown { residual, observation, total: residual + observation })
}

/// Residual weight `1 / (beta g + 1)` for squared coefficient-gradient norm `g`.
pub fn adaptive_weight(g: f64, beta: f64) -> Result<f64> {
    if !(g >= 0.0 && beta >= 0.0) {
        return Err(Error::Argument(format!("adaptive weight needs g >= 0 and beta >= 0, got {g}, {beta}")));
    }
    Ok(1.0 / (beta * g + 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Learning rate reached at the last iteration by geometric decay; `None`
    /// keeps the rate constant.
    pub final_learning_rate: Option<f64>,
    pub weights: LossWeights,
    /// Collocation nodes per coordinate axis.
    pub collocation: Vec<usize>,
    /// Residual points per iteration; `None` uses all of them.
    pub residual_batch: Option<usize>,
    /// Observations per iteration; `None` uses all of them.
    pub observation_batch: Option<usize>,
    /// Iterations between full-loss records.
    pub log_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 20_000,
            learning_rate: 1e-3,
            final_learning_rate: None,
            weights: LossWeights::default(),
            collocation: Vec::new(),
            residual_batch: None,
            observation_batch: None,
            log_every: 500,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Collocation sizes, defaulting to 64 nodes per axis.
    pub fn collocation_sizes(&self, dim: usize) -> Vec<usize> {
        if self.collocation.is_empty() {
            vec![64; dim]
        } else {
            self.collocation.clone()
        }
    }

    fn learning_rate_at(&self, iteration: usize) -> f64 {
        match self.final_learning_rate {
            Some(end) if self.iterations > 1 => {
                let frac = iteration as f64 / (self.iterations - 1) as f64;
                self.learning_rate * (end / self.learning_rate).powf(frac)
            }
            _ => self.learning_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<LossRecord>,
    pub initial: LossBreakdown,
    pub final_loss: LossBreakdown,
}

/// Full-set loss without gradients.
pub fn full_loss(net: &DualNetwork, problem: &PdeProblem, colloc: &Collocation, obs: &ObservationSet, weights: &LossWeights) -> Result<LossBreakdown> {
    let all: Vec<usize> = (0..colloc.len()).collect();
    let all_obs: Vec<usize> = (0..obs.len()).collect();
    // chunked to bound memory on large sets
    let mut total = LossBreakdown::default();
    for chunk in all.chunks(4096) {
        let l = evaluate_loss(net, problem, colloc, chunk, obs, &[], weights, None)?;
        total.residual += l.residual * chunk.len() as f64 / all.len() as f64;
    }
    for chunk in all_obs.chunks(8192) {
        let l = evaluate_loss(net, problem, colloc, &[], obs, chunk, weights, None)?;
        total.observation += l.observation * chunk.len() as f64 / all_obs.len() as f64;
    }
    total.total = total.residual + total.observation;
    Ok(total)
}

/// Adam training on the combined loss. `progress` sees each full-loss record.
pub fn train(
    net: &mut DualNetwork,
    problem: &PdeProblem,
    obs: &ObservationSet,
    config: &TrainConfig,
    progress: &mut dyn FnMut(&LossRecord),
) -> Result<TrainReport> {
    if obs.dim != problem.bounds.len() {
        return Err(Error::Config("observation dimension does not match the problem".into()));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    let colloc = Collocation::uniform(problem, &config.collocation_sizes(problem.bounds.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam_main = Adam::new(net.main.n_params(), config.learning_rate);
    let mut adam_coef = Adam::new(net.coefficients.params().len(), config.learning_rate);
    let initial = full_loss(net, problem, &colloc, obs, &config.weights)?;
    let mut history = vec![LossRecord { iteration: 0, loss: initial }];
    progress(&history[0]);
    let all_points: Vec<usize> = (0..colloc.len()).collect();
    let all_obs: Vec<usize> = (0..obs.len()).collect();
    let mut grads = Gradients::zeros(net);
    for it in 0..config.iterations {
        let points = match config.residual_batch {
            Some(b) if b < colloc.len() => index::sample(&mut rng, colloc.len(), b).into_vec(),
            _ => all_points.clone(),
        };
        let obs_points = match config.observation_batch {
            Some(b) if b < obs.len() => index::sample(&mut rng, obs.len(), b).into_vec(),
            _ => all_obs.clone(),
        };
        grads.main.iter_mut().for_each(|g| *g = 0.0);
        grads.coefficients.iter_mut().for_each(|g| *g = 0.0);
        let loss = evaluate_loss(net, problem, &colloc, &points, obs, &obs_points, &config.weights, Some(&mut grads))?;
        if !loss.total.is_finite() || grads.main.iter().chain(&grads.coefficients).any(|g| !g.is_finite()) {
            return Err(Error::TrainingDiverged { iteration: it, detail: format!("loss {:?}", loss) });
        }
        let lr = config.learning_rate_at(it);
        adam_main.learning_rate = lr;
        adam_coef.learning_rate = lr;
        adam_main.update(net.main.params_mut(), &grads.main);
        adam_coef.update(net.coefficients.params_mut(), &grads.coefficients);
        if config.log_every > 0 && (it + 1) % config.log_every == 0 && it + 1 < config.iterations {
            let l = full_loss(net, problem, &colloc, obs, &config.weights)?;
            let rec = LossRecord { iteration: it + 1, loss: l };
            progress(&rec);
            history.push(rec);
        }
    }
    let final_loss = full_loss(net, problem, &colloc, obs, &config.weights)?;
    if !final_loss.total.is_finite() {
        return Err(Error::TrainingDiverged { iteration: config.iterations, detail: "non-finite final loss".into() });
    }
    let rec = LossRecord { iteration: config.iterations, loss: final_loss };
    progress(&rec);
    history.push(rec);
    Ok(TrainReport { history, initial, final_loss })
}
