//! Finite-difference oracles for network jets and loss gradients.

use jumpid_core::field::ObservationSet;
use jumpid_core::net::{Head, JetSpec, Mlp};
use jumpid_core::pinn::{
    evaluate_loss, evaluate_loss_with, residual_weights, Collocation, DualNetwork, Gradients, LossWeights, Mode,
    NetworkConfig, PdeProblem,
};
use jumpid_core::problem::{Equation, InitialProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative error with a floor on the denominator so near-zero derivatives
/// are compared absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Worst relative error of every jet channel of a random tanh network against
/// central differences of its values. Returns (worst first-order, worst second-order).
pub fn jet_errors(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(1..=3);
    let depth = rng.gen_range(1..=3);
    let mut sizes = vec![d];
    for _ in 0..depth {
        sizes.push(rng.gen_range(3..=12));
    }
    let outs = rng.gen_range(1..=2);
    sizes.push(outs);
    let heads = (0..outs).map(|_| if rng.gen_bool(0.5) { Head::Identity } else { Head::Softplus }).collect();
    let lower: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.5..4.0)).collect();
    let net = Mlp::new(&sizes, heads, seed).unwrap().with_input_box(&lower, &upper).unwrap();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a..d).map(move |b| (a, b))).collect();
    let spec = JetSpec::new(&(0..d).collect::<Vec<_>>(), &pairs);
    let points = 5;
    let x: Vec<f64> = (0..points).flat_map(|_| (0..d).map(|a| rng.gen_range(lower[a]..upper[a])).collect::<Vec<_>>()).collect();
    let tape = net.forward_jet(&x, &spec).unwrap();
    let f = |p: &[f64]| net.forward(p).unwrap();
    let h = 1e-3;
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for i in 0..points {
        let base = x[i * d..(i + 1) * d].to_vec();
        let shifted = |moves: &[(usize, f64)]| {
            let mut p = base.clone();
            for &(a, s) in moves {
                p[a] += s;
            }
            f(&p)
        };
        for a in 0..d {
            let (fp, fm) = (shifted(&[(a, h)]), shifted(&[(a, -h)]));
            // fourth-order central differences
            let (fp2, fm2) = (shifted(&[(a, 2.0 * h)]), shifted(&[(a, -2.0 * h)]));
            let f0 = f(&base);
            for o in 0..outs {
                let d1 = (-fp2[o] + 8.0 * fp[o] - 8.0 * fm[o] + fm2[o]) / (12.0 * h);
                e1 = e1.max(rel_err(tape.output.d(i, o, a), d1));
                let d2 = (-fp2[o] + 16.0 * fp[o] - 30.0 * f0[o] + 16.0 * fm[o] - fm2[o]) / (12.0 * h * h);
                e2 = e2.max(rel_err(tape.output.dd(i, o, a, a), d2));
            }
        }
        for a in 0..d {
            for b in a + 1..d {
                // Richardson-extrapolated cross difference
                let cross = |s: f64| {
                    let pp = shifted(&[(a, s), (b, s)]);
                    let pm = shifted(&[(a, s), (b, -s)]);
                    let mp = shifted(&[(a, -s), (b, s)]);
                    let mm = shifted(&[(a, -s), (b, -s)]);
                    (0..outs).map(|o| (pp[o] - pm[o] - mp[o] + mm[o]) / (4.0 * s * s)).collect::<Vec<_>>()
                };
                let (coarse, fine) = (cross(2.0 * h), cross(h));
                for o in 0..outs {
                    let dab = (4.0 * fine[o] - coarse[o]) / 3.0;
                    e2 = e2.max(rel_err(tape.output.dd(i, o, a, b), dab));
                }
            }
        }
    }
    (e1, e2)
}

fn small_problem(eq: Equation) -> PdeProblem {
    let bounds = match eq {
        Equation::Wave2d => vec![(0.0, 0.15), (0.0, 0.45), (0.0, 0.2)],
        Equation::Helmholtz => vec![(-1.0, 1.0), (-1.0, 1.0)],
        Equation::Burgers => vec![(-8.0, 8.0), (0.0, 10.0)],
        _ => vec![(0.0, 1.0), (0.0, 2.0)],
    };
    let initial = match eq {
        Equation::Wave2d => Some(InitialProfile::Bump { center: [0.07, 0.3], width: 0.02, amplitude: 1.0 }),
        Equation::Helmholtz => None,
        _ => Some(InitialProfile::SinePi),
    };
    let source = (eq == Equation::Helmholtz)
        .then_some(jumpid_core::problem::SourceProfile::TruncatedGaussian { center: [0.5, 0.0], k0: 20.0 });
    PdeProblem { equation: eq, bounds, initial, source }
}

/// Worst relative error of analytic loss gradients against central
/// differences of the loss (residual weights frozen at the base point).
pub fn loss_gradient_error(eq: Equation, mode: Mode, seed: u64) -> f64 {
    let problem = small_problem(eq);
    let cfg = NetworkConfig { main_hidden: vec![6, 6], sub_hidden: vec![5, 5], mode, ..NetworkConfig::default() };
    let mut net = DualNetwork::new(&problem, &cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    // move away from the zero-bias start so every path carries gradient
    for p in net.main.params_mut() {
        *p += rng.gen_range(-0.2..0.2);
    }
    for p in net.coefficients.params_mut() {
        *p += rng.gen_range(-0.2..0.2);
    }
    let dim = problem.bounds.len();
    let colloc = Collocation::uniform(&problem, &vec![5; dim]).unwrap();
    let points: Vec<usize> = (0..colloc.len()).collect();
    let count = 12;
    let coords: Vec<f64> = (0..count)
        .flat_map(|_| problem.bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect::<Vec<_>>())
        .collect();
    let channels = eq.outputs();
    let values: Vec<f64> = (0..count * channels).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let obs = ObservationSet { dim, channels, coords, values, nodes: vec![] };
    let obs_points: Vec<usize> = (0..count).collect();
    let weights = LossWeights { residual: 1.0, observation: 1.0, beta: 0.7 };
    let mut grads = Gradients::zeros(&net);
    evaluate_loss(&net, &problem, &colloc, &points, &obs, &obs_points, &weights, Some(&mut grads)).unwrap();
    let frozen = residual_weights(&net, &colloc, &points, weights.beta).unwrap();
    let loss_at = |n: &DualNetwork| {
        evaluate_loss_with(n, &problem, &colloc, &points, &obs, &obs_points, &weights, Some(&frozen), None).unwrap().total
    };
    let h = 1e-5;
    let mut worst = 0.0f64;
    for (which, count) in [(0, net.main.n_params()), (1, net.coefficients.params().len())] {
        for k in 0..count {
            let mut plus = net.clone();
            let mut minus = net.clone();
            if which == 0 {
                plus.main.params_mut()[k] += h;
                minus.main.params_mut()[k] -= h;
            } else {
                plus.coefficients.params_mut()[k] += h;
                minus.coefficients.params_mut()[k] -= h;
            }
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let analytic = if which == 0 { grads.main[k] } else { grads.coefficients[k] };
            worst = worst.max(rel_err(analytic, fd));
        }
    }
    worst
}
