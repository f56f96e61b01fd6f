//! Manufactured-solution refinement studies for the forward solvers.
//!
//! Each study solves on spacings h and h/2 (and h/4) with a forcing term chosen
//! so the exact solution is known in closed form, and reports the observed
//! order from the max-norm errors on the two finest grids.

use std::f64::consts::PI;

use jumpid_core::field::SolutionField;
use jumpid_core::forward::helmholtz::{self, HelmholtzOptions};
use jumpid_core::forward::wave2d::{self, InitialState};
use jumpid_core::forward::{burgers, fisher, observed_order, sine_gordon, SolverOptions};
use jumpid_core::grid::{Axis, Grid};
use jumpid_core::schedule::Schedule;
use num_complex::Complex64;

fn max_error(field: &SolutionField, exact: impl Fn(&[f64]) -> f64) -> f64 {
    (0..field.grid.len())
        .map(|k| (field.get(k, 0) - exact(&field.grid.coords(k))).abs())
        .fold(0.0, f64::max)
}

fn grid_1d(lower: f64, upper: f64, nx: usize, horizon: f64) -> Grid {
    Grid::new(vec![Axis::space("x", lower, upper, nx).unwrap()], Some(Axis::time(horizon, 5).unwrap())).unwrap()
}

fn order_from(errors: &[f64]) -> f64 {
    let n = errors.len();
    observed_order(errors[n - 2], errors[n - 1])
}

/// Returns (errors per refinement level, observed order).
pub fn sine_gordon_order() -> (Vec<f64>, f64) {
    let alpha = 0.8;
    let exact = |c: &[f64]| c[1].cos() * (PI * c[0]).sin();
    let source = move |c: &[f64]| {
        let u = exact(c);
        -u + alpha * PI * PI * u - u.sin()
    };
    let errors: Vec<f64> = [21, 41, 81]
        .iter()
        .map(|&nx| {
            let grid = grid_1d(0.0, 1.0, nx, 1.0);
            let opts = SolverOptions { substeps: Some((nx - 1) / 2), source: Some(&source) };
            let f = sine_gordon::solve(&grid, &Schedule::constant(alpha), &|x| (PI * x).sin(), &opts).unwrap();
            max_error(&f, exact)
        })
        .collect();
    let order = order_from(&errors);
    (errors, order)
}

pub fn fisher_order() -> (Vec<f64>, f64) {
    let c = 0.1;
    let w = PI / 12.0;
    let exact = move |p: &[f64]| (-p[1]).exp() * (w * p[0]).cos();
    let source = move |p: &[f64]| {
        let u = exact(p);
        -u + c * w * w * u - u + u * u
    };
    let errors: Vec<f64> = [25, 49, 97]
        .iter()
        .map(|&nx| {
            let grid = grid_1d(-6.0, 6.0, nx, 1.0);
            // diffusive scaling: step proportional to h^2
            let m = (nx - 1) / 24;
            let opts = SolverOptions { substeps: Some(4 * m * m), source: Some(&source) };
            let f = fisher::solve(&grid, &Schedule::constant(c), &|x| (w * x).cos(), &opts).unwrap();
            max_error(&f, exact)
        })
        .collect();
    let order = order_from(&errors);
    (errors, order)
}

pub fn burgers_order() -> (Vec<f64>, f64) {
    let (l1, l2) = (1.0, 0.1);
    let w = PI / 8.0;
    let exact = move |p: &[f64]| (-p[1]).exp() * (w * p[0]).sin();
    let source = move |p: &[f64]| {
        let u = exact(p);
        let ux = (-p[1]).exp() * w * (w * p[0]).cos();
        -u - l1 * u * ux + l2 * w * w * u
    };
    let errors: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&nx| {
            let grid = grid_1d(-8.0, 8.0, nx, 1.0);
            let m = (nx - 1) / 32;
            let opts = SolverOptions { substeps: Some(8 * m * m), source: Some(&source) };
            let f = burgers::solve(&grid, &Schedule::constant(l1), &Schedule::constant(l2), &|x| (w * x).sin(), &opts)
                .unwrap();
            max_error(&f, exact)
        })
        .collect();
    let order = order_from(&errors);
    (errors, order)
}

pub fn wave2d_order() -> (Vec<f64>, f64) {
    let (lx, ly, alpha, omega) = (0.15, 0.45, 3.0, 10.0);
    let space = move |x: f64, y: f64| (PI * x / lx).cos() * (PI * y / (2.0 * ly)).sin();
    let exact = move |p: &[f64]| (omega * p[2]).cos() * space(p[0], p[1]);
    let factor = -omega * omega + alpha * (PI * PI / (lx * lx) + PI * PI / (4.0 * ly * ly));
    let source = move |p: &[f64]| factor * exact(p);
    let errors: Vec<f64> = [(7, 19), (13, 37), (25, 73)]
        .iter()
        .enumerate()
        .map(|(level, &(nx, ny))| {
            let grid = Grid::new(
                vec![Axis::space("x", 0.0, lx, nx).unwrap(), Axis::space("y", 0.0, ly, ny).unwrap()],
                Some(Axis::time(0.2, 3).unwrap()),
            )
            .unwrap();
            let opts = SolverOptions { substeps: Some(16 << level), source: Some(&source) };
            let init = InitialState { displacement: &space, velocity: &|_, _| 0.0 };
            let f = wave2d::solve(&grid, &Schedule::constant(alpha), &init, &opts).unwrap();
            max_error(&f, exact)
        })
        .collect();
    let order = order_from(&errors);
    (errors, order)
}

pub fn helmholtz_order() -> (Vec<f64>, f64) {
    let k = 6.0;
    let (c, s) = (0.6f64, 0.8f64);
    let wave = move |x: f64, y: f64| (Complex64::i() * k * (c * x + s * y)).exp();
    let zero = |_: f64, _: f64| Complex64::new(0.0, 0.0);
    let boundary = move |x: f64, y: f64, n: [f64; 2]| {
        let u = wave(x, y);
        Complex64::i() * k * (c * n[0] + s * n[1]) * u - Complex64::i() * k * u
    };
    let errors: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let grid = Grid::new(
                vec![Axis::space("x", -1.0, 1.0, n).unwrap(), Axis::space("y", -1.0, 1.0, n).unwrap()],
                None,
            )
            .unwrap();
            let opts = HelmholtzOptions { source: &zero, boundary: Some(&boundary), tolerance: 1e-8, max_refinements: 4 };
            let f = helmholtz::solve(&grid, &Schedule::constant(k), &opts).unwrap();
            (0..f.grid.len())
                .map(|i| {
                    let p = f.grid.coords(i);
                    let u = wave(p[0], p[1]);
                    (Complex64::new(f.get(i, 0), f.get(i, 1)) - u).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let order = order_from(&errors);
    (errors, order)
}
