mod common;

use common::orders;
use jumpid_core::forward::{burgers, SolverOptions};
use jumpid_core::grid::{Axis, Grid};
use jumpid_core::schedule::Schedule;

fn assert_second_order(name: &str, (errors, order): (Vec<f64>, f64)) {
    eprintln!("{name}: errors {errors:?} order {order:.3}");
    assert!((1.7..=2.3).contains(&order), "{name} order {order}");
}

#[test]
fn sine_gordon_is_second_order() {
    assert_second_order("sine-Gordon", orders::sine_gordon_order());
}

#[test]
fn fisher_is_second_order() {
    assert_second_order("Fisher", orders::fisher_order());
}

#[test]
fn burgers_is_second_order() {
    assert_second_order("Burgers", orders::burgers_order());
}

#[test]
fn wave2d_is_second_order() {
    assert_second_order("2-D wave", orders::wave2d_order());
}

#[test]
fn helmholtz_is_second_order() {
    assert_second_order("Helmholtz", orders::helmholtz_order());
}

#[test]
fn burgers_energy_never_increases() {
    let grid = Grid::new(vec![Axis::space("x", -8.0, 8.0, 161).unwrap()], Some(Axis::time(10.0, 101).unwrap())).unwrap();
    let adv = Schedule::piecewise(vec![2.0, 4.0, 6.0, 8.0], vec![1.0, 0.75, 0.5, 0.75, 1.0]).unwrap();
    let f = burgers::solve(&grid, &adv, &Schedule::constant(0.1), &|x| (-(x + 1.0) * (x + 1.0)).exp(), &SolverOptions::default())
        .unwrap();
    let energy: Vec<f64> = (0..101).map(|j| f.values[j * 161..(j + 1) * 161].iter().map(|v| v * v).sum()).collect();
    for w in energy.windows(2) {
        assert!(w[1] <= w[0] + 1e-8, "energy grew {} -> {}", w[0], w[1]);
    }
}

#[test]
fn burgers_without_advection_matches_heat_equation() {
    let nx = 81;
    let grid = Grid::new(vec![Axis::space("x", -8.0, 8.0, nx).unwrap()], Some(Axis::time(1.0, 11).unwrap())).unwrap();
    let init = |x: f64| 1e-3 * (-(x + 1.0) * (x + 1.0)).exp();
    let nu = 0.3;
    let substeps = 40;
    let f = burgers::solve(
        &grid,
        &Schedule::constant(0.0),
        &Schedule::constant(nu),
        &init,
        &SolverOptions { substeps: Some(substeps), source: None },
    )
    .unwrap();
    // independent explicit heat stepper with the same steps
    let dx = 16.0 / (nx - 1) as f64;
    let dt = 0.1 / substeps as f64;
    let mut u: Vec<f64> = (0..nx).map(|i| init(-8.0 + i as f64 * dx)).collect();
    u[0] = 0.0;
    u[nx - 1] = 0.0;
    for _ in 0..10 * substeps {
        let prev = u.clone();
        for i in 1..nx - 1 {
            u[i] = prev[i] + dt * nu * (prev[i + 1] - 2.0 * prev[i] + prev[i - 1]) / (dx * dx);
        }
    }
    let last = &f.values[10 * nx..];
    let diff = last.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}
