//! `u_tt = alpha(t) u_xx + sin u` with zero Dirichlet ends and zero initial velocity.
//!
//! Leapfrog in time, three-point Laplacian in space.

use super::{check_finite, plan_substeps, require_1d_time, store_slice, SolverOptions};
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::grid::Grid;
use crate::schedule::Schedule;

pub fn stability_bound(dx: f64, alpha_max: f64) -> f64 {
    dx / alpha_max.sqrt()
}

pub fn solve(
    grid: &Grid,
    alpha: &Schedule,
    initial: &dyn Fn(f64) -> f64,
    opts: &SolverOptions,
) -> Result<SolutionField> {
    require_1d_time("sine-Gordon", grid)?;
    alpha.validate()?;
    let tax = grid.time().unwrap();
    let horizon = tax.upper;
    if !(alpha.min_value(horizon) > 0.0) {
        return Err(Error::Config("sine-Gordon coefficient must be positive".into()));
    }
    let xax = &grid.spatial()[0];
    let (nx, dx) = (xax.nodes, xax.step());
    let xs = xax.coords();
    let dt_out = tax.step();
    let substeps = plan_substeps("sine-Gordon", dt_out, stability_bound(dx, alpha.max_abs(horizon)), opts.substeps)?;
    let dt = dt_out / substeps as f64;

    let mut field = SolutionField::zeros(grid.clone(), 1);
    let mut cur: Vec<f64> = xs.iter().map(|&x| initial(x)).collect();
    cur[0] = 0.0;
    cur[nx - 1] = 0.0;
    store_slice(&mut field, 0, &cur);

    let mut accel = vec![0.0; nx];
    let rhs = |u: &[f64], t: f64, out: &mut [f64]| {
        let a = alpha.at_time(t);
        for i in 1..nx - 1 {
            let lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
            let mut v = a * lap + u[i].sin();
            if let Some(f) = opts.source {
                v += f(&[xs[i], t]);
            }
            out[i] = v;
        }
    };

    // Taylor start using the zero initial velocity.
    rhs(&cur, 0.0, &mut accel);
    let mut prev = cur.clone();
    for i in 1..nx - 1 {
        cur[i] = prev[i] + 0.5 * dt * dt * accel[i];
    }
    let mut next = vec![0.0; nx];
    let mut step = 1usize;
    for j in 1..tax.nodes {
        while step < j * substeps {
            let t = step as f64 * dt;
            rhs(&cur, t, &mut accel);
            for i in 1..nx - 1 {
                next[i] = 2.0 * cur[i] - prev[i] + dt * dt * accel[i];
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
            step += 1;
        }
        check_finite("sine-Gordon", tax.coord(j), &cur)?;
        store_slice(&mut field, j, &cur);
    }
    Ok(field)
}
