//! `u_tt = alpha(x, y) (u_xx + u_yy)` on a rectangle.
//!
//! Zero Dirichlet data on the lower edge `y = y_min`, zero Neumann data on the
//! other three edges (mirrored ghost nodes). Leapfrog in time.

use super::{check_finite, plan_substeps, store_slice, SolverOptions};
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::grid::Grid;
use crate::schedule::Schedule;

pub fn stability_bound(dx: f64, dy: f64, alpha_max: f64) -> f64 {
    1.0 / (alpha_max * (1.0 / (dx * dx) + 1.0 / (dy * dy))).sqrt()
}

/// Initial displacement and velocity as functions of `(x, y)`.
pub struct InitialState<'a> {
    pub displacement: &'a dyn Fn(f64, f64) -> f64,
    pub velocity: &'a dyn Fn(f64, f64) -> f64,
}

pub fn solve(grid: &Grid, alpha: &Schedule, init: &InitialState, opts: &SolverOptions) -> Result<SolutionField> {
    if grid.spatial().len() != 2 || grid.time().is_none() {
        return Err(Error::Config("2-D wave solver needs axes x, y and time".into()));
    }
    alpha.validate()?;
    let (xax, yax) = (&grid.spatial()[0], &grid.spatial()[1]);
    let tax = grid.time().unwrap();
    let (nx, ny) = (xax.nodes, yax.nodes);
    let (dx, dy) = (xax.step(), yax.step());
    let (xs, ys) = (xax.coords(), yax.coords());
    let mut speed2 = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            speed2[i * ny + j] = alpha.at_point(xs[i], ys[j]);
        }
    }
    let amax = speed2.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if speed2.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Config("wave coefficient must be positive".into()));
    }
    let dt_out = tax.step();
    let substeps = plan_substeps("2-D wave", dt_out, stability_bound(dx, dy, amax), opts.substeps)?;
    let dt = dt_out / substeps as f64;

    let idx = |i: usize, j: usize| i * ny + j;
    // Mirrored neighbours implement the Neumann edges; row j = 0 is pinned to zero.
    let lap = |u: &[f64], i: usize, j: usize| -> f64 {
        let xm = if i == 0 { 1 } else { i - 1 };
        let xp = if i + 1 == nx { nx - 2 } else { i + 1 };
        let yp = if j + 1 == ny { ny - 2 } else { j + 1 };
        let c = u[idx(i, j)];
        (u[idx(xm, j)] - 2.0 * c + u[idx(xp, j)]) / (dx * dx) + (u[idx(i, j - 1)] - 2.0 * c + u[idx(i, yp)]) / (dy * dy)
    };
    let accel = |u: &[f64], t: f64, out: &mut [f64]| {
        for i in 0..nx {
            for j in 1..ny {
                let mut a = speed2[idx(i, j)] * lap(u, i, j);
                if let Some(f) = opts.source {
                    a += f(&[xs[i], ys[j], t]);
                }
                out[idx(i, j)] = a;
            }
        }
    };

    let mut field = SolutionField::zeros(grid.clone(), 1);
    let mut prev = vec![0.0; nx * ny];
    let mut vel = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 1..ny {
            prev[idx(i, j)] = (init.displacement)(xs[i], ys[j]);
            vel[idx(i, j)] = (init.velocity)(xs[i], ys[j]);
        }
    }
    store_slice(&mut field, 0, &prev);
    let mut acc = vec![0.0; nx * ny];
    accel(&prev, 0.0, &mut acc);
    let mut cur: Vec<f64> = (0..nx * ny).map(|k| prev[k] + dt * vel[k] + 0.5 * dt * dt * acc[k]).collect();
    let mut next = vec![0.0; nx * ny];
    let mut step = 1usize;
    for n in 1..tax.nodes {
        while step < n * substeps {
            accel(&cur, step as f64 * dt, &mut acc);
            for k in 0..nx * ny {
                next[k] = 2.0 * cur[k] - prev[k] + dt * dt * acc[k];
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
            step += 1;
        }
        check_finite("2-D wave", tax.coord(n), &cur)?;
        store_slice(&mut field, n, &cur);
    }
    Ok(field)
}
