//! `u_t = l1(t) u u_x + l2(t) u_xx` with zero Dirichlet ends.
//!
//! The advection term uses the skew-symmetric central form
//! `u u_x ~ ((u^2)_x + u u_x) / 3`, whose discrete inner product with `u`
//! vanishes, so forward Euler with the bound below does not increase the
//! discrete L2 norm.

use super::{check_finite, plan_substeps, require_1d_time, store_slice, SolverOptions};
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::grid::Grid;
use crate::schedule::Schedule;

/// Largest internal step for which the discrete L2 norm cannot grow, given
/// `|l1| <= advection_max`, `l2` in `[viscosity_min, viscosity_max]` and `|u| <= amplitude`.
pub fn stability_bound(dx: f64, advection_max: f64, viscosity_min: f64, viscosity_max: f64, amplitude: f64) -> f64 {
    let a = advection_max * amplitude;
    let bound = |nu: f64| 2.0 * nu / (a + 2.0 * nu / dx).powi(2);
    bound(viscosity_min).min(bound(viscosity_max))
}

/// Skew-symmetric approximation of `u u_x` at interior nodes.
pub fn advection_term(u: &[f64], dx: f64, out: &mut [f64]) {
    let n = u.len();
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - u[i - 1]) * (u[i + 1] + u[i] + u[i - 1]) / (6.0 * dx);
    }
}

pub fn solve(
    grid: &Grid,
    advection: &Schedule,
    viscosity: &Schedule,
    initial: &dyn Fn(f64) -> f64,
    opts: &SolverOptions,
) -> Result<SolutionField> {
    require_1d_time("Burgers", grid)?;
    advection.validate()?;
    viscosity.validate()?;
    let tax = grid.time().unwrap();
    let horizon = tax.upper;
    let (nu_min, nu_max) = (viscosity.min_value(horizon), viscosity.max_abs(horizon));
    if !(nu_min > 0.0) {
        return Err(Error::Config("Burgers viscosity must be positive".into()));
    }
    let adv_max = advection.max_abs(horizon);
    let xax = &grid.spatial()[0];
    let (nx, dx) = (xax.nodes, xax.step());
    let xs = xax.coords();
    let dt_out = tax.step();

    let mut field = SolutionField::zeros(grid.clone(), 1);
    let mut cur: Vec<f64> = xs.iter().map(|&x| initial(x)).collect();
    cur[0] = 0.0;
    cur[nx - 1] = 0.0;
    store_slice(&mut field, 0, &cur);
    let mut next = vec![0.0; nx];
    let mut adv = vec![0.0; nx];
    let mut t = 0.0;
    for j in 1..tax.nodes {
        let amplitude = cur.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let bound = stability_bound(dx, adv_max, nu_min, nu_max, amplitude);
        let substeps = plan_substeps("Burgers", dt_out, bound, opts.substeps)?;
        let dt = dt_out / substeps as f64;
        let t0 = tax.coord(j - 1);
        for s in 0..substeps {
            t = t0 + s as f64 * dt;
            let (l1, l2) = (advection.at_time(t), viscosity.at_time(t));
            advection_term(&cur, dx, &mut adv);
            for i in 1..nx - 1 {
                let lap = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (dx * dx);
                let mut du = l1 * adv[i] + l2 * lap;
                if let Some(f) = opts.source {
                    du += f(&[xs[i], t]);
                }
                next[i] = cur[i] + dt * du;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        t = tax.coord(j);
        check_finite("Burgers", t, &cur)?;
        store_slice(&mut field, j, &cur);
    }
    let _ = t;
    Ok(field)
}
