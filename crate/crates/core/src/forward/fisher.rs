//! `u_t = c(t) u_xx + u - u^2` with zero Dirichlet ends.
//!
//! Forward Euler with a three-point Laplacian. The automatic step keeps the
//! diffusion number below one half and the step below 0.1, which preserves
//! `0 <= u <= 1` for data in that range.

use super::{check_finite, plan_substeps, require_1d_time, store_slice, SolverOptions};
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::grid::Grid;
use crate::schedule::Schedule;

/// Largest stable internal step.
pub fn stability_bound(dx: f64, diffusion_max: f64) -> f64 {
    (dx * dx / (2.0 * diffusion_max)).min(0.1)
}

pub fn solve(
    grid: &Grid,
    diffusion: &Schedule,
    initial: &dyn Fn(f64) -> f64,
    opts: &SolverOptions,
) -> Result<SolutionField> {
    require_1d_time("Fisher", grid)?;
    diffusion.validate()?;
    let tax = grid.time().unwrap();
    if !(diffusion.min_value(tax.upper) > 0.0) {
        return Err(Error::Config("Fisher diffusion coefficient must be positive".into()));
    }
    let xax = &grid.spatial()[0];
    let (nx, dx) = (xax.nodes, xax.step());
    let xs = xax.coords();
    let dt_out = tax.step();
    let bound = stability_bound(dx, diffusion.max_abs(tax.upper));
    let substeps = plan_substeps("Fisher", dt_out, bound, opts.substeps)?;
    let dt = dt_out / substeps as f64;

    let mut field = SolutionField::zeros(grid.clone(), 1);
    let mut cur: Vec<f64> = xs.iter().map(|&x| initial(x)).collect();
    cur[0] = 0.0;
    cur[nx - 1] = 0.0;
    store_slice(&mut field, 0, &cur);
    let mut next = vec![0.0; nx];
    for j in 1..tax.nodes {
        for s in 0..substeps {
            let t = ((j - 1) * substeps + s) as f64 * dt;
            let c = diffusion.at_time(t);
            for i in 1..nx - 1 {
                let u = cur[i];
                let lap = (cur[i + 1] - 2.0 * u + cur[i - 1]) / (dx * dx);
                let mut du = c * lap + u - u * u;
                if let Some(f) = opts.source {
                    du += f(&[xs[i], t]);
                }
                next[i] = u + dt * du;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        check_finite("Fisher", tax.coord(j), &cur)?;
        store_slice(&mut field, j, &cur);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn stays_within_unit_interval(
            c in 0.02f64..0.3,
            heights in proptest::collection::vec(0.0f64..1.0, 8),
        ) {
            let grid = Grid::new(vec![Axis::space("x", -6.0, 6.0, 49).unwrap()], Some(Axis::time(2.0, 5).unwrap())).unwrap();
            let init = move |x: f64| {
                let k = (((x + 6.0) / 12.0 * 8.0) as usize).min(7);
                heights[k]
            };
            let f = solve(&grid, &Schedule::constant(c), &init, &SolverOptions::default()).unwrap();
            prop_assert!(f.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
