//! Finite-difference forward solvers that generate reference data.
//!
//! Every time-dependent solver advances on an internal step that divides the
//! output step of the grid's time axis. The internal step count is picked
//! from the stability bound unless given explicitly, in which case a step
//! above the bound is a configuration error.

mod banded;
pub mod burgers;
pub mod fisher;
pub mod helmholtz;
pub mod sine_gordon;
pub mod wave2d;

pub use banded::BandedLu;

use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::grid::Grid;

/// Fraction of the stability bound used when the step count is chosen automatically.
const AUTO_SAFETY: f64 = 0.8;

/// Scalar forcing term evaluated at `(spatial..., t)`.
pub type Source<'a> = &'a dyn Fn(&[f64]) -> f64;

#[derive(Clone, Copy, Default)]
pub struct SolverOptions<'a> {
    /// Internal steps per output step; `None` picks the count from the stability bound.
    pub substeps: Option<usize>,
    /// Right-hand-side forcing, used by manufactured-solution checks.
    pub source: Option<Source<'a>>,
}

pub(crate) fn plan_substeps(name: &str, dt_out: f64, bound: f64, explicit: Option<usize>) -> Result<usize> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::Numerical(format!("{name}: stability bound {bound} is not positive")));
    }
    match explicit {
        Some(0) => Err(Error::Config(format!("{name}: substeps must be at least 1"))),
        Some(s) => {
            let dt = dt_out / s as f64;
            if dt > bound * (1.0 + 1e-12) {
                Err(Error::Config(format!(
                    "{name}: internal step {dt:.4e} (output step {dt_out:.4e} / {s} substeps) exceeds the stability bound {bound:.4e}"
                )))
            } else {
                Ok(s)
            }
        }
        None => Ok(((dt_out / (AUTO_SAFETY * bound)).ceil() as usize).max(1)),
    }
}

/// Checks the grid is one spatial axis plus time.
pub(crate) fn require_1d_time(name: &str, grid: &Grid) -> Result<()> {
    if grid.spatial().len() != 1 || grid.time().is_none() {
        return Err(Error::Config(format!("{name} needs a grid with one spatial axis and a time axis")));
    }
    Ok(())
}

pub(crate) fn check_finite(name: &str, t: f64, state: &[f64]) -> Result<()> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{name}: non-finite state at t = {t:.4}")))
    }
}

/// Writes one time slice of a scalar field (time is the slowest storage axis).
pub(crate) fn store_slice(field: &mut SolutionField, time_index: usize, state: &[f64]) {
    let n = state.len();
    field.values[time_index * n..(time_index + 1) * n].copy_from_slice(state);
}

/// Largest absolute difference between two fields on the same grid.
pub fn max_abs_difference(a: &SolutionField, b: &SolutionField) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Observed order of convergence from errors at spacings `h` and `h / 2`.
pub fn observed_order(coarse_error: f64, fine_error: f64) -> f64 {
    (coarse_error / fine_error).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_step_above_bound_is_rejected() {
        let err = plan_substeps("probe", 0.1, 0.01, Some(5)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("2.0000e-2"));
        assert_eq!(plan_substeps("probe", 0.1, 0.01, Some(10)).unwrap(), 10);
        assert!(plan_substeps("probe", 0.1, 0.01, None).unwrap() >= 13);
    }
}
