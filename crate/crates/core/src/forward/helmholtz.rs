//! `u_xx + u_yy + k(x, y)^2 u = f` on a rectangle with the first-order
//! absorbing condition `du/dn - i k u = g` on every edge.
//!
//! Five-point Laplacian; the boundary condition eliminates a mirrored ghost
//! node with a centred normal difference, which keeps the scheme second order
//! and the matrix band no wider than one grid row. The system is solved by
//! banded LU with partial pivoting followed by iterative refinement.

use num_complex::Complex64;

use super::banded::{BandMatrix, BandedLu};
use crate::error::{Error, Result};
use crate::field::SolutionField;
use crate::grid::Grid;
use crate::schedule::Schedule;

/// Complex-valued function of `(x, y)`.
pub type ComplexFn<'a> = &'a dyn Fn(f64, f64) -> Complex64;

/// Boundary data `g(x, y, n)` for outward unit normal `n`.
pub type BoundaryFn<'a> = &'a dyn Fn(f64, f64, [f64; 2]) -> Complex64;

pub struct HelmholtzOptions<'a> {
    pub source: ComplexFn<'a>,
    /// Inhomogeneous boundary data; `None` means `g = 0`.
    pub boundary: Option<BoundaryFn<'a>>,
    /// Required relative residual `|b - A x| / |b|`.
    pub tolerance: f64,
    pub max_refinements: usize,
}

pub fn solve(grid: &Grid, wavenumber: &Schedule, opts: &HelmholtzOptions) -> Result<SolutionField> {
    if grid.spatial().len() != 2 || grid.time().is_some() {
        return Err(Error::Config("Helmholtz solver needs axes x, y and no time axis".into()));
    }
    wavenumber.validate()?;
    let (xax, yax) = (&grid.spatial()[0], &grid.spatial()[1]);
    let (nx, ny) = (xax.nodes, yax.nodes);
    let (dx, dy) = (xax.step(), yax.step());
    let (xs, ys) = (xax.coords(), yax.coords());
    let n = nx * ny;
    let idx = |i: usize, j: usize| i * ny + j;
    let zero = Complex64::new(0.0, 0.0);

    let mut a = BandMatrix::zeros(n, ny, ny);
    let mut b = vec![zero; n];
    for i in 0..nx {
        for j in 0..ny {
            let (x, y) = (xs[i], ys[j]);
            let k = wavenumber.at_point(x, y);
            if !(k > 0.0) {
                return Err(Error::Config(format!("wavenumber must be positive, got {k} at ({x}, {y})")));
            }
            let row = idx(i, j);
            let mut rhs = (opts.source)(x, y);
            a.add(row, row, Complex64::new(k * k, 0.0));
            // x direction
            let mut direction = |pos: usize, len: usize, h: f64, a: &mut BandMatrix, stride: usize, normal_axis: usize| {
                let h2 = h * h;
                if pos > 0 && pos + 1 < len {
                    a.add(row, row - stride, Complex64::new(1.0 / h2, 0.0));
                    a.add(row, row + stride, Complex64::new(1.0 / h2, 0.0));
                    a.add(row, row, Complex64::new(-2.0 / h2, 0.0));
                } else {
                    let (nb, sign) = if pos == 0 { (row + stride, -1.0) } else { (row - stride, 1.0) };
                    let mut normal = [0.0; 2];
                    normal[normal_axis] = sign;
                    a.add(row, nb, Complex64::new(2.0 / h2, 0.0));
                    a.add(row, row, Complex64::new(-2.0 / h2, 2.0 * k / h));
                    if let Some(g) = opts.boundary {
                        rhs -= 2.0 * g(x, y, normal) / h;
                    }
                }
            };
            direction(i, nx, dx, &mut a, ny, 0);
            direction(j, ny, dy, &mut a, 1, 1);
            b[row] = rhs;
        }
    }

    let b_norm = norm(&b);
    let mut x = vec![zero; n];
    if b_norm > 0.0 {
        let lu = BandedLu::factor(a.clone())?;
        x = lu.solve(&b);
        let mut rel = f64::INFINITY;
        for _ in 0..=opts.max_refinements {
            let ax = a.mul_vec(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
            rel = norm(&r) / b_norm;
            if rel <= opts.tolerance {
                break;
            }
            let dx = lu.solve(&r);
            for (u, d) in x.iter_mut().zip(&dx) {
                *u += d;
            }
        }
        if !(rel <= opts.tolerance) {
            return Err(Error::Numerical(format!(
                "Helmholtz relative residual {rel:.3e} above tolerance {:.1e}",
                opts.tolerance
            )));
        }
    }
    let mut field = SolutionField::zeros(grid.clone(), 2);
    for (k, u) in x.iter().enumerate() {
        field.values[2 * k] = u.re;
        field.values[2 * k + 1] = u.im;
    }
    Ok(field)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
