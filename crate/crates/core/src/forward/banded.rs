//! Banded LU factorisation with partial pivoting for complex systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square band matrix: row `i` stores columns `i - lower ..= i + lower + upper`,
/// the extra `lower` diagonals holding fill from row interchanges.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        BandMatrix { n, lower, upper, width, data: vec![Complex64::new(0.0, 0.0); n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.lower + self.upper, "({i},{j}) outside band");
        i * self.width + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.lower < i || j > i + self.lower + self.upper {
            Complex64::new(0.0, 0.0)
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)`, which must lie within the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(j + self.lower >= i && j <= i + self.upper, "entry ({i},{j}) outside declared band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.lower + self.upper + 1).min(self.n);
                (lo..hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }
}

/// In-place LU factors of a [`BandMatrix`] (multipliers stored below the
/// diagonal, row interchanges recorded but not applied to earlier columns).
pub struct BandedLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(mut a: BandMatrix) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.lower, a.upper);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl + 1).min(n);
            let last_col = (k + kl + ku + 1).min(n);
            let mut p = k;
            let mut best = a.data[a.slot(k, k)].norm();
            for i in k + 1..last_row {
                let v = a.data[a.slot(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Numerical(format!("singular band matrix at column {k}")));
            }
            pivots[k] = p;
            if p != k {
                for j in k..last_col {
                    let (s1, s2) = (a.slot(k, j), a.slot(p, j));
                    a.data.swap(s1, s2);
                }
            }
            let pivot = a.data[a.slot(k, k)];
            for i in k + 1..last_row {
                let sik = a.slot(i, k);
                let l = a.data[sik] / pivot;
                a.data[sik] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row_k = a.slot(k, k + 1);
                let row_i = a.slot(i, k + 1);
                for off in 0..last_col - k - 1 {
                    let u = a.data[row_k + off];
                    a.data[row_i + off] -= l * u;
                }
            }
        }
        Ok(BandedLu { lu: a, pivots })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let a = &self.lu;
        let (n, kl, ku) = (a.n, a.lower, a.upper);
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..(k + kl + 1).min(n) {
                x[i] -= a.data[a.slot(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..(k + kl + ku + 1).min(n) {
                s -= a.data[a.slot(k, j)] * x[j];
            }
            x[k] = s / a.data[a.slot(k, k)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_banded_system_needing_pivots() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, kl, ku) = (40, 3, 2);
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal forces interchanges
                let scale = if i == j { 0.01 } else { 1.0 };
                a.add(i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale);
            }
        }
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let b = a.mul_vec(&x_true);
        let x = BandedLu::factor(a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-8, "{u} vs {v}");
        }
    }
}
