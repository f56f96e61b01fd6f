//! Continuous-time Markov switching between coefficient regimes.
//!
//! A generator matrix `Q` (rows sum to zero, non-negative off-diagonals) gives
//! transition probabilities `P(dt) = exp(Q dt)` between the regimes sampled at
//! consecutive grid nodes.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::grid::FlattenMap;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("matrix rows must form a non-empty square".into()));
        }
        Ok(Matrix { n, data: rows.concat() })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    fn add_assign(&mut self, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Validated transition-rate matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator(Matrix);

impl Generator {
    pub fn new(q: Matrix) -> Result<Self> {
        for i in 0..q.n {
            let row = q.row(i);
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGenerator(format!("row {i} has a non-finite rate")));
            }
            if let Some(j) = (0..q.n).find(|&j| j != i && row[j] < 0.0) {
                return Err(Error::InvalidGenerator(format!("negative rate {} at ({i},{j})", row[j])));
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() >= ROW_SUM_TOLERANCE {
                return Err(Error::InvalidGenerator(format!("row {i} sums to {sum:e}")));
            }
        }
        Ok(Generator(q))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// `exp(Q dt)`.
    pub fn transition_matrix(&self, dt: f64) -> Result<Matrix> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::Argument(format!("time step must be finite and >= 0, got {dt}")));
        }
        Ok(expm(&self.0.scale(dt)))
    }

    /// Jump-chain simulation on `[0, horizon]`; returns the state at each of `times`.
    pub fn simulate<R: Rng>(&self, start: usize, times: &[f64], rng: &mut R) -> Vec<usize> {
        let q = &self.0;
        let mut out = Vec::with_capacity(times.len());
        let mut state = start;
        let mut clock = 0.0;
        let mut next_jump = holding_time(q, state, rng);
        for &t in times {
            while clock + next_jump <= t {
                clock += next_jump;
                state = jump_target(q, state, rng);
                next_jump = holding_time(q, state, rng);
            }
            out.push(state);
        }
        out
    }
}

fn holding_time<R: Rng>(q: &Matrix, state: usize, rng: &mut R) -> f64 {
    let rate = -q.get(state, state);
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        Exp::new(rate).expect("positive rate").sample(rng)
    }
}

fn jump_target<R: Rng>(q: &Matrix, state: usize, rng: &mut R) -> usize {
    let rate = -q.get(state, state);
    let mut u = rng.gen::<f64>() * rate;
    let mut last = state;
    for j in 0..q.n {
        if j == state {
            continue;
        }
        let r = q.get(state, j);
        if r > 0.0 {
            last = j;
            if u < r {
                return j;
            }
            u -= r;
        }
    }
    last
}

/// Matrix exponential by scaling and squaring with a degree-12 Taylor polynomial.
pub fn expm(a: &Matrix) -> Matrix {
    let norm = a.norm_inf();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.scale(0.5f64.powi(squarings as i32));
    // Horner evaluation of sum_{k=0}^{12} A^k / k!
    let mut result = Matrix::identity(a.n);
    for k in (1..=12).rev() {
        result = scaled.mul(&result).scale(1.0 / k as f64);
        result.add_assign(&Matrix::identity(a.n));
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// Row-major flattening of an n-dimensional label array into a sequence.
pub fn flatten_field<T: Copy>(map: &FlattenMap, values: &[T]) -> Result<Vec<T>> {
    if values.len() != map.len() {
        return Err(Error::Argument(format!("field has {} values, shape needs {}", values.len(), map.len())));
    }
    Ok(values.to_vec())
}

/// Row-normalised counts of consecutive label pairs. Rows with no outgoing
/// transitions are left as zeros.
pub fn empirical_transition_matrix(labels: &[usize], states: usize) -> Matrix {
    let mut m = Matrix::zeros(states);
    for w in labels.windows(2) {
        m.data[w[0] * states + w[1]] += 1.0;
    }
    for i in 0..states {
        let total: f64 = m.row(i).iter().sum();
        if total > 0.0 {
            for j in 0..states {
                m.data[i * states + j] /= total;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state(a: f64, b: f64) -> Generator {
        Generator::new(Matrix::from_rows(&[vec![-a, a], vec![b, -b]]).unwrap()).unwrap()
    }

    #[test]
    fn two_state_closed_form() {
        // P00(t) = b/(a+b) + a/(a+b) exp(-(a+b) t)
        let (a, b, t) = (0.7, 0.3, 1.9);
        let p = two_state(a, b).transition_matrix(t).unwrap();
        let p00 = b / (a + b) + a / (a + b) * (-(a + b) * t).exp();
        let p11 = a / (a + b) + b / (a + b) * (-(a + b) * t).exp();
        assert!((p.get(0, 0) - p00).abs() < 1e-12);
        assert!((p.get(1, 1) - p11).abs() < 1e-12);
    }

    #[test]
    fn exponential_of_diagonal() {
        let d = Matrix::from_rows(&[vec![1.5, 0.0], vec![0.0, -3.0]]).unwrap();
        let e = expm(&d);
        assert!((e.get(0, 0) - 1.5f64.exp()).abs() < 1e-12 * 1.5f64.exp());
        assert!((e.get(1, 1) - (-3.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_generators() {
        let bad_sum = Matrix::from_rows(&[vec![-1.0, 1.0 + 1e-9], vec![0.5, -0.5]]).unwrap();
        assert!(matches!(Generator::new(bad_sum), Err(Error::InvalidGenerator(_))));
        let negative = Matrix::from_rows(&[vec![1.0, -1.0], vec![0.5, -0.5]]).unwrap();
        assert!(Generator::new(negative).is_err());
    }

    #[test]
    fn simulated_chain_matches_transition_matrix() {
        let q = two_state(0.8, 0.4);
        let p = q.transition_matrix(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut hits, trials) = (0usize, 20000);
        for _ in 0..trials {
            let s = q.simulate(0, &[0.5], &mut rng);
            hits += usize::from(s[0] == 1);
        }
        let freq = hits as f64 / trials as f64;
        assert!((freq - p.get(0, 1)).abs() < 0.015, "{freq} vs {}", p.get(0, 1));
    }

    #[test]
    fn empirical_matrix_counts_pairs() {
        let m = empirical_transition_matrix(&[0, 0, 1, 1, 1, 0], 2);
        assert_eq!(m.row(0), &[0.5, 0.5]);
        assert!((m.get(1, 1) - 2.0 / 3.0).abs() < 1e-15);
    }

    fn generator_strategy() -> impl Strategy<Value = Generator> {
        (2usize..5).prop_flat_map(|n| proptest::collection::vec(0.0f64..3.0, n * n)).prop_map(|raw| {
            let n = (raw.len() as f64).sqrt() as usize;
            let mut data = raw;
            for i in 0..n {
                data[i * n + i] = 0.0;
                let s: f64 = data[i * n..(i + 1) * n].iter().sum();
                data[i * n + i] = -s;
            }
            Generator::new(Matrix { n, data }).unwrap()
        })
    }

    proptest! {
        #[test]
        fn transition_matrix_is_stochastic(q in generator_strategy(), dt in 0.0f64..5.0) {
            let p = q.transition_matrix(dt).unwrap();
            for i in 0..p.n {
                let row = p.row(i);
                prop_assert!(row.iter().all(|&v| v >= -1e-12));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn semigroup_property(q in generator_strategy(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
            let lhs = q.transition_matrix(s + t).unwrap();
            let rhs = q.transition_matrix(s).unwrap().mul(&q.transition_matrix(t).unwrap());
            for (a, b) in lhs.data.iter().zip(&rhs.data) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn flatten_roundtrip(shape in proptest::collection::vec(1usize..5, 1..4)) {
            let m = FlattenMap::new(shape);
            for k in 0..m.len() {
                prop_assert_eq!(m.flatten(&m.unflatten(k)), k);
            }
        }
    }
}
