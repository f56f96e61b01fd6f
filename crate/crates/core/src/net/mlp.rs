use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::jet::{JetBatch, JetSpec};
use crate::error::{Error, Result};

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

impl Activation {
    /// Value and first three derivatives at `z`.
    #[inline]
    fn eval(self, z: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let h = z.tanh();
                let d1 = 1.0 - h * h;
                let d2 = -2.0 * h * d1;
                let d3 = -2.0 * d1 * d1 - 2.0 * h * d2;
                [h, d1, d2, d3]
            }
        }
    }
}

/// Map applied to one output of the final linear layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Identity,
    /// `ln(1 + e^z)`, keeps the output positive.
    Softplus,
}

impl Head {
    #[inline]
    pub(crate) fn eval(self, z: f64) -> [f64; 4] {
        match self {
            Head::Identity => [z, 1.0, 0.0, 0.0],
            Head::Softplus => {
                let v = z.max(0.0) + (-z.abs()).exp().ln_1p();
                let s = 1.0 / (1.0 + (-z).exp());
                let d2 = s * (1.0 - s);
                [v, s, d2, d2 * (1.0 - 2.0 * s)]
            }
        }
    }

    pub fn apply(self, z: f64) -> f64 {
        self.eval(z)[0]
    }

    /// Pre-activation that maps to `value`.
    pub fn inverse(self, value: f64) -> f64 {
        match self {
            Head::Identity => value,
            Head::Softplus => {
                if value > 30.0 {
                    value
                } else {
                    value.exp_m1().ln()
                }
            }
        }
    }
}

/// Multilayer perceptron. Inputs are shifted and scaled before the first
/// layer, and all derivatives are taken with respect to the unscaled inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
    heads: Vec<Head>,
    params: Vec<f64>,
    input_shift: Vec<f64>,
    input_scale: Vec<f64>,
    seed: u64,
}

/// Serialised network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub heads: Vec<Head>,
    /// Per layer, `out x in` row-major.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub seed: u64,
}

/// Intermediate channel matrices kept for the reverse pass.
pub struct JetTape {
    spec: JetSpec,
    points: usize,
    /// Pre-activation jets per layer, `[channel][point][unit]`.
    pre: Vec<Vec<f64>>,
    /// Post-activation jets; entry 0 is the input jet.
    post: Vec<Vec<f64>>,
    pub output: JetBatch,
}

impl JetTape {
    pub fn spec(&self) -> &JetSpec {
        &self.spec
    }
}

/// Channel bookkeeping for the elementwise rules.
struct ChannelMap {
    first: Vec<usize>,
    /// (pair channel, channel of a, channel of b)
    pairs: Vec<(usize, usize, usize)>,
}

impl ChannelMap {
    fn new(spec: &JetSpec) -> Self {
        let first = (0..spec.first_axes().len()).map(|i| 1 + i).collect();
        let pairs = spec
            .second_pairs()
            .iter()
            .map(|&(a, b)| {
                (
                    spec.second_channel(a, b).unwrap(),
                    spec.first_channel(a).unwrap(),
                    spec.first_channel(b).unwrap(),
                )
            })
            .collect();
        ChannelMap { first, pairs }
    }
}

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (isize, isize),
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the slices cover the strided m x k, k x n and m x n views
    // described by the strides, which every caller passes as dense layouts.
    unsafe {
        matrixmultiply::dgemm(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), rsc, csc);
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases, identity input scaling.
    pub fn new(sizes: &[usize], heads: Vec<Head>, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let out = *sizes.last().unwrap();
        if heads.len() != out {
            return Err(Error::Config(format!("{} output heads for {out} outputs", heads.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            activation: Activation::Tanh,
            heads,
            params,
            input_shift: vec![0.0; sizes[0]],
            input_scale: vec![1.0; sizes[0]],
            seed,
        })
    }

    /// Maps the box `[lower, upper]` of each input onto `[-1, 1]`.
    pub fn with_input_box(mut self, lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != self.inputs() || upper.len() != self.inputs() {
            return Err(Error::Config("input box dimension mismatch".into()));
        }
        for i in 0..self.inputs() {
            if !(upper[i] > lower[i]) {
                return Err(Error::Config(format!("input box axis {i} is empty")));
            }
            self.input_shift[i] = 0.5 * (lower[i] + upper[i]);
            self.input_scale[i] = 2.0 / (upper[i] - lower[i]);
        }
        Ok(self)
    }

    /// Sets every output bias so the network starts near `values` (through the heads).
    pub fn set_output_bias(&mut self, values: &[f64]) {
        let layers = self.sizes.len() - 1;
        let (_, b_off) = self.offsets(layers - 1);
        for (j, &v) in values.iter().enumerate() {
            self.params[b_off + j] = self.heads[j].inverse(v);
        }
    }

    pub fn inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn outputs(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn heads(&self) -> &[Head] {
        &self.heads
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self, layer: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(layer) {
            off += w[0] * w[1] + w[1];
        }
        (off, off + self.sizes[layer] * self.sizes[layer + 1])
    }

    /// Output values for `inputs` laid out point by point.
    pub fn forward(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_jet(inputs, &JetSpec::value())?.output.data)
    }

    pub fn forward_jet(&self, inputs: &[f64], spec: &JetSpec) -> Result<JetTape> {
        let d = self.inputs();
        if inputs.len() % d != 0 {
            return Err(Error::Argument(format!("input length {} not a multiple of {d}", inputs.len())));
        }
        spec.check_inputs(d)?;
        let b = inputs.len() / d;
        let ch = spec.channels();
        let map = ChannelMap::new(spec);
        let mut input_jet = vec![0.0; ch * b * d];
        for i in 0..b {
            for a in 0..d {
                input_jet[i * d + a] = (inputs[i * d + a] - self.input_shift[a]) * self.input_scale[a];
            }
        }
        for (k, &axis) in spec.first_axes().iter().enumerate() {
            let c = map.first[k];
            for i in 0..b {
                input_jet[(c * b + i) * d + axis] = self.input_scale[axis];
            }
        }
        let layers = self.sizes.len() - 1;
        let mut pre = Vec::with_capacity(layers);
        let mut post = vec![input_jet];
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.offsets(l);
            let w = &self.params[w_off..w_off + n_in * n_out];
            let bias = &self.params[b_off..b_off + n_out];
            let mut z = vec![0.0; ch * b * n_out];
            let rows = ch * b;
            gemm(rows, n_in, n_out, &post[l], (n_in as isize, 1), w, (1, n_in as isize), 0.0, &mut z, (n_out as isize, 1));
            for i in 0..b {
                for (zj, bj) in z[i * n_out..(i + 1) * n_out].iter_mut().zip(bias) {
                    *zj += bj;
                }
            }
            let h = if l + 1 < layers {
                let act = self.activation;
                activate(&z, b, n_out, &map, |_, v| act.eval(v))
            } else {
                let heads = &self.heads;
                activate(&z, b, n_out, &map, |j, v| heads[j].eval(v))
            };
            pre.push(z);
            post.push(h);
        }
        let out_data = post.last().unwrap().clone();
        let output = JetBatch { spec: spec.clone(), points: b, outputs: self.outputs(), data: out_data };
        Ok(JetTape { spec: spec.clone(), points: b, pre, post, output })
    }

    /// Gradient of a scalar loss with respect to the parameters, given the
    /// loss gradient with respect to every output jet channel.
    pub fn backward(&self, tape: &JetTape, grad_output: &JetBatch) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        self.backward_into(tape, grad_output, &mut grad);
        grad
    }

    /// Accumulates the parameter gradient into `grad`.
    pub fn backward_into(&self, tape: &JetTape, grad_output: &JetBatch, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        assert_eq!(grad_output.data.len(), tape.output.data.len());
        let b = tape.points;
        let ch = tape.spec.channels();
        let map = ChannelMap::new(&tape.spec);
        let layers = self.sizes.len() - 1;
        let mut g_post = grad_output.data.clone();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let g_pre = if l + 1 < layers {
                let act = self.activation;
                activate_backward(&tape.pre[l], &g_post, b, n_out, &map, |_, v| act.eval(v))
            } else {
                let heads = &self.heads;
                activate_backward(&tape.pre[l], &g_post, b, n_out, &map, |j, v| heads[j].eval(v))
            };
            let (w_off, b_off) = self.offsets(l);
            let rows = ch * b;
            {
                let gw = &mut grad[w_off..w_off + n_in * n_out];
                gemm(n_out, rows, n_in, &g_pre, (1, n_out as isize), &tape.post[l], (n_in as isize, 1), 1.0, gw, (n_in as isize, 1));
            }
            for i in 0..b {
                for j in 0..n_out {
                    grad[b_off + j] += g_pre[i * n_out + j];
                }
            }
            if l > 0 {
                let w = &self.params[w_off..w_off + n_in * n_out];
                let mut g_in = vec![0.0; rows * n_in];
                gemm(rows, n_out, n_in, &g_pre, (n_out as isize, 1), w, (n_in as isize, 1), 0.0, &mut g_in, (n_in as isize, 1));
                g_post = g_in;
            }
        }
    }

    pub fn to_checkpoint(&self) -> MlpCheckpoint {
        let layers = self.sizes.len() - 1;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (w_off, b_off) = self.offsets(l);
            weights.push(self.params[w_off..b_off].to_vec());
            biases.push(self.params[b_off..b_off + self.sizes[l + 1]].to_vec());
        }
        MlpCheckpoint {
            layer_sizes: self.sizes.clone(),
            activation: self.activation,
            heads: self.heads.clone(),
            weights,
            biases,
            input_shift: self.input_shift.clone(),
            input_scale: self.input_scale.clone(),
            seed: self.seed,
        }
    }

    pub fn from_checkpoint(c: &MlpCheckpoint) -> Result<Self> {
        let mut net = Mlp::new(&c.layer_sizes, c.heads.clone(), c.seed)?;
        let layers = c.layer_sizes.len() - 1;
        if c.weights.len() != layers || c.biases.len() != layers {
            return Err(Error::format("checkpoint", "layer count mismatch"));
        }
        if c.input_shift.len() != net.inputs() || c.input_scale.len() != net.inputs() {
            return Err(Error::format("checkpoint", "input scaling dimension mismatch"));
        }
        for l in 0..layers {
            let (w_off, b_off) = net.offsets(l);
            let n_out = c.layer_sizes[l + 1];
            if c.weights[l].len() != b_off - w_off || c.biases[l].len() != n_out {
                return Err(Error::format("checkpoint", format!("layer {l} has wrong parameter counts")));
            }
            net.params[w_off..b_off].copy_from_slice(&c.weights[l]);
            net.params[b_off..b_off + n_out].copy_from_slice(&c.biases[l]);
        }
        net.activation = c.activation;
        net.input_shift = c.input_shift.clone();
        net.input_scale = c.input_scale.clone();
        Ok(net)
    }
}

/// Applies `phi` (value and three derivatives) to a pre-activation jet.
fn activate(z: &[f64], b: usize, n: usize, map: &ChannelMap, phi: impl Fn(usize, f64) -> [f64; 4]) -> Vec<f64> {
    let mut h = vec![0.0; z.len()];
    let at = |c: usize, i: usize, j: usize| (c * b + i) * n + j;
    for i in 0..b {
        for j in 0..n {
            let [v, d1, d2, _] = phi(j, z[at(0, i, j)]);
            h[at(0, i, j)] = v;
            for &c in &map.first {
                h[at(c, i, j)] = d1 * z[at(c, i, j)];
            }
            for &(cp, ca, cb) in &map.pairs {
                h[at(cp, i, j)] = d2 * z[at(ca, i, j)] * z[at(cb, i, j)] + d1 * z[at(cp, i, j)];
            }
        }
    }
    h
}

fn activate_backward(
    z: &[f64],
    gh: &[f64],
    b: usize,
    n: usize,
    map: &ChannelMap,
    phi: impl Fn(usize, f64) -> [f64; 4],
) -> Vec<f64> {
    let mut gz = vec![0.0; z.len()];
    let at = |c: usize, i: usize, j: usize| (c * b + i) * n + j;
    for i in 0..b {
        for j in 0..n {
            let [_, d1, d2, d3] = phi(j, z[at(0, i, j)]);
            let mut g0 = gh[at(0, i, j)] * d1;
            for &c in &map.first {
                let k = at(c, i, j);
                g0 += gh[k] * d2 * z[k];
                gz[k] += gh[k] * d1;
            }
            for &(cp, ca, cb) in &map.pairs {
                let (kp, ka, kb) = (at(cp, i, j), at(ca, i, j), at(cb, i, j));
                let g = gh[kp];
                if g == 0.0 {
                    continue;
                }
                g0 += g * (d3 * z[ka] * z[kb] + d2 * z[kp]);
                gz[kp] += g * d1;
                if ca == cb {
                    gz[ka] += g * 2.0 * d2 * z[ka];
                } else {
                    gz[ka] += g * d2 * z[kb];
                    gz[kb] += g * d2 * z[ka];
                }
            }
            gz[at(0, i, j)] = g0;
        }
    }
    gz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_linear_unit_matches_closed_form() {
        // one identity layer: y = w.x + b, so dy/dx_a = w_a * scale_a
        let mut net = Mlp::new(&[2, 1], vec![Head::Identity], 0).unwrap().with_input_box(&[0.0, 0.0], &[2.0, 4.0]).unwrap();
        net.params_mut().copy_from_slice(&[0.5, -1.0, 0.25]);
        let spec = JetSpec::new(&[0, 1], &[(0, 0)]);
        let tape = net.forward_jet(&[1.0, 3.0], &spec).unwrap();
        let out = &tape.output;
        // normalised inputs: (0, 0.5)
        assert!((out.value(0, 0) - (0.5 * 0.0 - 1.0 * 0.5 + 0.25)).abs() < 1e-15);
        assert!((out.d(0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((out.d(0, 0, 1) + 0.5).abs() < 1e-15);
        assert_eq!(out.dd(0, 0, 0, 0), 0.0);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let net = Mlp::new(&[2, 5, 3, 2], vec![Head::Identity, Head::Softplus], 4)
            .unwrap()
            .with_input_box(&[-1.0, 0.0], &[1.0, 10.0])
            .unwrap();
        let back = Mlp::from_checkpoint(&net.to_checkpoint()).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn softplus_inverse() {
        for v in [1e-3, 0.1, 1.0, 40.0] {
            let z = Head::Softplus.inverse(v);
            assert!((Head::Softplus.eval(z)[0] - v).abs() < 1e-12 * v.max(1.0));
        }
    }
}
