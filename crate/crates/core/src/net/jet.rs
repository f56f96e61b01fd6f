use crate::error::{Error, Result};

/// Which derivatives with respect to the inputs a jet pass carries.
///
/// Channel 0 is the value, then one channel per first-derivative axis, then
/// one per second-derivative pair `(a, b)`, `a <= b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpec {
    first: Vec<usize>,
    second: Vec<(usize, usize)>,
}

impl JetSpec {
    /// Values only.
    pub fn value() -> Self {
        JetSpec { first: Vec::new(), second: Vec::new() }
    }

    /// First derivatives along `first` and second derivatives for `second`
    /// pairs. Axes needed by a pair are added to the first-order list.
    pub fn new(first: &[usize], second: &[(usize, usize)]) -> Self {
        let mut f: Vec<usize> = first.to_vec();
        let mut s = Vec::new();
        for &(a, b) in second {
            let p = (a.min(b), a.max(b));
            if !s.contains(&p) {
                s.push(p);
            }
            for axis in [p.0, p.1] {
                if !f.contains(&axis) {
                    f.push(axis);
                }
            }
        }
        f.sort_unstable();
        f.dedup();
        JetSpec { first: f, second: s }
    }

    pub fn channels(&self) -> usize {
        1 + self.first.len() + self.second.len()
    }

    pub fn first_axes(&self) -> &[usize] {
        &self.first
    }

    pub fn second_pairs(&self) -> &[(usize, usize)] {
        &self.second
    }

    pub fn first_channel(&self, axis: usize) -> Option<usize> {
        self.first.iter().position(|&a| a == axis).map(|p| 1 + p)
    }

    pub fn second_channel(&self, a: usize, b: usize) -> Option<usize> {
        let p = (a.min(b), a.max(b));
        self.second.iter().position(|&q| q == p).map(|i| 1 + self.first.len() + i)
    }

    pub(crate) fn check_inputs(&self, inputs: usize) -> Result<()> {
        if self.first.iter().any(|&a| a >= inputs) {
            return Err(Error::Argument(format!("jet axis out of range for {inputs} inputs")));
        }
        Ok(())
    }
}

/// Jet values for a batch: layout `[channel][point][output]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetBatch {
    pub spec: JetSpec,
    pub points: usize,
    pub outputs: usize,
    pub data: Vec<f64>,
}

impl JetBatch {
    pub fn zeros(spec: JetSpec, points: usize, outputs: usize) -> Self {
        let n = spec.channels() * points * outputs;
        JetBatch { spec, points, outputs, data: vec![0.0; n] }
    }

    #[inline]
    pub fn index(&self, channel: usize, point: usize, output: usize) -> usize {
        (channel * self.points + point) * self.outputs + output
    }

    #[inline]
    pub fn get(&self, channel: usize, point: usize, output: usize) -> f64 {
        self.data[self.index(channel, point, output)]
    }

    #[inline]
    pub fn value(&self, point: usize, output: usize) -> f64 {
        self.get(0, point, output)
    }

    /// First derivative along `axis`; panics if the spec does not carry it.
    pub fn d(&self, point: usize, output: usize, axis: usize) -> f64 {
        let c = self.spec.first_channel(axis).expect("axis not in jet");
        self.get(c, point, output)
    }

    /// Second derivative for the pair `(a, b)`; panics if the spec does not carry it.
    pub fn dd(&self, point: usize, output: usize, a: usize, b: usize) -> f64 {
        let c = self.spec.second_channel(a, b).expect("pair not in jet");
        self.get(c, point, output)
    }

    /// Mutable slot, used to seed gradients.
    #[inline]
    pub fn slot(&mut self, channel: usize, point: usize, output: usize) -> &mut f64 {
        let i = self.index(channel, point, output);
        &mut self.data[i]
    }
}
