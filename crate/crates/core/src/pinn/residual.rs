//! Pointwise residual terms and their partial derivatives.

use serde::{Deserialize, Serialize};

use crate::net::{JetBatch, JetSpec};
use crate::problem::{Equation, InitialProfile, SourceProfile};

pub(crate) const MAX_CHANNELS: usize = 7;
pub(crate) const MAX_OUTPUTS: usize = 2;
pub(crate) const MAX_COEFFICIENTS: usize = 2;

/// Where a collocation point sits and therefore which conditions apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Interior,
    /// On the initial slice `t = 0`.
    Initial,
    /// On the face `axis = lower` or `axis = upper`.
    Boundary { axis: usize, upper: bool },
}

/// One squared term `r^2` with `dr/d(jet channel, output)` and `dr/d(coefficient)`.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Term {
    pub r: f64,
    pub du: [[f64; MAX_OUTPUTS]; MAX_CHANNELS],
    pub dtheta: [f64; MAX_COEFFICIENTS],
}

/// Jet channels the solution network must carry for an equation.
pub fn solution_jet_spec(eq: Equation) -> JetSpec {
    match eq {
        Equation::SineGordon => JetSpec::new(&[0, 1], &[(0, 0), (1, 1)]),
        Equation::Fisher | Equation::Burgers => JetSpec::new(&[0, 1], &[(0, 0)]),
        Equation::Advection => JetSpec::new(&[0, 1], &[]),
        Equation::Wave2d => JetSpec::new(&[0, 1, 2], &[(0, 0), (1, 1), (2, 2)]),
        Equation::Helmholtz => JetSpec::new(&[0, 1], &[(0, 0), (1, 1)]),
    }
}

/// Static description of the physics at the collocation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeProblem {
    pub equation: Equation,
    /// `(lower, upper)` per coordinate, spatial axes first, then time.
    pub bounds: Vec<(f64, f64)>,
    pub initial: Option<InitialProfile>,
    pub source: Option<SourceProfile>,
}

impl PdeProblem {
    /// Classifies a grid point; initial slice wins over faces.
    pub fn classify(&self, p: &[f64]) -> PointKind {
        let eq = self.equation;
        if eq == Equation::Advection {
            return PointKind::Interior;
        }
        let tol = |lo: f64, hi: f64| 1e-12 * (hi - lo).abs().max(1.0);
        if eq.has_time() {
            let t_axis = eq.spatial_dims();
            let (lo, hi) = self.bounds[t_axis];
            if (p[t_axis] - lo).abs() <= tol(lo, hi) {
                return PointKind::Initial;
            }
        }
        for axis in 0..eq.spatial_dims() {
            let (lo, hi) = self.bounds[axis];
            if (p[axis] - lo).abs() <= tol(lo, hi) {
                return PointKind::Boundary { axis, upper: false };
            }
            if (p[axis] - hi).abs() <= tol(lo, hi) {
                return PointKind::Boundary { axis, upper: true };
            }
        }
        PointKind::Interior
    }

    /// Residual terms at point `i` of `jet` (coordinates `p`, coefficients `theta`).
    /// Returns the number of terms written.
    pub(crate) fn terms(&self, kind: PointKind, p: &[f64], jet: &JetBatch, i: usize, theta: &[f64], out: &mut [Term; 2]) -> usize {
        let spec = &jet.spec;
        let eq = self.equation;
        let c1 = |axis: usize| spec.first_channel(axis).expect("missing first-derivative channel");
        let c2 = |axis: usize| spec.second_channel(axis, axis).expect("missing second-derivative channel");
        let u = |c: usize, o: usize| jet.get(c, i, o);
        out[0] = Term::default();
        out[1] = Term::default();
        match kind {
            PointKind::Interior => match eq {
                Equation::SineGordon => {
                    let (a, v, uxx, utt) = (theta[0], u(0, 0), u(c2(0), 0), u(c2(1), 0));
                    let t = &mut out[0];
                    t.r = utt - a * uxx - v.sin();
                    t.du[0][0] = -v.cos();
                    t.du[c2(1)][0] = 1.0;
                    t.du[c2(0)][0] = -a;
                    t.dtheta[0] = -uxx;
                    1
                }
                Equation::Wave2d => {
                    let a = theta[0];
                    let lap = u(c2(0), 0) + u(c2(1), 0);
                    let t = &mut out[0];
                    t.r = u(c2(2), 0) - a * lap;
                    t.du[c2(2)][0] = 1.0;
                    t.du[c2(0)][0] = -a;
                    t.du[c2(1)][0] = -a;
                    t.dtheta[0] = -lap;
                    1
                }
                Equation::Fisher => {
                    let (c, v, ut, uxx) = (theta[0], u(0, 0), u(c1(1), 0), u(c2(0), 0));
                    let t = &mut out[0];
                    t.r = ut - c * uxx - v + v * v;
                    t.du[0][0] = -1.0 + 2.0 * v;
                    t.du[c1(1)][0] = 1.0;
                    t.du[c2(0)][0] = -c;
                    t.dtheta[0] = -uxx;
                    1
                }
                Equation::Burgers => {
                    let (l1, l2) = (theta[0], theta[1]);
                    let (v, ux, ut, uxx) = (u(0, 0), u(c1(0), 0), u(c1(1), 0), u(c2(0), 0));
                    let t = &mut out[0];
                    t.r = ut - l1 * v * ux - l2 * uxx;
                    t.du[0][0] = -l1 * ux;
                    t.du[c1(0)][0] = -l1 * v;
                    t.du[c1(1)][0] = 1.0;
                    t.du[c2(0)][0] = -l2;
                    t.dtheta[0] = -v * ux;
                    t.dtheta[1] = -uxx;
                    1
                }
                Equation::Advection => {
                    let (c, ux, ut) = (theta[0], u(c1(0), 0), u(c1(1), 0));
                    let t = &mut out[0];
                    t.r = ut - c * ux;
                    t.du[c1(1)][0] = 1.0;
                    t.du[c1(0)][0] = -c;
                    t.dtheta[0] = -ux;
                    1
                }
                Equation::Helmholtz => {
                    let k = theta[0];
                    let f = self.source.as_ref().map_or(0.0, |s| s.eval(p));
                    for o in 0..2 {
                        let t = &mut out[o];
                        let v = u(0, o);
                        t.r = u(c2(0), o) + u(c2(1), o) + k * k * v - if o == 0 { f } else { 0.0 };
                        t.du[c2(0)][o] = 1.0;
                        t.du[c2(1)][o] = 1.0;
                        t.du[0][o] = k * k;
                        t.dtheta[0] = 2.0 * k * v;
                    }
                    2
                }
            },
            PointKind::Initial => {
                let g = self.initial.as_ref().map_or(0.0, |g| g.eval(p));
                out[0].r = u(0, 0) - g;
                out[0].du[0][0] = 1.0;
                if eq.second_order_in_time() {
                    let ct = c1(eq.spatial_dims());
                    out[1].r = u(ct, 0);
                    out[1].du[ct][0] = 1.0;
                    2
                } else {
                    1
                }
            }
            PointKind::Boundary { axis, upper } => match eq {
                Equation::Helmholtz => {
                    let k = theta[0];
                    let s = if upper { 1.0 } else { -1.0 };
                    let ca = c1(axis);
                    let (v, w) = (u(0, 0), u(0, 1));
                    // d(v + i w)/dn - i k (v + i w) = 0, split into real and imaginary parts
                    out[0].r = s * u(ca, 0) + k * w;
                    out[0].du[ca][0] = s;
                    out[0].du[0][1] = k;
                    out[0].dtheta[0] = w;
                    out[1].r = s * u(ca, 1) - k * v;
                    out[1].du[ca][1] = s;
                    out[1].du[0][0] = -k;
                    out[1].dtheta[0] = -v;
                    2
                }
                Equation::Wave2d if !(axis == 1 && !upper) => {
                    let ca = c1(axis);
                    out[0].r = u(ca, 0);
                    out[0].du[ca][0] = 1.0;
                    1
                }
                _ => {
                    out[0].r = u(0, 0);
                    out[0].du[0][0] = 1.0;
                    1
                }
            },
        }
    }
}
