//! Dual-network physics-informed training.
//!
//! A solution network maps coordinates to the solution; a coefficient
//! network maps the coefficient's own arguments (time, or space) to the
//! coefficient values. The residual term at each collocation point is scaled
//! by `1 / (beta |grad theta|^2 + 1)`, computed from the current coefficient
//! network and treated as a constant, so points where the coefficient changes
//! quickly pull less on the fit.

mod model;
mod residual;
mod sample;
mod train;

pub use model::{CoefficientEval, CoefficientModel, DualCheckpoint, DualNetwork, Mode, NetworkConfig};
pub use residual::{solution_jet_spec, PdeProblem, PointKind};
pub use sample::{mse, reconstruct, sample_coefficients, CoefficientSamples};
pub use train::{
    adaptive_weight, evaluate_loss, evaluate_loss_with, full_loss, residual_weights, train, Collocation, Gradients, LossBreakdown, LossRecord, LossWeights, TrainConfig,
    TrainReport,
};
