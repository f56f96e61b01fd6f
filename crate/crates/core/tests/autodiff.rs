mod common;

use common::gradcheck::{jet_errors, loss_gradient_error};
use jumpid_core::pinn::Mode;
use jumpid_core::problem::Equation;

#[test]
fn jets_match_finite_differences_on_random_networks() {
    for seed in 0..20 {
        let (e1, e2) = jet_errors(seed);
        assert!(e1 < 1e-5 && e2 < 1e-5, "seed {seed}: first {e1:e}, second {e2:e}");
    }
}

#[test]
fn loss_gradients_match_finite_differences() {
    for (i, eq) in [Equation::SineGordon, Equation::Fisher, Equation::Burgers, Equation::Wave2d, Equation::Helmholtz, Equation::Advection]
        .into_iter()
        .enumerate()
    {
        for mode in [Mode::Gws, Mode::Std] {
            let e = loss_gradient_error(eq, mode, i as u64);
            assert!(e < 1e-4, "{eq:?} {mode:?}: {e:e}");
        }
    }
}
