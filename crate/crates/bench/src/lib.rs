//! Shared fixtures for the benchmarks.

use parisi_core::{GridSpec, Mixture, OrderParameter};

/// SK with a two-step order parameter at `γ = 2`.
pub fn two_step_sk() -> (Mixture, OrderParameter, f64, GridSpec) {
    let op = OrderParameter::new(2, &[0.25, 0.65], &[0.45]).expect("valid order parameter");
    (Mixture::sk(), op, 2.0, GridSpec::default())
}

/// A mixed 2+4 model with a three-step order parameter at `γ = 4`.
pub fn three_step_mixed() -> (Mixture, OrderParameter, f64, GridSpec) {
    let mix = Mixture::from_pairs(&[(2, 0.6), (4, 0.5)]).expect("valid mixture");
    let op = OrderParameter::new(3, &[0.2, 0.5, 0.8], &[0.3, 0.6]).expect("valid order parameter");
    (mix, op, 4.0, GridSpec::default())
}
