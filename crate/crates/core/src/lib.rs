pub mod cascade;
pub mod error;
pub mod functional;
pub mod legendre;
pub mod minimize;
pub mod model;
pub mod optim;
pub mod quadrature;
pub mod rem;
pub mod roots;
pub mod sde;

pub use cascade::{
    expected_u_squared, phi00_only, solve_cascade, tilted_expectation, GridSpec, LevelSolution,
    TiltedValues,
};
pub use error::{Error, Result};
pub use functional::{evaluate, p_hat, stationarity_residual, AtomResidual, Evaluation};
pub use legendre::{
    concavity_certificate, duality_forward, duality_inverse, gamma_hat, l_hat, Argmax,
    LegendreOptions, LegendreResult, ValueCurve,
};
pub use minimize::{
    minimize, minimize_from, temperature_scan, MinimizeOptions, ParisiMeasure, ScanRow,
};
pub use model::{
    alpha_moments, overlap_moment, validate_order_parameter, AlphaMoments, Mixture, ModelSpec,
    OrderParameter,
};
pub use rem::{gamma_rem, p_rem, rem_finite_n_mc, rem_variational_inf, RemPoint};
pub use sde::{martingale_check, simulate, variational_objective, Control, PathBatch, SdeOptions};
