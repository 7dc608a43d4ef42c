//! Metastability analysis of noisy return maps.
//!
//! Per-state next-step beliefs are estimated with the unscented transform (or
//! linearization and Monte Carlo baselines), assembled into an absorbing
//! Markov chain over a one-dimensional grid, and summarized by mean first
//! passage times and the metastable distribution.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod markov;
pub mod normal;
pub mod reduction;
pub mod systems;
pub mod types;

pub use error::{Error, Result};
pub use estimators::{
    build_augmented, linearized_propagate, monte_carlo_propagate, numerical_jacobians,
    sigma_points, systematic_propagate, ut_propagate, JacobianSteps, PropagationResult, DEFAULT_W0,
};
pub use markov::{
    analyze_chain, mfpt_state, mfpt_system, spectrum, Eigenvalue, GridSpec, MetastableReport,
    TransitionMatrix,
};
pub use reduction::{collect_dataset, indicator_state, jacobian_indicator, pca, TrajectoryDataset};
pub use systems::{Hopper, HopperParams, LinearGaussian, QuadraticMap, ReturnMapSystem, Surrogate};
pub use types::{GaussianBelief, NoiseSpec, StateVector, StepOutcome};
