//! Next-step distribution estimators: unscented transform, linearization and
//! sampling baselines.

mod linearized;
mod monte_carlo;
mod sigma;
mod unscented;

pub use linearized::{linearized_propagate, numerical_jacobians, JacobianSteps, LinearizedModel};
pub use monte_carlo::{
    monte_carlo_propagate, monte_carlo_propagate_with, noise_factor, stream_rng,
    systematic_propagate, WeightedSamples,
};
pub use sigma::{build_augmented, default_epsilon, sigma_points, AugmentedBelief, SigmaPointSet};
pub use unscented::ut_propagate;

use crate::types::GaussianBelief;

/// Default central sigma-point weight.
pub const DEFAULT_W0: f64 = 1.0 / 3.0;

/// Next-state belief plus the probability mass lost to absorption while
/// propagating.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    belief: Option<GaussianBelief>,
    absorbed_mass: f64,
}

impl PropagationResult {
    pub fn new(belief: GaussianBelief, absorbed_mass: f64) -> Self {
        Self {
            belief: Some(belief),
            absorbed_mass: absorbed_mass.clamp(0.0, 1.0),
        }
    }

    /// Every propagated point absorbed; the transition row is pure absorption.
    pub fn total_absorption() -> Self {
        Self {
            belief: None,
            absorbed_mass: 1.0,
        }
    }

    pub fn is_total_absorption(&self) -> bool {
        self.belief.is_none()
    }

    pub fn belief(&self) -> Option<&GaussianBelief> {
        self.belief.as_ref()
    }

    pub fn absorbed_mass(&self) -> f64 {
        self.absorbed_mass
    }
}
