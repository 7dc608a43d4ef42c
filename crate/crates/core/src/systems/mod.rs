//! Return-map systems: the contract every estimator consumes plus the bundled
//! testbeds.

mod hopper;
mod linear;
mod quadratic;
mod surrogate;

pub use hopper::{
    calibrate, hopper_apex_map, integrate_stance, FixedPoint, Hopper, HopperParams, StanceOutcome,
};
pub use linear::{linear_gaussian_map, LinearGaussian};
pub use quadratic::QuadraticMap;
pub use surrogate::{surrogate_multidim_map, Surrogate, SURROGATE_A, SURROGATE_B};

use nalgebra::DVector;

use crate::types::{StateVector, StepOutcome};

/// One noisy step of a discrete return map, `x' = f(x, w)`.
///
/// `step` must be a pure function of its arguments: all randomness enters
/// through `w`.
pub trait ReturnMapSystem: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    fn noise_dim(&self) -> usize;

    fn step(&self, x: &StateVector, w: &DVector<f64>) -> StepOutcome;

    /// Coordinate used for one-dimensional discretization.
    fn indicator_index(&self) -> usize {
        0
    }

    /// State used to fill the non-indicator coordinates when a grid cell is
    /// seeded. Usually a deterministic fixed point.
    fn reference_state(&self) -> StateVector {
        StateVector::zeros(self.state_dim())
    }

    /// Initial state for the grid cell whose indicator midpoint is `value`.
    fn state_at(&self, value: f64) -> StateVector {
        let mut x = self.reference_state();
        x[self.indicator_index()] = value;
        x
    }

    /// Noise-free image.
    fn step_deterministic(&self, x: &StateVector) -> StepOutcome {
        self.step(x, &DVector::zeros(self.noise_dim()))
    }
}

impl<S: ReturnMapSystem + ?Sized> ReturnMapSystem for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn noise_dim(&self) -> usize {
        (**self).noise_dim()
    }
    fn step(&self, x: &StateVector, w: &DVector<f64>) -> StepOutcome {
        (**self).step(x, w)
    }
    fn indicator_index(&self) -> usize {
        (**self).indicator_index()
    }
    fn reference_state(&self) -> StateVector {
        (**self).reference_state()
    }
    fn state_at(&self, value: f64) -> StateVector {
        (**self).state_at(value)
    }
}
