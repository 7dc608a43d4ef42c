//! `x' = (x + w)²`: a map whose noise Jacobian vanishes at the origin, so a
//! linearized estimate loses the entire noise contribution.

use nalgebra::DVector;

use crate::types::{StateVector, StepOutcome};

use super::ReturnMapSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticMap {
    /// Images with magnitude above this absorb.
    pub bound: f64,
}

impl Default for QuadraticMap {
    fn default() -> Self {
        Self { bound: 1e6 }
    }
}

impl ReturnMapSystem for QuadraticMap {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &StateVector, w: &DVector<f64>) -> StepOutcome {
        let s = x[0] + w[0];
        let next = s * s;
        if next.abs() > self.bound || !next.is_finite() {
            StepOutcome::Absorbed
        } else {
            StepOutcome::Alive(DVector::from_element(1, next))
        }
    }
}
