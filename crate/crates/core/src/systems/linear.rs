//! Scalar linear-Gaussian benchmark, `x' = a x + b w`, with a closed-form
//! next-step distribution.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{StateVector, StepOutcome};

use super::ReturnMapSystem;

/// `Alive(a·x + w)` strictly inside `(lo, hi)`, otherwise `Absorbed`.
pub fn linear_gaussian_map(a: f64, lo: f64, hi: f64, x: f64, w: f64) -> StepOutcome {
    let next = a * x + w;
    if next > lo && next < hi {
        StepOutcome::Alive(DVector::from_element(1, next))
    } else {
        StepOutcome::Absorbed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGaussian {
    pub gain: f64,
    #[serde(default = "unit")]
    pub noise_gain: f64,
    pub lower: f64,
    pub upper: f64,
}

fn unit() -> f64 {
    1.0
}

impl LinearGaussian {
    pub fn new(gain: f64, noise_gain: f64, lower: f64, upper: f64) -> Result<Self> {
        let s = Self {
            gain,
            noise_gain,
            lower,
            upper,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) {
            return Err(Error::Parameter(format!(
                "linear system bounds must satisfy lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        if !self.gain.is_finite() || !self.noise_gain.is_finite() {
            return Err(Error::NonFinite("linear system gains"));
        }
        Ok(())
    }

    /// Exact next-step moments `(a·x, b²·σ²)`.
    pub fn exact_moments(&self, x: f64, noise_variance: f64) -> (f64, f64) {
        (
            self.gain * x,
            self.noise_gain * self.noise_gain * noise_variance,
        )
    }
}

impl ReturnMapSystem for LinearGaussian {
    fn name(&self) -> &str {
        "linear"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &StateVector, w: &DVector<f64>) -> StepOutcome {
        linear_gaussian_map(
            self.gain,
            self.lower,
            self.upper,
            x[0],
            self.noise_gain * w[0],
        )
    }
}
