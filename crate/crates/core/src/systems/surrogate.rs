//! Four-state nonlinear surrogate with two noise sources,
//! `x' = A·tanh(x) + B·w`, absorbed once any coordinate leaves `[-5, 5]`.
//!
//! Coordinate 2 is a slow hub (diagonal 0.95) that feeds the three faster
//! coordinates, so it dominates both the Jacobian's leading eigenvector and
//! the first principal component of noisy trajectories.

use nalgebra::{DMatrix, DVector};

use crate::types::{StateVector, StepOutcome};

use super::ReturnMapSystem;

/// Row-major 4×4 state matrix. Spectral radius ≈ 0.9687.
pub const SURROGATE_A: [f64; 16] = [
    0.30, 0.00, 0.25, 0.00, //
    0.00, 0.20, -0.20, 0.05, //
    0.05, 0.00, 0.95, 0.00, //
    0.00, 0.05, 0.15, 0.25,
];

/// Row-major 4×2 noise input matrix.
pub const SURROGATE_B: [f64; 8] = [
    0.15, 0.05, //
    0.05, 0.15, //
    0.25, -0.05, //
    -0.05, 0.15,
];

pub const SURROGATE_ESCAPE: f64 = 5.0;

pub fn surrogate_a() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &SURROGATE_A)
}

pub fn surrogate_b() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 2, &SURROGATE_B)
}

pub fn surrogate_multidim_map(x: &StateVector, w: &DVector<f64>) -> StepOutcome {
    Surrogate::default().step(x, w)
}

#[derive(Debug, Clone)]
pub struct Surrogate {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    indicator: usize,
}

impl Default for Surrogate {
    fn default() -> Self {
        Self {
            a: surrogate_a(),
            b: surrogate_b(),
            indicator: 2,
        }
    }
}

impl Surrogate {
    pub fn with_indicator(indicator: usize) -> Self {
        Self {
            indicator: indicator.min(3),
            ..Self::default()
        }
    }

    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn noise_matrix(&self) -> &DMatrix<f64> {
        &self.b
    }
}

impl ReturnMapSystem for Surrogate {
    fn name(&self) -> &str {
        "surrogate"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn noise_dim(&self) -> usize {
        2
    }

    fn indicator_index(&self) -> usize {
        self.indicator
    }

    fn step(&self, x: &StateVector, w: &DVector<f64>) -> StepOutcome {
        let next = &self.a * x.map(f64::tanh) + &self.b * w;
        if next.iter().any(|v| !(v.abs() <= SURROGATE_ESCAPE)) {
            StepOutcome::Absorbed
        } else {
            StepOutcome::Alive(next)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn origin_is_fixed() {
        let out = surrogate_multidim_map(&DVector::zeros(4), &DVector::zeros(2));
        assert_eq!(out, StepOutcome::Alive(DVector::zeros(4)));
    }

    #[test]
    fn linear_regime_near_origin() {
        let x = dvector![1e-7, -3e-7, 5e-7, 2e-7];
        let out = surrogate_multidim_map(&x, &DVector::zeros(2));
        let expected = surrogate_a() * &x;
        let got = out.alive().unwrap();
        assert!((got - &expected).norm() <= 1e-12 * expected.norm());
    }

    #[test]
    fn large_kick_absorbs() {
        let w = dvector![30.0, 0.0];
        assert!(surrogate_multidim_map(&DVector::zeros(4), &w).is_absorbed());
    }

    #[test]
    fn spectral_radius_below_one() {
        let radius = surrogate_a()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(radius < 1.0);
    }

    #[test]
    fn deterministic_steps() {
        let s = Surrogate::default();
        let x = dvector![0.3, -0.2, 0.8, 0.1];
        let w = dvector![0.4, -0.7];
        let first = s.step(&x, &w);
        for _ in 0..1000 {
            assert_eq!(s.step(&x, &w), first);
        }
    }
}
