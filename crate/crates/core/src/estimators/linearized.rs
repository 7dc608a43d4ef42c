use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::systems::ReturnMapSystem;
use crate::types::{GaussianBelief, NoiseSpec, StateVector, StepOutcome};

use super::PropagationResult;

/// Central-difference steps. The step for coordinate `i` is
/// `relative · max(1, |x_i|)`; noise coordinates sit at zero, so their step is
/// `relative_noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianSteps {
    pub relative_state: f64,
    pub relative_noise: f64,
}

impl Default for JacobianSteps {
    fn default() -> Self {
        Self {
            relative_state: 1e-5,
            relative_noise: 1e-5,
        }
    }
}

impl JacobianSteps {
    pub fn uniform(h: f64) -> Self {
        Self {
            relative_state: h,
            relative_noise: h,
        }
    }
}

/// First-order model of `f` about `(x₀, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedModel {
    /// `∂f/∂x`, d×d.
    pub f_x: DMatrix<f64>,
    /// `∂f/∂w`, d×m.
    pub f_w: DMatrix<f64>,
    /// `f(x₀, 0)`.
    pub nominal: StateVector,
}

fn alive<S: ReturnMapSystem + ?Sized>(
    system: &S,
    x: &StateVector,
    w: &DVector<f64>,
    what: impl FnOnce() -> String,
) -> Result<StateVector> {
    match system.step(x, w) {
        StepOutcome::Alive(next) => Ok(next),
        StepOutcome::Absorbed => Err(Error::LinearizationAtBoundary(what())),
    }
}

pub fn numerical_jacobians<S: ReturnMapSystem + ?Sized>(
    system: &S,
    x0: &StateVector,
    steps: &JacobianSteps,
) -> Result<LinearizedModel> {
    let d = system.state_dim();
    let m = system.noise_dim();
    if x0.len() != d {
        return Err(Error::Dimension {
            context: "linearization point",
            expected: d,
            found: x0.len(),
        });
    }
    if !(steps.relative_state > 0.0 && steps.relative_noise > 0.0) {
        return Err(Error::Parameter("Jacobian steps must be positive".into()));
    }
    let zero = DVector::zeros(m);
    let nominal = alive(system, x0, &zero, || "nominal image".into())?;

    let mut f_x = DMatrix::zeros(d, d);
    for i in 0..d {
        let h = steps.relative_state * x0[i].abs().max(1.0);
        let mut plus = x0.clone();
        plus[i] += h;
        let mut minus = x0.clone();
        minus[i] -= h;
        let fp = alive(system, &plus, &zero, || {
            format!("state coordinate {i} + {h:e}")
        })?;
        let fm = alive(system, &minus, &zero, || {
            format!("state coordinate {i} - {h:e}")
        })?;
        f_x.set_column(i, &((fp - fm) / (2.0 * h)));
    }

    let mut f_w = DMatrix::zeros(d, m);
    for i in 0..m {
        let h = steps.relative_noise;
        let mut plus = zero.clone();
        plus[i] = h;
        let mut minus = zero.clone();
        minus[i] = -h;
        let fp = alive(system, x0, &plus, || {
            format!("noise coordinate {i} + {h:e}")
        })?;
        let fm = alive(system, x0, &minus, || {
            format!("noise coordinate {i} - {h:e}")
        })?;
        f_w.set_column(i, &((fp - fm) / (2.0 * h)));
    }

    if f_x.iter().chain(f_w.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Jacobian"));
    }
    Ok(LinearizedModel { f_x, f_w, nominal })
}

/// One-step linearized estimate from a known initial state:
/// mean `f(x₀, 0)`, covariance `f_w Q f_wᵀ`. Never reports absorption.
pub fn linearized_propagate(
    model: &LinearizedModel,
    noise: &NoiseSpec,
) -> Result<PropagationResult> {
    if model.f_w.ncols() != noise.dim() {
        return Err(Error::Dimension {
            context: "noise Jacobian columns",
            expected: noise.dim(),
            found: model.f_w.ncols(),
        });
    }
    let cov = &model.f_w * noise.covariance() * model.f_w.transpose();
    let belief = GaussianBelief::from_estimate(model.nominal.clone(), cov)?;
    Ok(PropagationResult::new(belief, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{LinearGaussian, QuadraticMap};
    use nalgebra::dvector;

    struct SineMap;

    impl ReturnMapSystem for SineMap {
        fn name(&self) -> &str {
            "sine"
        }
        fn state_dim(&self) -> usize {
            1
        }
        fn noise_dim(&self) -> usize {
            1
        }
        fn step(&self, x: &StateVector, w: &DVector<f64>) -> StepOutcome {
            StepOutcome::Alive(dvector![x[0].sin() + w[0]])
        }
    }

    #[test]
    fn exact_for_linear_maps() {
        let sys = LinearGaussian::new(0.8, 1.3, -10.0, 10.0).unwrap();
        let model = numerical_jacobians(&sys, &dvector![0.5], &JacobianSteps::default()).unwrap();
        assert!((model.f_x[(0, 0)] - 0.8).abs() < 1e-10);
        assert!((model.f_w[(0, 0)] - 1.3).abs() < 1e-10);
    }

    #[test]
    fn quadratic_noise_jacobian_vanishes() {
        let model = numerical_jacobians(
            &QuadraticMap::default(),
            &dvector![0.0],
            &JacobianSteps::default(),
        )
        .unwrap();
        assert!(model.f_w[(0, 0)].abs() < 1e-8);
        let res = linearized_propagate(&model, &NoiseSpec::scalar(1.0).unwrap()).unwrap();
        assert_eq!(res.belief().unwrap().scalar().unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sine_derivatives() {
        let model =
            numerical_jacobians(&SineMap, &dvector![0.0], &JacobianSteps::default()).unwrap();
        assert!((model.f_x[(0, 0)] - 1.0).abs() < 1e-8);
        assert!((model.f_w[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn linear_belief() {
        let sys = LinearGaussian::new(0.8, 1.0, -10.0, 10.0).unwrap();
        let model = numerical_jacobians(&sys, &dvector![0.5], &JacobianSteps::default()).unwrap();
        let res = linearized_propagate(&model, &NoiseSpec::scalar(0.05).unwrap()).unwrap();
        let (mu, var) = res.belief().unwrap().scalar().unwrap();
        assert!((mu - 0.4).abs() < 1e-12);
        assert!((var - 0.05).abs() < 1e-10);
        assert_eq!(res.absorbed_mass(), 0.0);
    }

    #[test]
    fn perturbation_into_absorbing_set_is_error() {
        let sys = LinearGaussian::new(1.0, 1.0, -1.0, 0.5 + 5e-6).unwrap();
        let err = numerical_jacobians(&sys, &dvector![0.5], &JacobianSteps::default());
        assert!(matches!(err, Err(Error::LinearizationAtBoundary(_))));
    }
}
