use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::systems::ReturnMapSystem;
use crate::types::{GaussianBelief, StepOutcome};

use super::{PropagationResult, SigmaPointSet};

/// Pushes every sigma point through `system.step` and refits a Gaussian to
/// the live images.
///
/// Weights of absorbed points are summed into `absorbed_mass`; the live
/// weights are renormalized before the moment sums. When no live weight
/// remains the result is [`PropagationResult::total_absorption`].
pub fn ut_propagate<S: ReturnMapSystem + ?Sized>(
    system: &S,
    set: &SigmaPointSet,
) -> Result<PropagationResult> {
    let d = system.state_dim();
    let m = system.noise_dim();
    if set.state_dim() != d {
        return Err(Error::Dimension {
            context: "sigma point state part",
            expected: d,
            found: set.state_dim(),
        });
    }
    let n = set.points()[0].len();
    if n != d + m {
        return Err(Error::Dimension {
            context: "sigma point noise part",
            expected: m,
            found: n - set.state_dim(),
        });
    }

    let mut live: Vec<(DVector<f64>, f64)> = Vec::with_capacity(set.len());
    let mut absorbed = 0.0;
    for (j, &w) in set.weights().iter().enumerate() {
        let (x, noise) = set.split(j);
        match system.step(&x, &noise) {
            StepOutcome::Alive(next) => live.push((next, w)),
            StepOutcome::Absorbed => absorbed += w,
        }
    }

    let live_weight: f64 = live.iter().map(|(_, w)| w).sum();
    if live.is_empty() || live_weight <= 1e-12 {
        return Ok(PropagationResult::total_absorption());
    }

    let mut mean = DVector::zeros(d);
    for (x, w) in &live {
        mean += x * (*w / live_weight);
    }
    let mut cov = DMatrix::zeros(d, d);
    for (x, w) in &live {
        let e = x - &mean;
        cov += (&e * e.transpose()) * (*w / live_weight);
    }

    let belief = GaussianBelief::from_estimate(mean, cov)?;
    Ok(PropagationResult::new(belief, absorbed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{build_augmented, sigma_points};
    use crate::systems::{LinearGaussian, QuadraticMap};
    use crate::types::NoiseSpec;
    use nalgebra::dvector;

    #[test]
    fn exact_on_linear_map() {
        let sys = LinearGaussian::new(0.8, 1.7, -100.0, 100.0).unwrap();
        let noise = NoiseSpec::scalar(0.05).unwrap();
        for w0 in [-0.5, 0.0, 1.0 / 3.0, 0.9] {
            let aug = build_augmented(&dvector![0.5], &noise, 1e-12).unwrap();
            let res = ut_propagate(&sys, &sigma_points(&aug, w0).unwrap()).unwrap();
            let (mu, var) = res.belief().unwrap().scalar().unwrap();
            let (emu, evar) = sys.exact_moments(0.5, 0.05);
            assert!((mu - emu).abs() <= 1e-9 * emu.abs());
            // the ε state variance contributes a²ε
            assert!((var - evar).abs() <= 1e-9 * evar);
            assert_eq!(res.absorbed_mass(), 0.0);
        }
    }

    #[test]
    fn quadratic_mean_is_noise_variance() {
        let noise = NoiseSpec::scalar(1.0).unwrap();
        for w0 in [-0.5, 0.0, 0.5] {
            let aug = build_augmented(&dvector![0.0], &noise, 1e-12).unwrap();
            let res =
                ut_propagate(&QuadraticMap::default(), &sigma_points(&aug, w0).unwrap()).unwrap();
            let (mu, _) = res.belief().unwrap().scalar().unwrap();
            assert!((mu - 1.0).abs() < 1e-9, "W0 {w0}: mean {mu}");
        }
    }

    #[test]
    fn all_absorbed_is_total_absorption() {
        let sys = LinearGaussian::new(1.0, 1.0, 10.0, 11.0).unwrap();
        let noise = NoiseSpec::scalar(0.01).unwrap();
        let aug = build_augmented(&dvector![0.0], &noise, 1e-12).unwrap();
        let res = ut_propagate(&sys, &sigma_points(&aug, 0.2).unwrap()).unwrap();
        assert!(res.is_total_absorption());
        assert_eq!(res.absorbed_mass(), 1.0);
    }

    #[test]
    fn partial_absorption_counts_weights() {
        // upper bound cuts off the +noise sigma point only
        let sys = LinearGaussian::new(1.0, 1.0, -10.0, 0.5).unwrap();
        let noise = NoiseSpec::scalar(0.25).unwrap();
        let aug = build_augmented(&dvector![0.0], &noise, 1e-12).unwrap();
        let set = sigma_points(&aug, 1.0 / 3.0).unwrap();
        let res = ut_propagate(&sys, &set).unwrap();
        assert!((res.absorbed_mass() - set.weights()[2]).abs() < 1e-15);
    }

    #[test]
    fn mean_invariant_under_point_order() {
        let sys = crate::systems::Surrogate::default();
        let noise = NoiseSpec::isotropic(2, 0.3).unwrap();
        let aug = build_augmented(&dvector![0.2, -0.4, 1.1, 0.3], &noise, 1e-12).unwrap();
        let set = sigma_points(&aug, 0.1).unwrap();
        let base = ut_propagate(&sys, &set).unwrap();
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.reverse();
        order.swap(1, 5);
        let permuted = ut_propagate(&sys, &set.permuted(&order)).unwrap();
        let diff = base.belief().unwrap().mean() - permuted.belief().unwrap().mean();
        assert!(diff.norm() < 1e-14);
    }
}
