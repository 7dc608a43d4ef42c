use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{ensure_psd, matrix_sqrt, PSD_TOLERANCE};
use crate::types::{ensure_finite, NoiseSpec, StateVector};

/// `ε = 1e-12 · max(1, ‖x₀‖²)`: a stand-in for the zero variance of a known
/// initial state that keeps the square root well defined.
pub fn default_epsilon(x0: &StateVector) -> f64 {
    1e-12 * x0.norm_squared().max(1.0)
}

/// Belief over `[x; w]` with covariance `blockdiag(ε·I_d, R_w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBelief {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    state_dim: usize,
}

impl AugmentedBelief {
    /// Belief with arbitrary PSD covariance; the first `state_dim`
    /// coordinates are the state.
    pub fn from_moments(
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        state_dim: usize,
    ) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::Dimension {
                context: "augmented covariance",
                expected: n,
                found: covariance.nrows(),
            });
        }
        if state_dim > n {
            return Err(Error::Dimension {
                context: "augmented state dimension",
                expected: n,
                found: state_dim,
            });
        }
        ensure_finite(&mean, "augmented mean")?;
        let scale = covariance.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        ensure_psd(&covariance, PSD_TOLERANCE * scale)?;
        Ok(Self {
            mean,
            covariance,
            state_dim,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.mean.len() - self.state_dim
    }

    /// Augmented dimension `n = d + m`.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn build_augmented(
    x0: &StateVector,
    noise: &NoiseSpec,
    epsilon: f64,
) -> Result<AugmentedBelief> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Parameter(format!(
            "state variance epsilon must be positive, got {epsilon}"
        )));
    }
    ensure_finite(x0, "initial state")?;
    let d = x0.len();
    let m = noise.dim();
    let n = d + m;
    let mut mean = DVector::zeros(n);
    mean.rows_mut(0, d).copy_from(x0);
    let mut covariance = DMatrix::zeros(n, n);
    for i in 0..d {
        covariance[(i, i)] = epsilon;
    }
    covariance
        .view_mut((d, d), (m, m))
        .copy_from(noise.covariance());
    Ok(AugmentedBelief {
        mean,
        covariance,
        state_dim: d,
    })
}

/// `2n + 1` weighted points with the first two moments of an augmented
/// belief.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPointSet {
    points: Vec<DVector<f64>>,
    weights: Vec<f64>,
    w0: f64,
    state_dim: usize,
}

impl SigmaPointSet {
    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn central_weight(&self) -> f64 {
        self.w0
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Splits point `j` into its state and noise parts.
    pub fn split(&self, j: usize) -> (StateVector, DVector<f64>) {
        let p = &self.points[j];
        let d = self.state_dim;
        (
            p.rows(0, d).into_owned(),
            p.rows(d, p.len() - d).into_owned(),
        )
    }

    pub fn weighted_mean(&self) -> DVector<f64> {
        let n = self.points[0].len();
        self.points
            .iter()
            .zip(&self.weights)
            .fold(DVector::zeros(n), |acc, (p, w)| acc + p * *w)
    }

    pub fn weighted_covariance(&self) -> DMatrix<f64> {
        let mean = self.weighted_mean();
        let n = mean.len();
        self.points
            .iter()
            .zip(&self.weights)
            .fold(DMatrix::zeros(n, n), |acc, (p, w)| {
                let e = p - &mean;
                acc + (&e * e.transpose()) * *w
            })
    }

    /// Reorders points and weights together.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            points: order.iter().map(|&i| self.points[i].clone()).collect(),
            weights: order.iter().map(|&i| self.weights[i]).collect(),
            w0: self.w0,
            state_dim: self.state_dim,
        }
    }
}

/// Point 0 sits at the mean with weight `W0`; points `j` and `j + n` sit at
/// `mean ± A_j`, where `A_j` is column `j` of `sqrt(n / (1 - W0) · P)`, each
/// with weight `(1 - W0) / 2n`.
pub fn sigma_points(belief: &AugmentedBelief, w0: f64) -> Result<SigmaPointSet> {
    if !(w0 > -1.0 && w0 < 1.0) {
        return Err(Error::Parameter(format!(
            "central weight W0 must lie in (-1, 1), got {w0}"
        )));
    }
    let n = belief.dim();
    let scaled = belief.covariance() * (n as f64 / (1.0 - w0));
    let root = matrix_sqrt(&scaled)?;
    let mean = belief.mean();

    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(mean.clone());
    for j in 0..n {
        points.push(mean + root.column(j));
    }
    for j in 0..n {
        points.push(mean - root.column(j));
    }
    let side = (1.0 - w0) / (2.0 * n as f64);
    let mut weights = vec![side; 2 * n + 1];
    weights[0] = w0;

    Ok(SigmaPointSet {
        points,
        weights,
        w0,
        state_dim: belief.state_dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    #[test]
    fn augmented_block_structure() {
        let noise = NoiseSpec::scalar(0.05).unwrap();
        let aug = build_augmented(&dvector![1.0], &noise, 1e-12).unwrap();
        assert_eq!(aug.mean(), &dvector![1.0, 0.0]);
        assert_eq!(
            aug.covariance(),
            &DMatrix::from_row_slice(2, 2, &[1e-12, 0.0, 0.0, 0.05])
        );
    }

    #[test]
    fn augmented_dimension_twenty() {
        let noise = NoiseSpec::isotropic(10, 1e-3).unwrap();
        let aug = build_augmented(&DVector::from_element(10, 0.2), &noise, 1e-12).unwrap();
        assert_eq!(aug.dim(), 20);
        let set = sigma_points(&aug, crate::estimators::DEFAULT_W0).unwrap();
        assert_eq!(set.len(), 41);
    }

    #[test]
    fn zero_epsilon_rejected() {
        let noise = NoiseSpec::scalar(0.05).unwrap();
        assert!(build_augmented(&dvector![1.0], &noise, 0.0).is_err());
    }

    #[test]
    fn unit_scalar_sigma_points() {
        let aug = AugmentedBelief {
            mean: dvector![0.0],
            covariance: DMatrix::from_element(1, 1, 1.0),
            state_dim: 1,
        };
        let set = sigma_points(&aug, 0.0).unwrap();
        let xs: Vec<f64> = set.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs.len(), 3);
        assert_eq!(xs[0], 0.0);
        assert!((xs[1] - 1.0).abs() < 1e-15 && (xs[2] + 1.0).abs() < 1e-15);
        assert_eq!(set.weights(), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn w0_range_enforced() {
        let noise = NoiseSpec::scalar(1.0).unwrap();
        let aug = build_augmented(&dvector![0.0], &noise, 1e-12).unwrap();
        for bad in [-1.0, 1.0, 1.5, f64::NAN] {
            assert!(matches!(sigma_points(&aug, bad), Err(Error::Parameter(_))));
        }
    }

    fn belief_strategy() -> impl Strategy<Value = (AugmentedBelief, f64)> {
        (1usize..=25, -0.95f64..0.95).prop_flat_map(|(n, w0)| {
            (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-2.0f64..2.0, n * n),
            )
                .prop_map(move |(m, g)| {
                    let g = DMatrix::from_vec(n, n, g);
                    let cov = &g * g.transpose() + DMatrix::identity(n, n) * 1e-3;
                    (
                        AugmentedBelief {
                            mean: DVector::from_vec(m),
                            covariance: cov,
                            state_dim: n.div_ceil(2),
                        },
                        w0,
                    )
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn moments_reconstructed((aug, w0) in belief_strategy()) {
            let set = sigma_points(&aug, w0).unwrap();
            prop_assert_eq!(set.len(), 2 * aug.dim() + 1);
            let wsum: f64 = set.weights().iter().sum();
            prop_assert!((wsum - 1.0).abs() < 1e-12);
            let mean_err = (set.weighted_mean() - aug.mean()).norm();
            prop_assert!(mean_err <= 1e-10 * aug.mean().norm().max(1.0));
            let cov_err = (set.weighted_covariance() - aug.covariance()).norm();
            prop_assert!(cov_err <= 1e-10 * aug.covariance().norm());
        }
    }
}
