//! Shared distributional types.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{ensure_psd, nearest_psd, symmetrize, PSD_TOLERANCE};

/// A return-map state. Entries must be finite.
pub type StateVector = DVector<f64>;

pub fn ensure_finite(x: &DVector<f64>, what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Result of one noisy return-map step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Alive(StateVector),
    Absorbed,
}

impl StepOutcome {
    pub fn is_absorbed(&self) -> bool {
        matches!(self, StepOutcome::Absorbed)
    }

    pub fn alive(&self) -> Option<&StateVector> {
        match self {
            StepOutcome::Alive(x) => Some(x),
            StepOutcome::Absorbed => None,
        }
    }
}

/// Zero-mean Gaussian noise with a PSD covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    covariance: DMatrix<f64>,
}

impl NoiseSpec {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() == 0 {
            return Err(Error::Parameter(
                "noise dimension must be at least 1".into(),
            ));
        }
        ensure_psd(&covariance, PSD_TOLERANCE)?;
        Ok(Self {
            covariance: symmetrize(&covariance),
        })
    }

    /// `variance * I_dim`.
    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Parameter(format!(
                "noise variance must be finite and nonnegative, got {variance}"
            )));
        }
        Self::new(DMatrix::identity(dim, dim) * variance)
    }

    pub fn scalar(variance: f64) -> Result<Self> {
        Self::isotropic(1, variance)
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

/// Mean and covariance of a (possibly degenerate) Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(Error::Dimension {
                context: "belief covariance",
                expected: mean.len(),
                found: covariance.nrows(),
            });
        }
        ensure_finite(&mean, "belief mean")?;
        let scale = covariance.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        ensure_psd(&covariance, PSD_TOLERANCE * scale)?;
        Ok(Self {
            mean,
            covariance: symmetrize(&covariance),
        })
    }

    /// Builds a belief from estimated moments, projecting the covariance onto
    /// the PSD cone. Sigma-point sums with a negative central weight can leave
    /// small negative eigenvalues.
    pub fn from_estimate(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(Error::Dimension {
                context: "belief covariance",
                expected: mean.len(),
                found: covariance.nrows(),
            });
        }
        ensure_finite(&mean, "belief mean")?;
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("belief covariance"));
        }
        Ok(Self {
            mean,
            covariance: nearest_psd(&covariance),
        })
    }

    pub fn point(mean: DVector<f64>) -> Result<Self> {
        let n = mean.len();
        Self::new(mean, DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// One-dimensional marginal along coordinate `index`.
    pub fn marginal(&self, index: usize) -> Result<GaussianBelief> {
        if index >= self.dim() {
            return Err(Error::Dimension {
                context: "marginal index",
                expected: self.dim(),
                found: index,
            });
        }
        Ok(GaussianBelief {
            mean: DVector::from_element(1, self.mean[index]),
            covariance: DMatrix::from_element(1, 1, self.covariance[(index, index)].max(0.0)),
        })
    }

    /// Mean and variance of a scalar belief.
    pub fn scalar(&self) -> Result<(f64, f64)> {
        if self.dim() != 1 {
            return Err(Error::Dimension {
                context: "scalar belief",
                expected: 1,
                found: self.dim(),
            });
        }
        Ok((self.mean[0], self.covariance[(0, 0)]))
    }
}

/// Summary of sampled next states. Statistics cover live samples only.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    live: Vec<StateVector>,
    absorbed: usize,
    mean: Option<DVector<f64>>,
    covariance: Option<DMatrix<f64>>,
}

impl EmpiricalDistribution {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = StepOutcome>) -> Self {
        let mut live = Vec::new();
        let mut absorbed = 0;
        for o in outcomes {
            match o {
                StepOutcome::Alive(x) => live.push(x),
                StepOutcome::Absorbed => absorbed += 1,
            }
        }
        let (mean, covariance) = sample_moments(&live);
        Self {
            live,
            absorbed,
            mean,
            covariance,
        }
    }

    pub fn total(&self) -> usize {
        self.live.len() + self.absorbed
    }

    pub fn live_samples(&self) -> &[StateVector] {
        &self.live
    }

    pub fn absorbed_count(&self) -> usize {
        self.absorbed
    }

    pub fn absorbed_fraction(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        self.absorbed as f64 / self.total() as f64
    }

    /// Sample mean of the live samples, `None` when every sample absorbed.
    pub fn mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }

    /// Unbiased sample covariance of the live samples.
    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }
}

fn sample_moments(live: &[StateVector]) -> (Option<DVector<f64>>, Option<DMatrix<f64>>) {
    let Some(first) = live.first() else {
        return (None, None);
    };
    let d = first.len();
    let n = live.len() as f64;
    let mut mean = DVector::zeros(d);
    for x in live {
        mean += x;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    if live.len() > 1 {
        for x in live {
            let e = x - &mean;
            cov += &e * e.transpose();
        }
        cov /= n - 1.0;
    }
    (Some(mean), Some(cov))
}
