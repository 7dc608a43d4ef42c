//! JSON analysis configuration.

use std::path::{Path, PathBuf};

use metastab_core::estimators::{default_epsilon, DEFAULT_W0};
use metastab_core::markov::GridSpec;
use metastab_core::systems::{
    Hopper, HopperParams, LinearGaussian, QuadraticMap, ReturnMapSystem, Surrogate,
};
use metastab_core::{NoiseSpec, StateVector};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub schema_version: u32,
    pub system: SystemConfig,
    pub grid: GridSpec,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Noise standard deviations for `sweep-noise`, ascending.
    #[serde(default)]
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub reduction: ReductionConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Hopper {
        #[serde(default)]
        params: HopperParams,
    },
    Linear {
        gain: f64,
        #[serde(default = "unit")]
        noise_gain: f64,
        lower: f64,
        upper: f64,
    },
    Surrogate {
        #[serde(default = "surrogate_indicator")]
        indicator: usize,
    },
    Quadratic {
        #[serde(default = "quadratic_bound")]
        bound: f64,
    },
}

fn unit() -> f64 {
    1.0
}

fn surrogate_indicator() -> usize {
    2
}

fn quadratic_bound() -> f64 {
    QuadraticMap::default().bound
}

impl SystemConfig {
    pub fn build(&self) -> Result<Box<dyn ReturnMapSystem>> {
        Ok(match *self {
            SystemConfig::Hopper { params } => Box::new(Hopper::new(params)?),
            SystemConfig::Linear {
                gain,
                noise_gain,
                lower,
                upper,
            } => Box::new(LinearGaussian::new(gain, noise_gain, lower, upper)?),
            SystemConfig::Surrogate { indicator } => {
                if indicator > 3 {
                    return Err(CliError::Config(format!(
                        "surrogate indicator must be in 0..4, got {indicator}"
                    )));
                }
                Box::new(Surrogate::with_indicator(indicator))
            }
            SystemConfig::Quadratic { bound } => {
                if !(bound > 0.0) {
                    return Err(CliError::Config(format!(
                        "quadratic bound must be positive, got {bound}"
                    )));
                }
                Box::new(QuadraticMap { bound })
            }
        })
    }
}

/// Exactly one of `variance` (isotropic) or `covariance` (full matrix).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
}

impl NoiseConfig {
    pub fn variance(v: f64) -> Self {
        Self {
            variance: Some(v),
            covariance: None,
        }
    }

    pub fn build(&self, dim: usize) -> Result<NoiseSpec> {
        match (&self.variance, &self.covariance) {
            (Some(v), None) => Ok(NoiseSpec::isotropic(dim, *v)?),
            (None, Some(rows)) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(CliError::Config(format!(
                        "noise covariance must be {dim}x{dim} for this system"
                    )));
                }
                Ok(NoiseSpec::new(DMatrix::from_fn(dim, dim, |i, j| {
                    rows[i][j]
                }))?)
            }
            _ => Err(CliError::Config(
                "noise needs exactly one of `variance` or `covariance`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ut,
    Linearized,
    Mc,
    Systematic,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Mc,
        Method::Systematic,
        Method::Linearized,
        Method::Ut,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Ut => "ut",
            Method::Linearized => "linearized",
            Method::Mc => "mc",
            Method::Systematic => "systematic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub method: Method,
    pub w0: f64,
    /// Variance of the state block of the augmented belief; defaults to
    /// `1e-12 max(1, |x0|²)` per state.
    pub epsilon: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub jacobian_step: f64,
    pub slices: usize,
    pub span: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: Method::Ut,
            w0: DEFAULT_W0,
            epsilon: None,
            samples: 10_000,
            seed: 0,
            jacobian_step: 1e-5,
            slices: 1000,
            span: 5.0,
        }
    }
}

impl EstimatorConfig {
    pub fn epsilon_for(&self, x0: &StateVector) -> f64 {
        self.epsilon.unwrap_or_else(|| default_epsilon(x0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    /// CSV dataset (rows = states). Without one, a trajectory is simulated.
    pub dataset: Option<PathBuf>,
    pub steps: usize,
    pub standardize: bool,
    /// Initial state for the simulated trajectory and the Jacobian analysis.
    pub x0: Option<Vec<f64>>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            steps: 100,
            standardize: true,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub runs: usize,
    pub steps: usize,
    pub x0: Option<Vec<f64>>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            runs: 1,
            steps: 100,
            x0: None,
        }
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that can be checked without running an estimator.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        self.grid
            .validate()
            .map_err(|e| CliError::Config(format!("grid: {e}")))?;
        let system = self
            .system
            .build()
            .map_err(|e| CliError::Config(format!("system: {e}")))?;
        self.noise
            .build(system.noise_dim())
            .map_err(|e| CliError::Config(format!("noise: {e}")))?;

        let e = &self.estimator;
        if !(e.w0 > -1.0 && e.w0 < 1.0) {
            return Err(CliError::Config(format!(
                "estimator.w0 must lie in (-1, 1), got {}",
                e.w0
            )));
        }
        if let Some(eps) = e.epsilon {
            if !(eps > 0.0) {
                return Err(CliError::Config(format!(
                    "estimator.epsilon must be positive, got {eps}"
                )));
            }
        }
        if e.samples < 2 {
            return Err(CliError::Config(
                "estimator.samples must be at least 2".into(),
            ));
        }
        if !(e.jacobian_step > 0.0) {
            return Err(CliError::Config(
                "estimator.jacobian_step must be positive".into(),
            ));
        }
        if e.slices == 0 || !(e.span > 0.0) {
            return Err(CliError::Config(
                "estimator.slices and estimator.span must be positive".into(),
            ));
        }
        if self.sweep.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(CliError::Config(
                "sweep entries must be finite and nonnegative".into(),
            ));
        }
        if self.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("sweep must be strictly ascending".into()));
        }
        let d = system.state_dim();
        for (what, x0) in [
            ("reduction.x0", &self.reduction.x0),
            ("simulation.x0", &self.simulation.x0),
        ] {
            if let Some(x) = x0 {
                if x.len() != d {
                    return Err(CliError::Config(format!(
                        "{what} must have {d} entries, got {}",
                        x.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<Box<dyn ReturnMapSystem>> {
        self.system.build()
    }

    pub fn build_noise(&self, system: &dyn ReturnMapSystem) -> Result<NoiseSpec> {
        self.noise.build(system.noise_dim())
    }
}
