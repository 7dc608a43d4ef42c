use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::{noise_factor, stream_rng};
use crate::systems::ReturnMapSystem;
use crate::types::{NoiseSpec, StateVector, StepOutcome};

/// `d × T` matrix of states, one column per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    data: DMatrix<f64>,
    labels: Vec<String>,
}

impl TrajectoryDataset {
    pub fn new(data: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if data.ncols() < 2 {
            return Err(Error::InsufficientData(format!(
                "dataset needs at least 2 columns, got {}",
                data.ncols()
            )));
        }
        if data.nrows() == 0 {
            return Err(Error::InsufficientData("dataset has no rows".into()));
        }
        if labels.len() != data.nrows() {
            return Err(Error::Dimension {
                context: "dataset labels",
                expected: data.nrows(),
                found: labels.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self { data, labels })
    }

    /// Labels `x1`, `x2`, ...
    pub fn unlabeled(data: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=data.nrows()).map(|i| format!("x{i}")).collect();
        Self::new(data, labels)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> usize {
        self.data.nrows()
    }

    pub fn steps(&self) -> usize {
        self.data.ncols()
    }

    /// CSV with one row per state: `label,v1,v2,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, label) in self.labels.iter().enumerate() {
            out.push_str(label);
            for v in self.data.row(i).iter() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv). Lines starting with `#` and blank
    /// lines are skipped. A first field that does not parse as a number is
    /// taken as the row label.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',').map(str::trim).peekable();
            let label = match fields.peek() {
                Some(first) if first.parse::<f64>().is_err() => {
                    let l = first.to_string();
                    fields.next();
                    l
                }
                _ => format!("x{}", rows.len() + 1),
            };
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        Error::Parameter(format!("line {}: cannot parse {f:?}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != values.len() {
                    return Err(Error::Dimension {
                        context: "dataset row length",
                        expected: first.len(),
                        found: values.len(),
                    });
                }
            }
            labels.push(label);
            rows.push(values);
        }
        let d = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        let data = DMatrix::from_fn(d, t, |i, j| rows[i][j]);
        Self::new(data, labels)
    }
}

/// Runs the system for up to `steps` steps from `x0`. Columns are
/// `x₁ … x_steps`; the run stops at the first absorbed step.
pub fn collect_dataset<S: ReturnMapSystem + ?Sized>(
    system: &S,
    x0: &StateVector,
    steps: usize,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<TrajectoryDataset> {
    let d = system.state_dim();
    if x0.len() != d {
        return Err(Error::Dimension {
            context: "initial state",
            expected: d,
            found: x0.len(),
        });
    }
    if noise.dim() != system.noise_dim() {
        return Err(Error::Dimension {
            context: "noise covariance",
            expected: system.noise_dim(),
            found: noise.dim(),
        });
    }
    let l = noise_factor(noise)?;
    let mut rng = stream_rng(seed, 0);
    let mut columns = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for _ in 0..steps {
        let z = DVector::from_fn(noise.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        match system.step(&x, &(&l * z)) {
            StepOutcome::Alive(next) => {
                columns.push(next.clone());
                x = next;
            }
            StepOutcome::Absorbed => break,
        }
    }
    if columns.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "trajectory absorbed after {} live steps",
            columns.len()
        )));
    }
    let labels = (1..=d).map(|i| format!("x{i}")).collect();
    TrajectoryDataset::new(DMatrix::from_columns(&columns), labels)
}
