//! Per-state estimation and chain assembly.

use metastab_core::estimators::{
    build_augmented, linearized_propagate, monte_carlo_propagate_with, numerical_jacobians,
    sigma_points, stream_rng, systematic_propagate, ut_propagate, JacobianSteps, PropagationResult,
};
use metastab_core::markov::{
    assemble_matrix, row_from_normal, row_from_weighted, GridSpec, TransitionMatrix,
};
use metastab_core::systems::ReturnMapSystem;
use metastab_core::{NoiseSpec, StepOutcome};
use rayon::prelude::*;

use crate::config::{EstimatorConfig, Method};
use crate::error::Result;

/// One grid state's next-step estimate along the indicator coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct RowEstimate {
    pub cell: usize,
    pub midpoint: f64,
    /// Mean and variance of the surviving next state; `None` when nothing
    /// survives or the estimator could not run.
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub mean_se: Option<f64>,
    pub variance_se: Option<f64>,
    pub absorbed: f64,
    /// Chain row, absorbing state first.
    pub row: Vec<f64>,
    /// The estimator failed and the row is a fallback.
    pub missing: bool,
    pub warning: Option<String>,
}

impl RowEstimate {
    fn absorbed(cell: usize, midpoint: f64, grid: &GridSpec) -> Self {
        Self {
            cell,
            midpoint,
            mean: None,
            variance: None,
            mean_se: None,
            variance_se: None,
            absorbed: 1.0,
            row: row_from_normal(0.0, 0.0, 1.0, grid),
            missing: false,
            warning: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainBuild {
    pub matrix: TransitionMatrix,
    pub rows: Vec<RowEstimate>,
    pub warnings: Vec<String>,
}

impl ChainBuild {
    /// Every live state absorbs with certainty in one step.
    pub fn total_absorption(&self) -> bool {
        self.rows.iter().all(|r| r.row[0] >= 1.0)
    }
}

/// Estimates the next-step distribution from the midpoint of `cell`.
pub fn estimate_row(
    system: &dyn ReturnMapSystem,
    grid: &GridSpec,
    noise: &NoiseSpec,
    est: &EstimatorConfig,
    method: Method,
    cell: usize,
) -> Result<RowEstimate> {
    let midpoint = grid.midpoint(cell);
    let x0 = system.state_at(midpoint);
    let idx = system.indicator_index();

    match method {
        Method::Ut => {
            let aug = build_augmented(&x0, noise, est.epsilon_for(&x0))?;
            let set = sigma_points(&aug, est.w0)?;
            Ok(from_propagation(
                cell,
                midpoint,
                ut_propagate(system, &set)?,
                idx,
                grid,
            )?)
        }
        Method::Linearized => {
            let nominal = match system.step_deterministic(&x0) {
                StepOutcome::Alive(x) => x,
                StepOutcome::Absorbed => return Ok(RowEstimate::absorbed(cell, midpoint, grid)),
            };
            let steps = JacobianSteps::uniform(est.jacobian_step);
            match numerical_jacobians(system, &x0, &steps) {
                Ok(model) => Ok(from_propagation(
                    cell,
                    midpoint,
                    linearized_propagate(&model, noise)?,
                    idx,
                    grid,
                )?),
                Err(metastab_core::Error::LinearizationAtBoundary(what)) => {
                    let mut r = RowEstimate::absorbed(cell, midpoint, grid);
                    r.row = row_from_normal(nominal[idx], 0.0, 0.0, grid);
                    r.absorbed = r.row[0];
                    r.missing = true;
                    r.warning = Some(format!(
                        "state {}: linearization hit the absorbing set ({what}); point mass at the nominal image used",
                        cell + 1
                    ));
                    Ok(r)
                }
                Err(e) => Err(e.into()),
            }
        }
        Method::Mc => {
            let mut rng = stream_rng(est.seed, cell as u64);
            let e = monte_carlo_propagate_with(system, &x0, noise, est.samples, &mut rng)?;
            let n = e.total() as f64;
            let values: Vec<f64> = e.live_samples().iter().map(|x| x[idx]).collect();
            let weighted: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0 / n)).collect();
            let row = row_from_weighted(&weighted, grid);
            let live = values.len();
            let mut r = RowEstimate::absorbed(cell, midpoint, grid);
            r.absorbed = e.absorbed_fraction();
            r.row = row;
            if let (Some(mean), Some(cov)) = (e.mean(), e.covariance()) {
                let var = cov[(idx, idx)];
                r.mean = Some(mean[idx]);
                r.variance = Some(var);
                if live > 1 {
                    r.mean_se = Some((var / live as f64).sqrt());
                    r.variance_se = Some(var * (2.0 / (live as f64 - 1.0)).sqrt());
                }
            }
            Ok(r)
        }
        Method::Systematic => {
            let s = systematic_propagate(system, &x0, noise, est.slices, est.span)?;
            let weighted: Vec<(f64, f64)> = s.live.iter().map(|(x, w)| (x[idx], *w)).collect();
            let mut r = RowEstimate::absorbed(cell, midpoint, grid);
            r.row = row_from_weighted(&weighted, grid);
            r.absorbed = s.absorbed_weight;
            let mass: f64 = weighted.iter().map(|p| p.1).sum();
            if mass > 0.0 {
                let mean = weighted.iter().map(|(v, w)| v * w).sum::<f64>() / mass;
                let var = weighted
                    .iter()
                    .map(|(v, w)| w * (v - mean).powi(2))
                    .sum::<f64>()
                    / mass;
                r.mean = Some(mean);
                r.variance = Some(var);
            }
            Ok(r)
        }
    }
}

fn from_propagation(
    cell: usize,
    midpoint: f64,
    result: PropagationResult,
    idx: usize,
    grid: &GridSpec,
) -> Result<RowEstimate> {
    let mut r = RowEstimate::absorbed(cell, midpoint, grid);
    let Some(belief) = result.belief() else {
        return Ok(r);
    };
    let (mean, var) = belief.marginal(idx)?.scalar()?;
    r.mean = Some(mean);
    r.variance = Some(var);
    r.absorbed = result.absorbed_mass();
    r.row = row_from_normal(mean, var, result.absorbed_mass(), grid);
    Ok(r)
}

/// Estimates every row in parallel and assembles the chain. Rows are
/// gathered by cell index, so the result does not depend on thread count.
pub fn build_chain(
    system: &dyn ReturnMapSystem,
    grid: &GridSpec,
    noise: &NoiseSpec,
    est: &EstimatorConfig,
    method: Method,
) -> Result<ChainBuild> {
    let rows: Vec<RowEstimate> = (0..grid.cells)
        .into_par_iter()
        .map(|cell| estimate_row(system, grid, noise, est, method, cell))
        .collect::<Result<_>>()?;
    let live: Vec<Vec<f64>> = rows.iter().map(|r| r.row.clone()).collect();
    let matrix = assemble_matrix(&live, grid)?;
    let warnings = rows.iter().filter_map(|r| r.warning.clone()).collect();
    Ok(ChainBuild {
        matrix,
        rows,
        warnings,
    })
}
