//! Shared fixtures for the benchmarks.

use metastab_core::estimators::{
    build_augmented, default_epsilon, sigma_points, ut_propagate, DEFAULT_W0,
};
use metastab_core::markov::{assemble_matrix, row_from_normal, GridSpec, TransitionMatrix};
use metastab_core::systems::ReturnMapSystem;
use metastab_core::{NoiseSpec, Result};
use nalgebra::DMatrix;

/// Grid used by the hopper benchmarks: 220 cells over [0.4, 1.5] m.
pub fn hopper_grid() -> GridSpec {
    GridSpec::new(0.4, 1.5, 220).expect("valid grid")
}

/// `G Gᵀ` with a fixed deterministic `G`.
pub fn dense_covariance(n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |i, j| ((i * 31 + j * 17) as f64 * 0.173).sin());
    &g * g.transpose() + DMatrix::identity(n, n) * 1e-3
}

/// UT transition row for one grid cell.
pub fn ut_row<S: ReturnMapSystem + ?Sized>(
    system: &S,
    grid: &GridSpec,
    noise: &NoiseSpec,
    cell: usize,
) -> Result<Vec<f64>> {
    let x0 = system.state_at(grid.midpoint(cell));
    let aug = build_augmented(&x0, noise, default_epsilon(&x0))?;
    let set = sigma_points(&aug, DEFAULT_W0)?;
    let r = ut_propagate(system, &set)?;
    Ok(match r.belief() {
        Some(b) => {
            let (m, v) = b.marginal(system.indicator_index())?.scalar()?;
            row_from_normal(m, v, r.absorbed_mass(), grid)
        }
        None => row_from_normal(0.0, 0.0, 1.0, grid),
    })
}

/// Serial UT chain over every cell.
pub fn ut_chain<S: ReturnMapSystem + ?Sized>(
    system: &S,
    grid: &GridSpec,
    noise: &NoiseSpec,
) -> Result<TransitionMatrix> {
    let rows = (0..grid.cells)
        .map(|c| ut_row(system, grid, noise, c))
        .collect::<Result<Vec<_>>>()?;
    assemble_matrix(&rows, grid)
}
