use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::normal::interval_mass;
use crate::types::GaussianBelief;

use super::GridSpec;

/// Row-sum tolerance accepted when assembling a matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Transition row for a scalar Gaussian next-state belief.
///
/// Live cells get `(1 - absorbed_mass)` times the CDF difference across the
/// cell edges. The absorbing entry takes whatever the live cells did not.
pub fn row_from_belief(
    belief: &GaussianBelief,
    absorbed_mass: f64,
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    let (mean, variance) = belief.scalar()?;
    Ok(row_from_normal(mean, variance, absorbed_mass, grid))
}

pub fn row_from_normal(mean: f64, variance: f64, absorbed_mass: f64, grid: &GridSpec) -> Vec<f64> {
    let live = (1.0 - absorbed_mass).clamp(0.0, 1.0);
    let mut row = vec![0.0; grid.states()];
    if live > 0.0 && mean.is_finite() {
        let std = variance.max(0.0).sqrt();
        if std > 0.0 {
            let edges = grid.edges();
            for (j, pair) in edges.windows(2).enumerate() {
                row[j + 1] = live * interval_mass(mean, std, pair[0], pair[1]);
            }
        } else if let Some(cell) = grid.cell_of(mean) {
            row[cell + 1] = live;
        }
    }
    let live_total: f64 = row[1..].iter().sum();
    row[0] = (1.0 - live_total).max(0.0);
    row
}

/// Histogram row from probability-weighted scalar samples. Samples outside
/// the grid, plus `absorbed_weight`, go to the absorbing state.
pub fn row_from_weighted(samples: &[(f64, f64)], grid: &GridSpec) -> Vec<f64> {
    let mut row = vec![0.0; grid.states()];
    for &(value, weight) in samples {
        if let Some(cell) = grid.cell_of(value) {
            row[cell + 1] += weight;
        }
    }
    let live_total: f64 = row[1..].iter().sum();
    row[0] = (1.0 - live_total).max(0.0);
    row
}

/// Row-stochastic matrix whose state 0 is absorbing.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: DMatrix<f64>,
}

fn check_row(index: usize, row: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for v in row {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidTransition(format!(
                "row {index} has entry {v} outside [0, 1]"
            )));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::RowSum { row: index, sum });
    }
    Ok(())
}

/// Installs `e₁` as the absorbing row and the given rows for the live
/// states.
pub fn assemble_matrix(rows: &[Vec<f64>], grid: &GridSpec) -> Result<TransitionMatrix> {
    if rows.len() != grid.cells {
        return Err(Error::Dimension {
            context: "transition rows",
            expected: grid.cells,
            found: rows.len(),
        });
    }
    let n = grid.states();
    let mut matrix = DMatrix::zeros(n, n);
    matrix[(0, 0)] = 1.0;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension {
                context: "transition row length",
                expected: n,
                found: row.len(),
            });
        }
        check_row(i + 1, row.iter().copied())?;
        for (j, &v) in row.iter().enumerate() {
            matrix[(i + 1, j)] = v;
        }
    }
    Ok(TransitionMatrix { matrix })
}

impl TransitionMatrix {
    /// Validates an externally supplied matrix.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: n,
                cols: matrix.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidTransition(
                "need the absorbing state plus at least one live state".into(),
            ));
        }
        if matrix[(0, 0)] != 1.0 || (1..n).any(|j| matrix[(0, j)] != 0.0) {
            return Err(Error::InvalidTransition(
                "first row must be the absorbing unit row".into(),
            ));
        }
        for i in 1..n {
            check_row(i, matrix.row(i).iter().copied())?;
        }
        Ok(Self { matrix })
    }

    pub fn states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }

    /// `T̄`: the matrix without its absorbing row and column.
    pub fn live_block(&self) -> DMatrix<f64> {
        let n = self.states() - 1;
        self.matrix.view((1, 1), (n, n)).into_owned()
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
