//! PSD checks and matrix square roots used by every estimator.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance used when validating covariance inputs.
pub const PSD_TOLERANCE: f64 = 1e-12;

const CHOLESKY_RETRIES: usize = 3;
const JITTER_SCALE: f64 = 1e-12;

fn ensure_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Largest absolute difference between `m[(i, j)]` and `m[(j, i)]`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// True iff `m` is symmetric within `tol` and its smallest eigenvalue is at
/// least `-tol`.
pub fn psd_validate(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    ensure_square(m)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Ok(false);
    }
    if max_asymmetry(m) > tol {
        return Ok(false);
    }
    Ok(min_eigenvalue(m) >= -tol)
}

/// Like [`psd_validate`] but reports which condition failed.
pub fn ensure_psd(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    ensure_square(m)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance"));
    }
    let asym = max_asymmetry(m);
    if asym > tol {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let lo = min_eigenvalue(m);
    if lo < -tol {
        return Err(Error::NotPsd { eigenvalue: lo });
    }
    Ok(())
}

/// Returns `S` with `S * Sᵀ = M`.
///
/// Tries a Cholesky factor first, retrying with diagonal jitter of
/// `1e-12 * trace(M) / d` (growing tenfold per retry) and finally falling back
/// to the symmetric spectral square root. Column `i` of the result is the
/// sigma-point offset direction `A_i`.
pub fn matrix_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(m)?;
    let d = m.nrows();
    if d == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    ensure_psd(m, PSD_TOLERANCE * scale)?;
    let sym = symmetrize(m);

    if let Some(ch) = sym.clone().cholesky() {
        return Ok(ch.unpack());
    }

    let base_jitter = JITTER_SCALE * sym.trace() / d as f64;
    if base_jitter > 0.0 {
        let mut jitter = base_jitter;
        for _ in 0..CHOLESKY_RETRIES {
            let mut shifted = sym.clone();
            for i in 0..d {
                shifted[(i, i)] += jitter;
            }
            if let Some(ch) = shifted.cholesky() {
                return Ok(ch.unpack());
            }
            jitter *= 10.0;
        }
    }

    spectral_sqrt(&sym)
}

/// Symmetric square root `V diag(sqrt(max(λ, 0))) Vᵀ`.
pub fn spectral_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(m)?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if let Some(&lo) = eig
        .eigenvalues
        .iter()
        .find(|&&l| l < -PSD_TOLERANCE * scale)
    {
        return Err(Error::NotPsd { eigenvalue: lo });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Projects a symmetric matrix onto the PSD cone by clipping negative
/// eigenvalues.
pub fn nearest_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(m);
    if sym.is_empty() || min_eigenvalue(&sym) >= 0.0 {
        return sym;
    }
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&clipped) * v.transpose()))
}
