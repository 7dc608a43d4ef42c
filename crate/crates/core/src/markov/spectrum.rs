use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};

use super::TransitionMatrix;

/// Above this many live states the spectrum comes from power iteration with
/// deflation instead of a dense Schur decomposition.
pub const DENSE_LIMIT: usize = 512;

/// Imaginary parts below this are treated as real.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

const SCHUR_MAX_ITERATIONS: usize = 100_000;
const POWER_MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn is_complex(&self) -> bool {
        self.im.abs() > IMAGINARY_TOLERANCE
    }
}

/// Leading eigenvalues of a transition matrix, by descending magnitude.
/// Entry 0 is the structural `λ₁ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Eigenvalue>,
}

impl Spectrum {
    /// `λ₂`, the dominant eigenvalue of `T̄`.
    pub fn second(&self) -> Option<Eigenvalue> {
        self.values.get(1).copied()
    }

    pub fn any_complex(&self) -> bool {
        self.values.iter().any(Eigenvalue::is_complex)
    }
}

fn sort_by_magnitude(values: &mut [Eigenvalue]) {
    values.sort_by(|a, b| {
        b.magnitude()
            .total_cmp(&a.magnitude())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

/// All eigenvalues of a dense matrix via real Schur decomposition.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Eigenvalue>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITERATIONS).ok_or(
        Error::EigenNonConvergence {
            iterations: SCHUR_MAX_ITERATIONS,
        },
    )?;
    let mut values: Vec<Eigenvalue> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Eigenvalue { re: z.re, im: z.im })
        .collect();
    sort_by_magnitude(&mut values);
    Ok(values)
}

fn normalize(v: &mut DVector<f64>) -> f64 {
    let n = v.norm();
    if n > 0.0 {
        *v /= n;
    }
    n
}

/// Dominant real eigenpair of `m` by power iteration, returning the
/// eigenvalue with right and left eigenvectors.
fn power_pair(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let n = m.nrows();
    let mt = m.transpose();
    let mut right = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut left = right.clone();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut next = m * &right;
        if normalize(&mut next) == 0.0 {
            return Ok((0.0, right, left));
        }
        let mut next_left = &mt * &left;
        normalize(&mut next_left);
        let estimate = next.dot(&(m * &next));
        let residual = (m * &next - &next * estimate).norm();
        right = next;
        left = next_left;
        if (estimate - lambda).abs() <= 1e-15 * estimate.abs().max(1.0) && residual < 1e-10 {
            let mut left_fixed = left.clone();
            for _ in 0..1000 {
                let mut l = &mt * &left_fixed;
                normalize(&mut l);
                let done = (&l - &left_fixed).norm() < 1e-14;
                left_fixed = l;
                if done {
                    break;
                }
            }
            return Ok((estimate, right, left_fixed));
        }
        lambda = estimate;
    }
    Err(Error::EigenNonConvergence {
        iterations: POWER_MAX_ITERATIONS,
    })
}

/// Top `k` eigenvalues of `m` by power iteration with Hotelling deflation.
/// Only suitable for dominant eigenvalues that are real and separated.
pub fn power_eigenvalues(m: &DMatrix<f64>, k: usize) -> Result<Vec<Eigenvalue>> {
    let mut work = m.clone();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(m.nrows()) {
        let (lambda, right, left) = power_pair(&work)?;
        out.push(Eigenvalue::real(lambda));
        let scale = left.dot(&right);
        if lambda == 0.0 || scale.abs() < 1e-300 {
            break;
        }
        work -= (&right * left.transpose()) * (lambda / scale);
    }
    while out.len() < k.min(m.nrows()) {
        out.push(Eigenvalue::real(0.0));
    }
    Ok(out)
}

/// `λ₁ = 1` from the absorbing structure followed by the `k - 1` leading
/// eigenvalues of `T̄`.
pub fn spectrum(t: &TransitionMatrix, k: usize) -> Result<Spectrum> {
    let live = t.live_block();
    let mut values = vec![Eigenvalue::real(1.0)];
    let wanted = k.saturating_sub(1);
    let rest = if live.nrows() <= DENSE_LIMIT {
        dense_eigenvalues(&live)?
    } else {
        power_eigenvalues(&live, wanted)?
    };
    values.extend(rest.into_iter().take(wanted));
    values.truncate(k.max(1));
    Ok(Spectrum { values })
}
