use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::spectrum::{spectrum, Eigenvalue, Spectrum};
use super::TransitionMatrix;

/// System-wide MFPT values beyond this are numerically meaningless.
pub const MFPT_RELIABILITY_LIMIT: f64 = 1e14;

/// `M = 1 / (1 - λ₂)` in steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMfpt {
    pub steps: f64,
    pub reliable: bool,
}

impl SystemMfpt {
    pub fn is_infinite(&self) -> bool {
        self.steps.is_infinite()
    }
}

/// `λ₂ ≥ 1` yields an infinite, unreliable value rather than an error.
pub fn mfpt_system(lambda2: f64) -> SystemMfpt {
    if !(lambda2 < 1.0) {
        return SystemMfpt {
            steps: f64::INFINITY,
            reliable: false,
        };
    }
    let steps = 1.0 / (1.0 - lambda2);
    SystemMfpt {
        steps,
        reliable: steps <= MFPT_RELIABILITY_LIMIT,
    }
}

/// Expected steps to absorption from every state: `m = [0; (I - T̄)⁻¹ 1]`.
pub fn mfpt_state(t: &TransitionMatrix) -> Result<DVector<f64>> {
    let live = t.live_block();
    let n = live.nrows();
    let system = DMatrix::identity(n, n) - live;
    let solved = system
        .lu()
        .solve(&DVector::from_element(n, 1.0))
        .ok_or(Error::NonAbsorbing)?;
    if solved.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonAbsorbing);
    }
    let mut m = DVector::zeros(n + 1);
    m.rows_mut(1, n).copy_from(&solved);
    Ok(m)
}

/// Quasi-stationary distribution with any degeneracy noted.
#[derive(Debug, Clone, PartialEq)]
pub struct Metastable {
    /// Probability vector over all chain states; entry 0 is zero.
    pub distribution: DVector<f64>,
    pub warning: Option<String>,
}

const INVERSE_ITERATIONS: usize = 100;

/// Left eigenvector of `T̄` for `λ₂` with the absorbing entry set to zero,
/// signed nonnegative and L1-normalized.
pub fn metastable_distribution(t: &TransitionMatrix) -> Result<Metastable> {
    let spec = spectrum(t, 3)?;
    metastable_with_spectrum(t, &spec)
}

pub fn metastable_with_spectrum(t: &TransitionMatrix, spec: &Spectrum) -> Result<Metastable> {
    let live = t.live_block();
    let n = live.nrows();
    let mut warning = None;
    let lambda = spec.second().unwrap_or(Eigenvalue::real(0.0));
    if lambda.is_complex() {
        warning = Some(format!(
            "second eigenvalue is complex ({} {:+}i); metastable distribution uses its real part",
            lambda.re, lambda.im
        ));
    } else if let Some(third) = spec.values.get(2) {
        if (third.magnitude() - lambda.magnitude()).abs() < 1e-10 {
            warning = Some(format!(
                "second eigenvalue {} is repeated; metastable distribution is not unique",
                lambda.re
            ));
        }
    }

    let mut phi = DVector::from_element(n, 1.0 / n as f64);
    if n > 1 {
        let shift = lambda.re + 1e-10 * lambda.re.abs().max(1.0);
        let lu = (live.transpose() - DMatrix::identity(n, n) * shift).lu();
        for _ in 0..INVERSE_ITERATIONS {
            let Some(mut next) = lu.solve(&phi) else {
                break;
            };
            let scale = next.amax();
            if !(scale > 0.0) || !scale.is_finite() {
                break;
            }
            next /= scale;
            if next.sum() < 0.0 {
                next = -next;
            }
            let change = (&next - &phi / phi.amax()).amax();
            phi = next;
            if change < 1e-14 {
                break;
            }
        }
    }

    if phi.sum() < 0.0 {
        phi = -phi;
    }
    let negative = phi.iter().fold(0.0_f64, |acc, v| acc.min(*v));
    if negative < -1e-8 * phi.amax() && warning.is_none() {
        warning = Some(format!(
            "eigenvector has mixed signs (min {negative:e}); negative entries clipped"
        ));
    }
    phi.apply(|v| *v = v.max(0.0));
    let total = phi.sum();
    if !(total > 0.0) {
        return Err(Error::EigenNonConvergence {
            iterations: INVERSE_ITERATIONS,
        });
    }
    phi /= total;

    let mut distribution = DVector::zeros(n + 1);
    distribution.rows_mut(1, n).copy_from(&phi);
    Ok(Metastable {
        distribution,
        warning,
    })
}

/// `J_ij = φ_i T_ij`: probability of visiting `i` then `j` under the
/// metastable distribution.
pub fn metastable_neighborhood(t: &TransitionMatrix, phi: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = t.states();
    if phi.len() != n {
        return Err(Error::Dimension {
            context: "metastable distribution",
            expected: n,
            found: phi.len(),
        });
    }
    let m = t.matrix();
    Ok(DMatrix::from_fn(n, n, |i, j| phi[i] * m[(i, j)]))
}

/// Everything derived from one transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MetastableReport {
    /// Up to four leading eigenvalues, `λ₁ = 1` first.
    pub eigenvalues: Vec<Eigenvalue>,
    pub system_mfpt: SystemMfpt,
    pub state_mfpt: Option<DVector<f64>>,
    pub metastable: DVector<f64>,
    pub neighborhood: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl MetastableReport {
    pub fn lambda2(&self) -> Eigenvalue {
        self.eigenvalues
            .get(1)
            .copied()
            .unwrap_or(Eigenvalue::real(0.0))
    }
}

pub fn analyze_chain(t: &TransitionMatrix) -> Result<MetastableReport> {
    let spec = spectrum(t, 4)?;
    let mut warnings = Vec::new();
    let lambda2 = spec.second().unwrap_or(Eigenvalue::real(0.0));
    if lambda2.is_complex() {
        warnings.push("second eigenvalue is complex; MFPT uses its magnitude".to_string());
    }
    let system_mfpt = mfpt_system(lambda2.magnitude());
    if !system_mfpt.reliable {
        warnings.push(format!(
            "system MFPT {} exceeds {MFPT_RELIABILITY_LIMIT:e} and is unreliable",
            system_mfpt.steps
        ));
    }
    let state_mfpt = match mfpt_state(t) {
        Ok(m) => Some(m),
        Err(e) => {
            warnings.push(format!("state-dependent MFPT unavailable: {e}"));
            None
        }
    };
    let meta = metastable_with_spectrum(t, &spec)?;
    if let Some(w) = meta.warning.clone() {
        warnings.push(w);
    }
    let neighborhood = metastable_neighborhood(t, &meta.distribution)?;
    Ok(MetastableReport {
        eigenvalues: spec.values,
        system_mfpt,
        state_mfpt,
        metastable: meta.distribution,
        neighborhood,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: &[&[f64]]) -> TransitionMatrix {
        let n = rows.len() + 1;
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = 1.0;
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m[(i + 1, j)] = *v;
            }
        }
        TransitionMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn system_mfpt_values() {
        assert!((mfpt_system(0.9).steps - 10.0).abs() < 1e-12);
        assert!((mfpt_system(0.9917).steps - 120.481_927_710_843_4).abs() < 1e-9);
        assert!((mfpt_system(0.9775).steps - 44.444_444_444_444_4).abs() < 1e-9);
        let inf = mfpt_system(1.0);
        assert!(inf.is_infinite() && !inf.reliable);
        assert!(!mfpt_system(1.0 - 1e-15).reliable);
    }

    #[test]
    fn geometric_single_state() {
        let t = chain(&[&[0.1, 0.9]]);
        let m = mfpt_state(&t).unwrap();
        assert_eq!(m[0], 0.0);
        assert!((m[1] - 10.0).abs() < 1e-12);
        let phi = metastable_distribution(&t).unwrap();
        assert_eq!(phi.distribution.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn immediate_absorption() {
        let t = chain(&[&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        let m = mfpt_state(&t).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 1.0, 1.0]);
        let r = analyze_chain(&t).unwrap();
        assert!((r.system_mfpt.steps - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_class_is_not_absorbing() {
        let t = chain(&[&[0.0, 1.0]]);
        assert_eq!(mfpt_state(&t), Err(Error::NonAbsorbing));
        let r = analyze_chain(&t).unwrap();
        assert!(r.system_mfpt.is_infinite());
        assert!(r.state_mfpt.is_none());
    }

    #[test]
    fn symmetric_live_block_gives_symmetric_phi() {
        let t = chain(&[&[0.1, 0.6, 0.3], &[0.1, 0.3, 0.6]]);
        let phi = metastable_distribution(&t).unwrap().distribution;
        assert!((phi[1] - phi[2]).abs() < 1e-14);
        assert!((phi.sum() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn phi_is_left_eigenvector() {
        let t = chain(&[
            &[0.05, 0.5, 0.3, 0.15],
            &[0.2, 0.2, 0.4, 0.2],
            &[0.1, 0.1, 0.1, 0.7],
        ]);
        let spec = spectrum(&t, 2).unwrap();
        let phi = metastable_distribution(&t).unwrap().distribution;
        let live = t.live_block();
        let p = phi.rows(1, 3).into_owned();
        let residual = live.transpose() * &p - &p * spec.values[1].re;
        assert!(residual.amax() < 1e-12);
    }

    #[test]
    fn neighborhood_of_deterministic_cycle() {
        let t = chain(&[&[0.0, 1.0, 0.0], &[0.5, 0.0, 0.5]]);
        let mut phi = DVector::zeros(3);
        phi[1] = 1.0;
        let j = metastable_neighborhood(&t, &phi).unwrap();
        assert_eq!(j[(1, 1)], 1.0);
        assert_eq!(j.sum(), 1.0);
    }

    #[test]
    fn neighborhood_rank_one_for_identical_rows() {
        let row = [0.2, 0.5, 0.3];
        let t = chain(&[&row, &row]);
        let phi = metastable_distribution(&t).unwrap().distribution;
        let j = metastable_neighborhood(&t, &phi).unwrap();
        for i in 1..3 {
            for k in 0..3 {
                assert!((j[(i, k)] - phi[i] * row[k]).abs() < 1e-15);
            }
        }
        assert!((j.sum() - 1.0).abs() < 1e-12);
        assert!((j.columns(1, 2).sum() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn report_invariants() {
        let t = chain(&[
            &[0.05, 0.5, 0.3, 0.15],
            &[0.2, 0.2, 0.4, 0.2],
            &[0.1, 0.1, 0.1, 0.7],
        ]);
        let r = analyze_chain(&t).unwrap();
        assert_eq!(r.eigenvalues[0], Eigenvalue::real(1.0));
        assert!(r.eigenvalues.iter().all(|e| e.magnitude() <= 1.0 + 1e-12));
        assert_eq!(r.metastable[0], 0.0);
        assert!(r.metastable.iter().all(|&v| v >= 0.0));
        assert!(r.neighborhood.iter().all(|&v| v >= 0.0));
        assert!(r.neighborhood.sum() <= 1.0 + 1e-12);
        assert_eq!(r.state_mfpt.as_ref().unwrap()[0], 0.0);
    }
}
