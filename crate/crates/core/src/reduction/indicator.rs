use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::{numerical_jacobians, JacobianSteps};
use crate::systems::ReturnMapSystem;
use crate::types::StateVector;

use super::PcaResult;

/// Selected indicator coordinate (0-based) with any caveats.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorChoice {
    pub index: usize,
    /// Another coordinate matched the winning magnitude to 1e-12 relative.
    pub tie: bool,
    pub warnings: Vec<String>,
}

fn argmax_abs(values: impl Iterator<Item = f64>) -> (usize, bool) {
    let values: Vec<f64> = values.map(f64::abs).collect();
    let best = values.iter().copied().fold(0.0_f64, f64::max);
    let tol = 1e-12 * best.max(f64::MIN_POSITIVE);
    let winners: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| best - **v <= tol)
        .map(|(i, _)| i)
        .collect();
    (winners[0], winners.len() > 1)
}

/// Coordinate with the largest |loading| on the first component.
pub fn indicator_state(result: &PcaResult) -> IndicatorChoice {
    let (index, tie) = argmax_abs(result.loadings.column(0).iter().copied());
    IndicatorChoice {
        index,
        tie,
        warnings: Vec::new(),
    }
}

/// Coordinate with the largest entry in the eigenvector of `f_x` belonging to
/// its largest-magnitude eigenvalue.
pub fn jacobian_indicator<S: ReturnMapSystem + ?Sized>(
    system: &S,
    x_star: &StateVector,
) -> Result<IndicatorChoice> {
    let model = numerical_jacobians(system, x_star, &JacobianSteps::default())?;
    let a = &model.f_x;
    let d = a.nrows();
    let mut warnings = Vec::new();

    let mut eig: Vec<Complex<f64>> = a
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::EigenNonConvergence { iterations: 10_000 })?
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    eig.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let lead = eig[0];
    if lead.im.abs() > 1e-10 {
        warnings.push(format!(
            "dominant eigenvalue is complex ({} {:+}i); eigenvector magnitudes used",
            lead.re, lead.im
        ));
    }
    if eig.len() > 1 && (eig[1].norm() - lead.norm()).abs() <= 1e-10 * lead.norm().max(1.0) {
        warnings.push("dominant eigenvalue magnitude is repeated".to_string());
    }

    let v = dominant_eigenvector(a, lead);
    let (index, tie) = argmax_abs(v.iter().copied());
    if d == 1 {
        return Ok(IndicatorChoice {
            index: 0,
            tie: false,
            warnings,
        });
    }
    Ok(IndicatorChoice {
        index,
        tie,
        warnings,
    })
}

/// Magnitudes of the eigenvector entries for `lambda`, via complex inverse
/// iteration.
fn dominant_eigenvector(a: &DMatrix<f64>, lambda: Complex<f64>) -> DVector<f64> {
    let d = a.nrows();
    let shift = lambda + Complex::new(1e-10 * lambda.norm().max(1.0), 0.0);
    let m = DMatrix::from_fn(d, d, |i, j| {
        let diag = if i == j {
            shift
        } else {
            Complex::new(0.0, 0.0)
        };
        Complex::new(a[(i, j)], 0.0) - diag
    });
    let lu = m.lu();
    let mut v = DVector::from_fn(d, |i, _| Complex::new(1.0 + 0.1 * i as f64, 0.0));
    for _ in 0..50 {
        let Some(next) = lu.solve(&v) else { break };
        let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            break;
        }
        v = next.unscale(scale);
    }
    v.map(|z| z.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Surrogate;
    use crate::types::StepOutcome;

    struct Affine(DMatrix<f64>);

    impl ReturnMapSystem for Affine {
        fn name(&self) -> &str {
            "affine"
        }
        fn state_dim(&self) -> usize {
            self.0.nrows()
        }
        fn noise_dim(&self) -> usize {
            1
        }
        fn step(&self, x: &StateVector, _w: &DVector<f64>) -> StepOutcome {
            StepOutcome::Alive(&self.0 * x)
        }
    }

    fn pca_with(col: &[f64]) -> PcaResult {
        let d = col.len();
        let mut loadings = DMatrix::identity(d, d);
        loadings.set_column(0, &DVector::from_column_slice(col));
        PcaResult {
            loadings,
            explained: vec![1.0 / d as f64; d],
            standardized: true,
            warnings: vec![],
        }
    }

    #[test]
    fn pca_argmax_and_ties() {
        let c = indicator_state(&pca_with(&[0.2, -0.9, 0.3]));
        assert_eq!((c.index, c.tie), (1, false));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = indicator_state(&pca_with(&[h, h]));
        assert_eq!((c.index, c.tie), (0, true));
    }

    #[test]
    fn diagonal_map() {
        let sys = Affine(DMatrix::from_diagonal(&nalgebra::dvector![0.2, 0.9]));
        let c = jacobian_indicator(&sys, &DVector::zeros(2)).unwrap();
        assert_eq!(c.index, 1);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn rotated_dominant_direction() {
        // eigenvalues 0.9 along (cos t, sin t) and 0.1 along the normal
        let t = 1.2_f64;
        let r = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let a = &r * DMatrix::from_diagonal(&nalgebra::dvector![0.9, 0.1]) * r.transpose();
        let c = jacobian_indicator(&Affine(a), &DVector::zeros(2)).unwrap();
        assert_eq!(c.index, 1);
    }

    #[test]
    fn complex_pair_is_flagged() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, -0.6, 0.0, 0.6, 0.5, 0.0, 0.0, 0.0, 0.1]);
        let c = jacobian_indicator(&Affine(a), &DVector::zeros(3)).unwrap();
        assert!(c.index < 2);
        assert!(!c.warnings.is_empty());
    }

    #[test]
    fn surrogate_dominant_coordinate() {
        let s = Surrogate::default();
        let c = jacobian_indicator(&s, &DVector::zeros(4)).unwrap();
        assert_eq!(c.index, s.indicator_index());
    }
}
