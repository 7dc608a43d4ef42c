use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::TrajectoryDataset;

/// Principal components of a trajectory dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// d×d, columns are components in descending variance order.
    pub loadings: DMatrix<f64>,
    /// Nonnegative, descending, summing to 1.
    pub explained: Vec<f64>,
    pub standardized: bool,
    pub warnings: Vec<String>,
}

impl PcaResult {
    pub fn component(&self, k: usize) -> DVector<f64> {
        self.loadings.column(k).into_owned()
    }
}

pub fn pca(data: &TrajectoryDataset, standardize: bool) -> Result<PcaResult> {
    let d = data.dims();
    let t = data.steps();
    let mut warnings = Vec::new();
    if t <= d {
        warnings.push(format!(
            "only {t} samples for {d} coordinates; components are poorly determined"
        ));
    }

    let mut x = data.data().clone();
    for (i, mut row) in x.row_iter_mut().enumerate() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
        if standardize {
            let sd = (row.norm_squared() / (t as f64 - 1.0)).sqrt();
            if !(sd > 0.0) {
                return Err(Error::ZeroVariance { row: i });
            }
            row /= sd;
        }
    }
    let centered = x;

    let svd = centered.clone().svd(true, false);
    let u = svd.u.ok_or(Error::EigenNonConvergence { iterations: 0 })?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut columns: Vec<DVector<f64>> = order.iter().map(|&k| u.column(k).into_owned()).collect();
    let mut variances: Vec<f64> = order
        .iter()
        .map(|&k| svd.singular_values[k].powi(2))
        .collect();
    complete_basis(&mut columns, d);
    variances.resize(d, 0.0);

    let total: f64 = variances.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InsufficientData(
            "dataset has zero total variance".into(),
        ));
    }
    let explained = variances.iter().map(|v| v / total).collect();

    for c in &mut columns {
        let lead = c.iter().copied().fold(
            0.0_f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if lead < 0.0 {
            c.neg_mut();
        }
    }

    Ok(PcaResult {
        loadings: DMatrix::from_columns(&columns),
        explained,
        standardized: standardize,
        warnings,
    })
}

/// Extends orthonormal `columns` to a basis of R^d by Gram-Schmidt against the
/// standard basis.
fn complete_basis(columns: &mut Vec<DVector<f64>>, d: usize) {
    let mut e = 0;
    while columns.len() < d && e < d {
        let mut v = DVector::zeros(d);
        v[e] = 1.0;
        for _ in 0..2 {
            for c in columns.iter() {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            columns.push(v / n);
        }
        e += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::estimators::stream_rng;

    fn gaussian(d: usize, t: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream_rng(seed, 0);
        DMatrix::from_fn(d, t, |_, _| rng.sample(StandardNormal))
    }

    fn dataset(m: DMatrix<f64>) -> TrajectoryDataset {
        TrajectoryDataset::unlabeled(m).unwrap()
    }

    #[test]
    fn rank_one_line() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let m = DMatrix::from_fn(2, 20, |r, c| if r == 0 { xs[c] } else { 2.0 * xs[c] });
        let p = pca(&dataset(m), false).unwrap();
        assert!((p.explained[0] - 1.0).abs() < 1e-10);
        let pc1 = p.component(0);
        assert!((pc1[1] / pc1[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn isotropic_cloud() {
        let p = pca(&dataset(gaussian(3, 10_000, 5)), false).unwrap();
        for r in &p.explained {
            assert!((r - 1.0 / 3.0).abs() < 0.05, "{r}");
        }
    }

    #[test]
    fn planted_factor_leads_pc1() {
        let g = gaussian(3, 500, 9);
        let m = DMatrix::from_fn(3, 500, |r, c| match r {
            0 => 10.0 * g[(0, c)] + 0.01 * g[(1, c)],
            1 => g[(0, c)],
            _ => g[(2, c)],
        });
        let p = pca(&dataset(m), false).unwrap();
        let pc1 = p.component(0);
        assert!(pc1[0].abs() > pc1[1].abs() && pc1[0].abs() > pc1[2].abs());
        assert!(pc1[0] > 0.0);
    }

    #[test]
    fn zero_variance_row_named() {
        let mut m = gaussian(3, 20, 1);
        m.row_mut(1).fill(4.0);
        assert_eq!(
            pca(&dataset(m.clone()), true),
            Err(Error::ZeroVariance { row: 1 })
        );
        assert!(pca(&dataset(m), false).is_ok());
    }

    #[test]
    fn short_dataset_completes_basis() {
        let p = pca(&dataset(gaussian(4, 3, 2)), true).unwrap();
        assert!(!p.warnings.is_empty());
        let gram = p.loadings.transpose() * &p.loadings;
        assert!((gram - DMatrix::<f64>::identity(4, 4)).amax() < 1e-10);
        assert_eq!(p.explained[3], 0.0);
    }

    #[test]
    fn rotation_moves_loadings_covariantly() {
        let base = gaussian(2, 400, 3);
        let m = DMatrix::from_fn(2, 400, |r, c| {
            if r == 0 {
                3.0 * base[(0, c)]
            } else {
                base[(1, c)]
            }
        });
        let th = 0.4_f64;
        let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let p = pca(&dataset(m.clone()), false).unwrap();
        let q = pca(&dataset(&rot * m), false).unwrap();
        let moved = &rot * p.component(0);
        assert!((moved.dot(&q.component(0)).abs() - 1.0).abs() < 1e-10);
        for (a, b) in p.explained.iter().zip(&q.explained) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstruction_and_orthonormality(d in 1usize..6, t in 2usize..40, seed in any::<u64>(), std in any::<bool>()) {
            let m = gaussian(d, t, seed);
            let p = pca(&dataset(m.clone()), std).unwrap();
            let gram = p.loadings.transpose() * &p.loadings;
            prop_assert!((gram - DMatrix::<f64>::identity(d, d)).amax() < 1e-10);
            let sum: f64 = p.explained.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(p.explained.windows(2).all(|w| w[0] >= w[1] && w[1] >= 0.0));

            let mut centered = m;
            for mut row in centered.row_iter_mut() {
                let mean = row.mean();
                row.add_scalar_mut(-mean);
                if std {
                    let sd = (row.norm_squared() / (t as f64 - 1.0)).sqrt();
                    row /= sd;
                }
            }
            let scores = p.loadings.transpose() * &centered;
            let back = &p.loadings * scores;
            prop_assert!((back - &centered).amax() <= 1e-10 * centered.amax().max(1.0));
        }
    }
}
