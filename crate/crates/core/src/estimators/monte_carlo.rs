use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::matrix_sqrt;
use crate::normal::standard_interval_mass;
use crate::systems::ReturnMapSystem;
use crate::types::{EmpiricalDistribution, NoiseSpec, StateVector, StepOutcome};

/// Independent deterministic stream `stream` under `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// `L` with `L Lᵀ = R_w`, mapping standard normals to noise draws.
pub fn noise_factor(noise: &NoiseSpec) -> Result<DMatrix<f64>> {
    matrix_sqrt(noise.covariance())
}

fn check_inputs<S: ReturnMapSystem + ?Sized>(
    system: &S,
    x0: &StateVector,
    noise: &NoiseSpec,
) -> Result<()> {
    if x0.len() != system.state_dim() {
        return Err(Error::Dimension {
            context: "initial state",
            expected: system.state_dim(),
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
    Ok(())
}

/// `n_samples` i.i.d. steps from `x0` under `N(0, R_w)` noise, drawn from
/// stream 0 of `seed`.
pub fn monte_carlo_propagate<S: ReturnMapSystem + ?Sized>(
    system: &S,
    x0: &StateVector,
    noise: &NoiseSpec,
    n_samples: usize,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    let mut rng = stream_rng(seed, 0);
    monte_carlo_propagate_with(system, x0, noise, n_samples, &mut rng)
}

pub fn monte_carlo_propagate_with<S: ReturnMapSystem + ?Sized, R: Rng>(
    system: &S,
    x0: &StateVector,
    noise: &NoiseSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<EmpiricalDistribution> {
    check_inputs(system, x0, noise)?;
    if n_samples < 2 {
        return Err(Error::Parameter(format!(
            "Monte Carlo needs at least 2 samples, got {n_samples}"
        )));
    }
    let factor = noise_factor(noise)?;
    let m = noise.dim();
    let outcomes = (0..n_samples).map(|_| {
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        system.step(x0, &(&factor * z))
    });
    Ok(EmpiricalDistribution::from_outcomes(
        outcomes.collect::<Vec<_>>(),
    ))
}

/// Probability-weighted next states from a deterministic sweep over noise
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSamples {
    pub live: Vec<(StateVector, f64)>,
    pub absorbed_weight: f64,
    pub experiments: usize,
}

const MAX_SYSTEMATIC_EXPERIMENTS: usize = 10_000_000;

/// Slices each standard-normal noise coordinate into `slices` equal-width
/// bins over `[-span, span]`, simulates the bin midpoints (mapped through
/// `L`), and weights each run by its bin's probability. Weights are
/// renormalized to the covered mass.
pub fn systematic_propagate<S: ReturnMapSystem + ?Sized>(
    system: &S,
    x0: &StateVector,
    noise: &NoiseSpec,
    slices: usize,
    span: f64,
) -> Result<WeightedSamples> {
    check_inputs(system, x0, noise)?;
    if slices == 0 || !(span > 0.0) {
        return Err(Error::Parameter(
            "systematic sweep needs at least one slice and a positive span".into(),
        ));
    }
    let m = noise.dim();
    let experiments = slices
        .checked_pow(m as u32)
        .filter(|&e| e <= MAX_SYSTEMATIC_EXPERIMENTS)
        .ok_or_else(|| {
            Error::Parameter(format!(
                "{slices}^{m} systematic experiments exceed {MAX_SYSTEMATIC_EXPERIMENTS}"
            ))
        })?;
    let factor = noise_factor(noise)?;
    let width = 2.0 * span / slices as f64;
    let nodes: Vec<(f64, f64)> = (0..slices)
        .map(|k| {
            let a = -span + k as f64 * width;
            (a + 0.5 * width, standard_interval_mass(a, a + width))
        })
        .collect();
    let covered: f64 = nodes.iter().map(|(_, p)| p).sum::<f64>().powi(m as i32);

    let mut live = Vec::new();
    let mut absorbed_weight = 0.0;
    let mut index = vec![0usize; m];
    for _ in 0..experiments {
        let z = DVector::from_fn(m, |i, _| nodes[index[i]].0);
        let weight = index.iter().map(|&k| nodes[k].1).product::<f64>() / covered;
        match system.step(x0, &(&factor * z)) {
            StepOutcome::Alive(next) => live.push((next, weight)),
            StepOutcome::Absorbed => absorbed_weight += weight,
        }
        for digit in index.iter_mut() {
            *digit += 1;
            if *digit < slices {
                break;
            }
            *digit = 0;
        }
    }
    Ok(WeightedSamples {
        live,
        absorbed_weight,
        experiments,
    })
}
