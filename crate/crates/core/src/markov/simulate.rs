use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::stream_rng;

use super::TransitionMatrix;

/// Result of one simulated chain run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainOutcome {
    Absorbed(usize),
    Censored(usize),
}

/// Categorical sampler over the rows of a transition matrix.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    cumulative: Vec<Vec<f64>>,
}

impl ChainSampler {
    pub fn new(t: &TransitionMatrix) -> Self {
        let cumulative = t
            .matrix()
            .row_iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { cumulative }
    }

    pub fn states(&self) -> usize {
        self.cumulative.len()
    }

    pub fn next<R: Rng>(&self, state: usize, rng: &mut R) -> usize {
        let row = &self.cumulative[state];
        let u = rng.random::<f64>() * row[row.len() - 1];
        row.partition_point(|&c| c <= u).min(row.len() - 1)
    }

    /// Steps from `start` until state 0 or `max_steps`.
    pub fn run<R: Rng>(&self, start: usize, max_steps: usize, rng: &mut R) -> ChainOutcome {
        let mut state = start;
        for step in 1..=max_steps {
            state = self.next(state, rng);
            if state == 0 {
                return ChainOutcome::Absorbed(step);
            }
        }
        ChainOutcome::Censored(max_steps)
    }
}

pub fn simulate_chain(
    t: &TransitionMatrix,
    start: usize,
    seed: u64,
    max_steps: usize,
) -> Result<ChainOutcome> {
    if start == 0 || start >= t.states() {
        return Err(Error::Parameter(format!(
            "start state must be a live state in 1..{}, got {start}",
            t.states()
        )));
    }
    let mut rng = stream_rng(seed, 0);
    Ok(ChainSampler::new(t).run(start, max_steps, &mut rng))
}
