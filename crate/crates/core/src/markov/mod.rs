//! Absorbing Markov chain over a discretized indicator coordinate, and the
//! metastability metrics read off it.

mod grid;
mod metrics;
mod simulate;
mod spectrum;
mod transition;

pub use grid::GridSpec;
pub use metrics::{
    analyze_chain, metastable_distribution, metastable_neighborhood, metastable_with_spectrum,
    mfpt_state, mfpt_system, Metastable, MetastableReport, SystemMfpt, MFPT_RELIABILITY_LIMIT,
};
pub use simulate::{simulate_chain, ChainOutcome, ChainSampler};
pub use spectrum::{
    dense_eigenvalues, power_eigenvalues, spectrum, Eigenvalue, Spectrum, DENSE_LIMIT,
    IMAGINARY_TOLERANCE,
};
pub use transition::{
    assemble_matrix, row_from_belief, row_from_normal, row_from_weighted, TransitionMatrix,
    ROW_SUM_TOLERANCE,
};
