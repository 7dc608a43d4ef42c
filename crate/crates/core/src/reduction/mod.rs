//! Indicator-coordinate selection for multi-dimensional systems.

mod dataset;
mod indicator;
mod pca;

pub use dataset::{collect_dataset, TrajectoryDataset};
pub use indicator::{indicator_state, jacobian_indicator, IndicatorChoice};
pub use pca::{pca, PcaResult};
