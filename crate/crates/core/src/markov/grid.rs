use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-width discretization of the indicator coordinate.
///
/// Chain state 0 is the absorbing state; grid cell `i` is chain state
/// `i + 1`. Cell `i` covers `(edge_i, edge_{i+1}]`, and values at or beyond
/// either bound absorb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: f64,
    pub upper: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn new(lower: f64, upper: f64, cells: usize) -> Result<Self> {
        let g = Self {
            lower,
            upper,
            cells,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::Parameter(format!(
                "grid bounds must satisfy lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        if self.cells == 0 {
            return Err(Error::Parameter("grid needs at least one cell".into()));
        }
        Ok(())
    }

    /// Number of chain states including the absorbing one.
    pub fn states(&self) -> usize {
        self.cells + 1
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.cells as f64
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        self.lower + (cell as f64 + 0.5) * self.width()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.midpoint(i)).collect()
    }

    /// `cells + 1` edges; the outer edges are the bounds themselves.
    pub fn edges(&self) -> Vec<f64> {
        let w = self.width();
        (0..=self.cells)
            .map(|i| {
                if i == self.cells {
                    self.upper
                } else {
                    self.lower + i as f64 * w
                }
            })
            .collect()
    }

    /// Cell containing `value`, or `None` when it falls in the absorbing set.
    pub fn cell_of(&self, value: f64) -> Option<usize> {
        if !(value > self.lower && value < self.upper) {
            return None;
        }
        let edges = self.edges();
        // first edge at or above value closes the cell
        let k = edges.partition_point(|&e| e < value);
        Some(k.saturating_sub(1).min(self.cells - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_and_edges() {
        let g = GridSpec::new(0.4, 1.5, 220).unwrap();
        assert_eq!(g.states(), 221);
        let m = g.midpoints();
        assert!(m.windows(2).all(|w| w[1] > w[0]));
        assert!((m[0] - 0.4025).abs() < 1e-12);
        let e = g.edges();
        assert_eq!(e[0], 0.4);
        assert_eq!(e[220], 1.5);
    }

    #[test]
    fn cell_lookup_is_right_closed() {
        let g = GridSpec::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.cell_of(0.25), Some(0));
        assert_eq!(g.cell_of(0.2500001), Some(1));
        assert_eq!(g.cell_of(0.99), Some(3));
        assert_eq!(g.cell_of(0.0), None);
        assert_eq!(g.cell_of(1.0), None);
        assert_eq!(g.cell_of(-3.0), None);
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(GridSpec::new(0.0, 1.0, 0).is_err());
        assert!(GridSpec::new(1.0, 0.0, 3).is_err());
    }
}
