use std::io::Write;

use crate::error::Result;
use crate::model::TimeGrid;

/// Anything observed at the points of a time grid.
pub trait SampledPath {
    fn grid(&self) -> &TimeGrid;
    fn values(&self) -> &[f64];

    fn write_csv<W: Write>(&self, w: W) -> Result<()>
    where
        Self: Sized,
    {
        crate::io::write_path_csv(w, self.grid(), self.values())
    }
}

/// A bare grid/value pair, e.g. read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl SampledPath for RawPath {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

impl SampledPath for crate::gaussian::GaussianPath {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}
