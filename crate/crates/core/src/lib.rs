//! Simulation and estimation toolkit for fractional Ornstein–Uhlenbeck
//! volatility models driven by a time-changed fractional Brownian motion.

pub mod error;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod path;
pub mod pathwise;
pub mod quad;
pub mod qv;
pub mod special;

pub use error::{Error, ErrorClass, Result};
pub use path::{RawPath, SampledPath};
pub use model::{HurstParam, SeedSpec, TimeGrid, VolatilityFn};
