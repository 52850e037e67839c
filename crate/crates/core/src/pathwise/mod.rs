//! Riemann–Stieltjes integration against the driver, variation functionals
//! and the second-kind fOU solver.

mod sde;
mod variation;
mod young;

pub use sde::{solve_fou2, Fou2Solution};
pub use variation::{holder_seminorm, p_variation, VariationResult};
pub use young::{
    regularity_margin, young_error_bound, young_integral, Integrand, PathTag, ProcessPath, Provenance,
};
