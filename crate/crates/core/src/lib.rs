//! Gaussian random field ensembles, their zero sets, and the moment and
//! topology machinery used to study them.
//!
//! The crate is organized bottom-up:
//!
//! - [`field`]: kernel specs, covariance kernels with analytic derivatives,
//!   sampled realizations with exact jets.
//! - [`geometry`]: pointwise frames and mean curvature of `Z(F)`.
//! - [`extract`]: grid extraction of zero sets into polylines and meshes.
//! - [`topology`]: Betti numbers, total curvature, knot classification, census.
//! - [`kacrice`]: conditioned Gaussian moments and nondegeneracy diagnostics.

pub mod error;
pub mod extract;
pub mod field;
pub mod geometry;
pub mod kacrice;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod topology;

pub use error::{ExtractError, FieldError, GeometryError, KacRiceError, TopologyError};
pub use field::{
    covariance, lattice_sphere, rescaled_covariance, sample_field, CovarianceMatrixValue, Field,
    FieldRealization, Jet, KernelSpec, Lattice, Model,
};
