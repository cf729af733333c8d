//! Complex-contour scattering toolkit.
//!
//! Helmholtz and Schrödinger problems are discretized on grids whose nodes
//! are rotated (or partially bent) into the complex plane. On a fully
//! rotated grid the scattered wave is damped, so plain geometric multigrid
//! converges, and the far-field / ionization integrals are evaluated along
//! the same complex contour. A classical real-grid formulation with exterior
//! complex scaling is kept alongside as a validation path.

pub mod error;
pub mod farfield;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod multigrid;
pub mod operator;
pub mod problems;
pub mod quantum;
pub mod reference;
pub mod spectra;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::{Contour1D, ContourKind, TensorGrid};
pub use multigrid::{ConvergenceReport, CycleSpec, SmootherSpec};
pub use num_complex::Complex64;
pub use operator::StencilOperator;
