//! Latent-variable graphical models with Golazo penalties.
//!
//! Solvers for the sparse plus low-rank decomposition of a precision matrix
//! (Gaussian case) or of a Hüsler–Reiss precision (Laplacian case), together
//! with simulation, variogram estimation and cross-validation helpers.

pub mod cli;
pub mod config;
pub mod error;
pub mod extremes;
pub mod gauss_admm;
pub mod io;
pub mod lap_admm;
pub mod matcore;
pub mod penalty;
pub mod select;
pub mod simgen;

pub use error::{Error, Result};
pub use gauss_admm::{solve_latent_gaussian, AdmmParams, AdmmResult};
pub use matcore::{SymMatrix, ProjectionBasis, BasisFlavor};
pub use penalty::{compile_penalty, GolazoBounds, PenaltyKind, PenaltySpec};
pub use extremes::{SampleBlock, VariogramMatrix};
pub use lap_admm::{solve_latent_laplacian, LaplacianResult};
