//! Split-step pseudospectral solver for the two-dimensional
//! Schrodinger-Poisson system with an optional relaxation step realized by
//! polar decomposition, plus the diagnostics needed to audit conservation
//! laws and the algebraic identities linking the wave and hydrodynamic
//! pictures.
//!
//! Layout:
//! * [`fields`] - periodic grid, spectral calculus, quadrature.
//! * [`polar`] - polar factorization, hydrodynamic moments, the collision
//!   update, and the null-form / irrotationality residuals.
//! * [`poisson`] - periodic, free-space and direct-quadrature solvers for
//!   the electrostatic potential.
//! * [`propagator`] - Strang-split collisionless evolution.
//! * [`scheme`] - the fractional-step scheme alternating collisionless
//!   strips with the relaxation update, tau-refinement studies and
//!   weak-form residuals.
//! * [`diagnostics`] - conserved scalars, both energy forms, entropy, the
//!   pressure identity, the quantum-pressure form equivalences, the
//!   logarithmic Sobolev check and mixed space-time norms.
//! * [`config`], [`ic`], [`snapshot`], [`output`] - the user surface.
//!
//! All operations are pure functions of their inputs; field buffers are
//! never mutated in place across module boundaries, so refinement studies
//! can fan out runs across threads freely.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod fields;
pub mod ic;
pub mod output;
pub mod poisson;
pub mod polar;
pub mod propagator;
pub mod scheme;
pub mod snapshot;

pub use config::SimConfig;
pub use error::{QhdError, Result};
pub use fields::{make_grid, Grid, RealField, VectorField, WaveField};
pub use poisson::PoissonMode;
pub use propagator::StepParams;
pub use scheme::SchemeConfig;
