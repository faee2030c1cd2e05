//! Numerical laboratory for minimal graphs over model manifolds.
//!
//! Modules, bottom-up: [`model_manifold`] (warps, curvature, volume),
//! [`comparison`] (Riccati-type comparison ODE), [`mse`] (radial minimal
//! graphs and their curvature), [`gradient_bound`] (explicit gradient
//! estimate and its parameters), [`heat`] (radial diffusion for uniformly
//! elliptic operators), [`counterexample`] (doubly-warped example and its
//! certificate) and [`suite`] (the acceptance battery used by the CLI).

pub mod cli;
pub mod comparison;
pub mod counterexample;
pub mod error;
pub mod gradient_bound;
pub mod heat;
pub mod model_manifold;
pub mod mse;
pub mod quad;
pub mod suite;
pub mod tolerances;
pub mod verdict;

pub use error::{Error, Result};
