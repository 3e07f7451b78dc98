//! Numerical laboratory for the weighted parabolic p-Laplacian
//!
//! ```text
//! u_t - div(ω₂ |∇u|^(p-2) ∇u) = λ ω₁ |u|^(p-2) u
//! ```
//!
//! on 1D intervals and radially symmetric balls: admissibility checks for the
//! weight pair, Rayleigh quotient minimization for the first eigenvalue of the
//! (truncated) weighted problem, and backward Euler evolution with energy
//! monitoring and blow-up detection.

pub mod banded;
pub mod eigen;
pub mod error;
pub mod mesh;
pub mod operators;
pub mod parabolic;
pub mod weights;

pub use error::{Error, Result};
pub use mesh::{build_mesh, build_mesh_symmetric, Field, Mesh1D, MeshSpec, Metric};
pub use weights::{Domain, WeightSpec};
