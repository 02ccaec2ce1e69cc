//! Energy minimization and symmetry certification for vector fields between
//! surfaces of revolution.

pub mod annulus;
pub mod energy;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod instance;
pub mod io;
pub mod linalg;
pub mod precond;
pub mod solvers;
pub mod spectral;
pub mod spline;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::Vec3;
