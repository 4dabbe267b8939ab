//! Quantum 6j symbols at roots of unity, Turaev-Viro state sums on
//! triangulated closed 3-manifolds, spherical tetrahedron geometry, and the
//! semiclassical (large-level) counterparts of the 6j identities.

pub mod asymp;
pub mod diff;
pub mod error;
pub mod qnum;
pub mod quad;
pub mod semiclassical;
pub mod sixj;
pub mod sphgeom;
pub mod statesum;
pub mod trimesh;

pub use error::{Error, Result};
