//! Numerical workbench for sheared cuspidal rays on hyperbolic surfaces: PSL(2,R)
//! arithmetic, orbit counting on ternary quadrics, equidistribution measures along
//! shears, Eisenstein series, and the second moment of the symmetric-square stack for Δ.

pub mod algebra;
pub mod eisenstein;
pub mod error;
pub mod group;
pub mod modular;
pub mod orbit;
pub mod quad;
pub mod shear;
pub mod special;
pub mod testfn;

pub use error::{Result, ShearError};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
