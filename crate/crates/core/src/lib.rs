//! Determinant representations of form factors of the diagonal monodromy
//! entries `T_ss(z)` in SU(3)-invariant integrable models solvable by the
//! nested algebraic Bethe ansatz.

pub mod bethe;
pub mod dwpf;
pub mod error;
pub mod formfactor;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod numeric;
pub mod psum;

pub use bethe::BetheState;
pub use error::{Error, Result};
pub use kernel::{Coupling, VarSet, C64};
pub use model::{ModelSpec, SiteRep, Twist, XxxChain};
