//! Exact computation in the groups `T(φ)` of piecewise-linear
//! homeomorphisms of suspension flows over subshifts.
//!
//! Elements are stored as equivariant atlases: a cylinder partition of the
//! base subshift with a dyadic PL map on `[0, 1]` for every cell. Equality is
//! decided by canonical forms, so every construction in [`constructions`]
//! and [`equivalence`] comes with an exact certificate.

pub mod constructions;
pub mod dyadic;
pub mod equivalence;
pub mod error;
pub mod region;
pub mod suspension;
pub mod symbolic;

pub use dyadic::{dy, Dyadic, Interval, PLMap};
pub use error::{Error, Result};
pub use suspension::{FlowElement, SuspensionPoint};
pub use symbolic::{ClopenSet, Subshift, SymbolicPoint};
