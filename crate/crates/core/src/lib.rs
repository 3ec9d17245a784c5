//! Exact computations on countably branching diamond spaces and their
//! Lipschitz-free spaces.
//!
//! The crate builds finite truncations of the diamond spaces `D_alpha`
//! indexed by ordinals below epsilon-zero, computes free-space norms exactly
//! by optimal transport with dual certificates, and plays a finite derivation
//! game whose transcripts certify that the pole molecule survives repeated
//! weak derivations against finite families of functionals.

pub mod decomposition;
pub mod derivation;
pub mod diamond;
pub mod error;
pub mod freespace;
pub mod io;
pub mod lipschitz;
pub mod metric;
pub mod ordinal;
pub mod rational;
pub mod suite;
pub mod transport;

pub use error::{Error, Result};
