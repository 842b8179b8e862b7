//! Randomized multipliers for dense numerical linear algebra.

pub mod bench;
pub mod dense;
pub mod error;
pub mod genp;
pub mod io;
pub mod lowrank;
pub mod random;
pub mod structured;
pub mod tt;

pub use dense::Matrix;
pub use error::{Error, Result};
pub use random::{MultiplierKind, RngStream};
