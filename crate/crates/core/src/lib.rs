//! Logarithmic norms and global incremental stability certification for
//! nonlinear systems `ẋ = f(x, t) + δ(t)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod lognorm;
pub mod system;

pub use error::{Error, Result};
pub use linalg::{Matrix, NormKind, Vector};
pub use system::SystemSpec;
