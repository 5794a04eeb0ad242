//! Finitely determined and finitely encoded modules over posets and `Z^n`.

pub mod encoding;
pub mod error;
pub mod field;
pub mod filtration;
pub mod fringe;
pub mod homalg;
pub mod json;
pub mod lattice;
pub mod matrix;
pub mod module;
pub mod oracle;
pub mod poset;
pub mod primary;

pub use error::{Error, Result};
pub use field::{Field, Scalar};
pub use matrix::{Matrix, Subspace};
