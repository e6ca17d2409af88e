//! Finite-truncation models of free products of groups: reduced-word
//! arithmetic, window bases, sparse operators, completely positive
//! compression/recovery maps and the block-position decomposition of
//! truncated left translations.

pub mod decomp;
pub mod error;
pub mod exec;
pub mod operators;
pub mod recovery;
pub mod spaces;
pub mod words;

pub use error::{Error, Result};
