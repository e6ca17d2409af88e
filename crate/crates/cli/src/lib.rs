//! Library side of the command line front end: group specs, suites and
//! report emission, kept callable so integration tests drive the same code
//! paths as the binary.

pub mod groupspec;
pub mod report;
pub mod suites;
