//! Independent reference computations and the acceptance runners shared by
//! the test suite and `parisi selftest`.

pub mod acceptance;
pub mod instances;
pub mod oracle;

pub use acceptance::{run, run_all, Outcome};
