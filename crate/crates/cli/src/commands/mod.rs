//! One module per pipeline subcommand.
//!
//! Commands communicate exclusively through artifacts in the output
//! directory, each stamped with the configuration hash and seed, so any
//! stage can be re-run or inspected in isolation.

pub mod bench;
pub mod bnm;
pub mod correct;
pub mod eval;
pub mod gen;
pub mod report;
pub mod train;
