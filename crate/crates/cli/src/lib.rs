//! Building blocks of the `treexp` binary: running one query into a
//! [`report::RunReport`], checking claims with the oracle, and batch runs.

pub mod bench;
pub mod report;
pub mod verify;
