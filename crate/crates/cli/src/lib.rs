//! Library surface of the `gclab` command-line tool, split out so
//! integration tests can drive the grid runner and commands directly.

pub mod bench;
pub mod commands;
