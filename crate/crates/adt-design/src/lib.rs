//! Config-driven front end for `adt-design-core`: TOML problem files, design
//! and sweep CSV, and the `adt-design` command.

pub mod cli;
pub mod config;
pub mod io;

pub use config::ProblemConfig;
