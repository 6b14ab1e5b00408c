//! Configuration, orchestration and output for the `corrbath` command line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod table;
pub mod word;
