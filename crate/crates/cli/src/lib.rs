//! Library side of the `qcomp` command-line tool: configuration, output
//! formats and the subcommands themselves.

pub mod app;
pub mod commands;
pub mod config;
pub mod output;
