//! Experiment orchestration for the robust model-based RL library:
//! configuration, subcommands, persistence and plot-data export.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
