//! Configuration, orchestration and report writing for the `carnot` CLI.

pub mod commands;
pub mod config;
pub mod report;
pub mod setup;
