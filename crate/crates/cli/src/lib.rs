//! Configuration-driven runner for the nlslab experiments.

pub mod commands;
pub mod config;
pub mod plot;
