//! Command-line front end for the exponent toolkit.

pub mod commands;
pub mod config;
pub mod output;
