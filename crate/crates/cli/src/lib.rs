//! Command-line front end: campaign configuration, per-method runners,
//! Monte-Carlo campaigns and CSV artifacts.

pub mod campaign;
pub mod commands;
pub mod config;
pub mod error;
pub mod methods;
pub mod table;
