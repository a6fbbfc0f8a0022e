//! Configuration-driven front end for `aniso-core`: TOML run configurations,
//! the `solve`, `classify`, `verify`, `sweep`, `oracle` and `schedule`
//! commands, and their JSON/CSV outputs.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{build_problem, run, sweep_report, sweep_spec, Outcome};
pub use config::{parse_config, Command, ConfigError, RunConfig};
