//! Command-line driver for the `su3ff` library.

pub mod commands;
pub mod config;
pub mod records;
pub mod verify;

pub use commands::{run, Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;
