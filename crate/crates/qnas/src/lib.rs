//! File formats, run directories and the command line on top of
//! [`qnas_core`].

pub mod cli;
pub mod config;
pub mod history;
pub mod params;
pub mod run;

pub use qnas_core;
