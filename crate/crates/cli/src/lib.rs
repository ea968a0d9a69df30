//! Experiment-runner library behind the `rs2` binary: dataset generation and
//! loading, config parsing, sweep orchestration, and report/bound tables.

pub mod config;
pub mod experiment;
pub mod io;
pub mod report;
pub mod synth;
pub mod theory_cmd;
