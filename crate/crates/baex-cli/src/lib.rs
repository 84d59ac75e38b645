//! Experiment orchestration for BAE explanation-quality studies: config
//! parsing, sweep execution over configurations, methods, capacities, depths
//! and shift combinations, run-record persistence, and report emission.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod report;
