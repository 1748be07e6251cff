//! Reproduction harness: run configuration, multi-seed orchestration,
//! aggregation, rendering and the exact tabular oracle.

pub mod commands;
pub mod config;
pub mod oracle;
pub mod records;
pub mod render;
pub mod report;
pub mod runner;

pub use config::RunConfig;
pub use report::AggregateReport;
