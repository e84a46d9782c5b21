//! Data ingestion, synthetic scenes and question suites, capacity analysis
//! and end-to-end evaluation.

pub mod capacity;
pub mod dataset;
pub mod evaluate;
pub mod output;
pub mod synth;
pub mod suite;
