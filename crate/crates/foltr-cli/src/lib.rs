//! Experiment harness around `foltr-core`: strict TOML configs with grid
//! expansion, parallel seeded runs, CSV metrics, summary tables, per-round
//! trace logs and SVG charts.

pub mod chart;
pub mod config;
pub mod runner;
pub mod synth;
