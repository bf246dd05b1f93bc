//! Deterministic simulation core for federated online learning to rank.
//!
//! The crate models a cross-silo federation in which every client trains a
//! ranker from simulated clicks via pairwise differentiable gradient descent,
//! a central server merges the submitted weights with a configurable
//! aggregation rule (FedAvg or a Byzantine-robust alternative), and a
//! configurable fraction of clients mounts an untargeted poisoning attack
//! (adversarial clicks, LIE, or aggregator-tailored crafting).
//!
//! Everything here is pure computation over in-memory data: the crate is
//! `no_std` (with `alloc`) and owns no IO. File formats, CSV persistence,
//! charts and the CLI live in the companion `foltr-cli` crate.
//!
//! All randomness flows through caller-provided seeds; a run is a pure
//! function of its configuration.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aggregate;
pub mod attack;
pub mod click;
pub mod data;
pub mod error;
pub mod federation;
pub mod metrics;
pub mod model;
pub mod num;
pub mod pdgd;
pub mod seeding;
pub mod stats;

pub use aggregate::AggregationRule;
pub use attack::{AttackKind, Knowledge, ThreatModel};
pub use click::{ClickModel, ClickModelKind, ClickResult};
pub use data::{Dataset, Document, QueryGroup};
pub use error::{Error, Result};
pub use federation::{ExperimentOutput, FederationState, RoundTrace, RunConfig};
pub use metrics::MetricRecord;
pub use model::{ModelKind, ModelSpec, ParamVector};
pub use pdgd::ClientUpdate;
