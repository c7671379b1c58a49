//! Auditing toolkit for deterministic mechanisms: Bayesian differential
//! privacy, persistent approximate truthfulness and deterrent payments.

pub mod acceptance;
pub mod builtin;
pub mod config;
pub mod corpus;
pub mod deterrent;
pub mod env;
pub mod error;
pub mod mechanism;
pub mod normal;
pub mod outcome;
pub mod privacy;
pub mod report;
pub mod rng;
pub mod runner;
pub mod sampling;
pub mod scenario;
pub mod truthfulness;

pub use config::{parse_config, ScenarioConfig};
pub use env::{Alternative, Environment, ScalarFn, TypeDistribution, TypeSpace, TypeValue, UtilitySpec};
pub use error::{AuditError, Result};
pub use mechanism::Mechanism;
pub use rng::RandomStream;
pub use runner::{run_scenario, ReportDocument};
