//! Scenario runner, baseline scheduler and verification oracles built on
//! `teg-core`.

pub mod baseline;
pub mod config;
pub mod events;
pub mod metrics;
pub mod output;
pub mod sim;
pub mod verify;

use thiserror::Error;

pub use config::ScenarioConfig;
pub use metrics::RunMetrics;
pub use sim::{run_scenario, RunOutput};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("simulation fault at tick {tick}: {dump}")]
    Fault { tick: u64, dump: String },
    #[error("{0}")]
    Core(String),
}
