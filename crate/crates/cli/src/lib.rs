//! Stage runner behind the `relsimp` binary.
//!
//! Every stage reads its inputs from the config and from artifacts earlier
//! stages left in the run directory, writes its own artifacts there, and
//! returns a [`StageSummary`]. Artifacts carry no timestamps or absolute
//! paths, so the same config and seed reproduce them byte for byte.

pub mod config;
mod stages;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use config::{RunConfig, WorkflowKind};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, missing input path, or missing prior artifact.
    #[error("config error: {0}")]
    Config(String),
    /// Input data that fails validation.
    #[error("input error: {0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Extract,
    Rank,
    Cluster,
    Queue,
    Generate,
    EvalIntrinsic,
    EvalExtrinsic,
    Serve,
    ConvertConllu,
    Synth,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Rank,
        Stage::Cluster,
        Stage::Queue,
        Stage::Generate,
        Stage::EvalIntrinsic,
        Stage::EvalExtrinsic,
        Stage::Serve,
        Stage::ConvertConllu,
        Stage::Synth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Rank => "rank",
            Stage::Cluster => "cluster",
            Stage::Queue => "queue",
            Stage::Generate => "generate",
            Stage::EvalIntrinsic => "eval-intrinsic",
            Stage::EvalExtrinsic => "eval-extrinsic",
            Stage::Serve => "serve",
            Stage::ConvertConllu => "convert-conllu",
            Stage::Synth => "synth",
        }
    }

    pub fn needs_seed(self) -> bool {
        matches!(self, Stage::Rank | Stage::Queue | Stage::EvalIntrinsic | Stage::EvalExtrinsic)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
            CliError::Config(format!("unknown stage {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Machine-readable result of a stage, printed as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: String,
    pub status: &'static str,
    /// Paths relative to the run directory.
    pub artifacts: Vec<String>,
    pub details: serde_json::Value,
}

pub fn run_stage(stage: Stage, config: &RunConfig) -> Result<StageSummary, CliError> {
    if stage.needs_seed() && config.seed.is_none() {
        return Err(CliError::Config(format!("stage {stage} requires --seed")));
    }
    config.validate()?;
    stages::run(stage, config)
}
