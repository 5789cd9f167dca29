use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use relsimp_cli::{run_stage, CliError, RunConfig, Stage};

/// Mine dependency-path simplifications and turn accepted ones into new
/// entity pairs.
#[derive(Debug, Parser)]
#[command(name = "relsimp", version)]
struct Args {
    /// ingest, extract, rank, cluster, queue, generate, eval-intrinsic,
    /// eval-extrinsic, serve, convert-conllu or synth
    stage: String,
    /// TOML run config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set thresholds.precision=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Required by rank, queue, eval-intrinsic and eval-extrinsic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// baseline, no_expert_with_labels, expert_no_labels or expert_with_labels
    #[arg(long)]
    workflow: Option<String>,
}

fn toml_string(p: &std::path::Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}

fn execute(args: Args) -> Result<String, CliError> {
    let stage: Stage = args.stage.parse()?;
    let mut overrides = args.set;
    if let Some(p) = &args.corpus {
        overrides.push(format!("corpus={}", toml_string(p)));
    }
    if let Some(p) = &args.gold {
        overrides.push(format!("gold={}", toml_string(p)));
    }
    if let Some(p) = &args.run_dir {
        overrides.push(format!("run_dir={}", toml_string(p)));
    }
    if let Some(w) = &args.workflow {
        overrides.push(format!("workflow={w}"));
    }
    let mut config = RunConfig::load(args.config.as_deref(), &overrides)?;
    config.seed = args.seed;
    let summary = run_stage(stage, &config)?;
    serde_json::to_string(&summary).map_err(|e| CliError::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("relsimp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
