use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use framescope::pipeline::{Pipeline, PipelineConfig, PipelineError, RunOptions, Stage, StageReport};
use framescope::Region;

/// War/peace journalism framing pipeline.
#[derive(Parser, Debug)]
#[command(name = "framescope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "framescope.toml")]
    config: PathBuf,

    /// Restrict aggregate and report to one region (US, UK, ME).
    #[arg(long, global = true)]
    region: Option<Region>,

    /// Read this file instead of the stage's usual input.
    #[arg(long, global = true)]
    stage_input: Option<PathBuf>,

    /// Chat-completion endpoint to use instead of the configured one.
    #[arg(long, global = true)]
    mock_endpoint: Option<String>,

    /// Accepted for compatibility. Nothing in the pipeline draws random numbers.
    #[arg(long, global = true)]
    seed_less: bool,

    /// Override the configured concurrency bound.
    #[arg(long, global = true)]
    concurrency: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    Ingest,
    Filter,
    ClassifyGeneric,
    ExtractIndicators,
    TagFrames,
    Aggregate,
    Eval,
    Report,
    /// Every enabled stage in order.
    RunAll,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Ingest => Stage::Ingest,
            Command::Filter => Stage::Filter,
            Command::ClassifyGeneric => Stage::ClassifyGeneric,
            Command::ExtractIndicators => Stage::ExtractIndicators,
            Command::TagFrames => Stage::TagFrames,
            Command::Aggregate => Stage::Aggregate,
            Command::Eval => Stage::Eval,
            Command::Report => Stage::Report,
            Command::RunAll => return None,
        })
    }
}

fn run(cli: &Cli) -> Result<Vec<StageReport>, PipelineError> {
    let config = PipelineConfig::load(&cli.config)?;
    let options = RunOptions {
        mock_endpoint: cli.mock_endpoint.clone(),
        stage_input: cli.stage_input.clone(),
        region: cli.region,
        concurrency: cli.concurrency,
    };
    let mut pipeline = Pipeline::new(config, options)?;
    match cli.command.stage() {
        Some(stage) => Ok(vec![pipeline.run_stage(stage)?]),
        None => pipeline.run_all(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version are not errors; everything else is a usage error (1, not clap's 2).
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(reports) => {
            let mut failures = 0;
            for r in &reports {
                let fields: Vec<String> =
                    r.counts.iter().chain(&r.status_counts).map(|(k, n)| format!("{k}={n}")).collect();
                println!("{}: {}", r.stage, fields.join(" "));
                failures += r.endpoint_failures;
            }
            if failures > 0 {
                eprintln!("error: {failures} articles failed at the endpoint after retries; see the audit files");
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
