use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use ymspec::{load_config, run, Command, RunError, THREADS_ENV};

#[derive(Parser)]
#[command(name = "ymspec", version, about = "Truncated Yang-Mills quantization experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(err: RunError) -> ExitCode {
    eprintln!("{}", err.diagnostic());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(RunError::Usage(e.to_string().trim().to_string())),
    };
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                // a second initialization only happens in embedding hosts
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return fail(RunError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        }
    }
    let cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if cfg.command != cli.command {
        return fail(RunError::Usage(format!(
            "command `{}` does not match the config's `{}`",
            cli.command.as_str(),
            cfg.command.as_str()
        )));
    }
    let out = cli.out.or_else(|| cfg.output.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("ymspec-out"));
    match run(&cfg, &out) {
        Ok(outcome) => {
            let failed: Vec<_> = outcome.checks.iter().filter(|c| !c.pass).collect();
            println!(
                "{}",
                json!({
                    "status": if outcome.passed { "ok" } else { "failed" },
                    "command": outcome.command,
                    "outputs": outcome.outputs,
                    "failed_checks": failed,
                })
            );
            if outcome.passed { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => fail(e),
    }
}
