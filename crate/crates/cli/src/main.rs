use clap::Parser;
use loghardy_cli::{parse_config, run, CliError, Command};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs one finite-element experiment described by a JSON configuration.
#[derive(Parser)]
#[command(name = "loghardy", version)]
struct Args {
    /// One of: eigen, robin, admissible, sobolev, weights-scan, asymptotics, pencil.
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set mesh.rings=14`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to `outputs.dir` from the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LOGHARDY_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .map_err(|_| CliError::Config(format!("LOGHARDY_THREADS: `{raw}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("LOGHARDY_THREADS: {e}")))
}

fn execute(args: &Args) -> Result<i32, CliError> {
    configure_threads()?;
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let config = parse_config(&text, &args.overrides)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.outputs.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run(args.command, &config, &out_dir)?;
    for file in &outcome.files {
        println!("{}", file.display());
    }
    if !outcome.converged {
        eprintln!("warning: at least one iterative solve did not converge");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            // Usage errors share the configuration exit code; 2 means non-convergence.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let code = execute(&args).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
