use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use heavytail_cli::config::parse_flag_pairs;
use heavytail_cli::output::emit;
use heavytail_cli::{execute, CliError, Command, ExperimentConfig, Provenance};

#[derive(Parser, Debug)]
#[command(
    name = "heavytail",
    version,
    about = "Heavy-tailed gradient noise experiments",
    after_help = "Commands: sample, estimate, stability, exit-time, transition, metastability, converge, train, sweep.\n\
                  Parameters are `--key value` pairs after the command; `heavytail <command> --help` lists them.\n\
                  Results go to --output, else $HEAVYTAIL_OUT_DIR/<command>.<format>, else stdout."
)]
struct Cli {
    /// Experiment to run.
    command: Option<String>,
    /// Config file of `key = value` lines; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Print the resolved config and exit without running.
    #[arg(long)]
    dry_run: bool,
    /// Experiment parameters as `--key value` pairs.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    params: Vec<String>,
}

fn command_help(command: Command) -> String {
    let mut s = format!("heavytail {command} [--config FILE] [--dry-run] [--key value ...]\n\nkeys:\n");
    for key in command.schema() {
        let default = match (key.default, key.required) {
            (Some(d), _) => format!("default {d}"),
            (None, true) => "required".to_string(),
            (None, false) => "optional".to_string(),
        };
        s.push_str(&format!("  --{:<24} {:?} ({default})\n", key.name.replace('_', "-"), key.kind));
    }
    s.push_str("  --output / --format        result path and csv|json\n");
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut params = cli.params;
    let mut config_path = cli.config;
    let mut dry_run = cli.dry_run;
    if params.iter().any(|a| a == "--help" || a == "-h") {
        let command: Command = cli.command.as_deref().unwrap_or("").parse()?;
        print!("{}", command_help(command));
        return Ok(());
    }
    if let Some(i) = params.iter().position(|a| a == "--dry-run") {
        params.remove(i);
        dry_run = true;
    }
    let mut flags = parse_flag_pairs(&params)?;
    if let Some(i) = flags.iter().position(|(k, _)| k == "config") {
        config_path = Some(PathBuf::from(flags.remove(i).1));
    }
    let file = match &config_path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    let cfg = ExperimentConfig::resolve(cli.command.as_deref(), file.as_deref(), &flags)?;
    if dry_run {
        print!("{}", cfg.serialize());
        return Ok(());
    }
    log::info!("running {} with config hash {}", cfg.command, heavytail_cli::config_hash(&cfg));
    let started = Instant::now();
    let outcome = execute(&cfg)?;
    let limit = cfg.opt_f64("max_diverged").unwrap_or(1.0);
    let partial = outcome.diverged_fraction > limit;
    let provenance = Provenance::new(&cfg, started.elapsed().as_secs_f64(), partial);
    emit(&cfg, &outcome, &provenance)?;
    if partial {
        return Err(CliError::Diverged {
            fraction: outcome.diverged_fraction,
            limit,
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
