use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homodyne_cli::config::{parse_override, OutputFormat};
use homodyne_cli::{cmd_fig2, cmd_precision, cmd_simulate, cmd_table1, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "homodyne", version, about = "Homodyne phase estimation with saturating photodetectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file (flat dotted keys or nested objects).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set detector.n_sat=1e17`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<String>,

    /// Output format; csv by default, json for `simulate`.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,

    /// Monte Carlo seed (same as `--set mc.seed=...`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Linear versus saturating detector response at N/N_sat = 0.01 .. 3.
    Table1,
    /// Error ratio of both protocols against the signal photon number.
    Fig2,
    /// Propagated phase precision over a photon-number or repetition sweep.
    Precision,
    /// Monte Carlo ensemble statistics.
    Simulate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides = cli
        .overrides
        .iter()
        .map(|raw| parse_override(raw))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = cli.seed {
        overrides.push(("mc.seed".into(), seed.into()));
    }
    if let Some(out) = &cli.out {
        overrides.push(("output.path".into(), out.clone().into()));
    }
    if let Some(format) = cli.format {
        overrides.push((
            "output.format".into(),
            serde_json::to_value(format).expect("format"),
        ));
    }
    let config = RunConfig::load(cli.config.as_deref(), &overrides)?;

    let (table, default_format) = match cli.command {
        Command::Table1 => (cmd_table1(&config)?, OutputFormat::Csv),
        Command::Fig2 => (cmd_fig2(&config)?, OutputFormat::Csv),
        Command::Precision => (cmd_precision(&config)?, OutputFormat::Csv),
        Command::Simulate => (cmd_simulate(&config)?, OutputFormat::Json),
    };
    let format = config.output.format.unwrap_or(default_format);
    table.write(format, config.output.path.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
