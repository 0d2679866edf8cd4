use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sysid_cli::commands::{cmd_freqresp, cmd_identify, cmd_montecarlo, cmd_simulate};
use sysid_cli::config::CampaignConfig;
use sysid_cli::error::CliError;

#[derive(Parser)]
#[command(name = "sysid", version, about = "Closed-loop identification of a magnetic-levitation loop")]
struct Cli {
    /// Campaign configuration (JSON); the built-in maglev campaign if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed (simulate), optimizer seed (identify) or base seed (montecarlo).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one closed-loop experiment into dataset.csv.
    Simulate,
    /// Identify a model from a recorded dataset.
    Identify {
        #[arg(long)]
        data: PathBuf,
        /// spem[:blackbox4|graybox2[:controller]], dual_youla[:n], arx[:n], armax[:n]
        #[arg(long, default_value = "spem")]
        method: String,
    },
    /// Run the Monte-Carlo campaign.
    Montecarlo {
        /// Restrict the campaign to one method tag.
        #[arg(long)]
        method: Option<String>,
    },
    /// Write a frequency response on the configured grid.
    Freqresp {
        /// plant, unit or a controller name.
        #[arg(long)]
        model: Option<String>,
        /// Black-box parameters theta1..theta4.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::maglev(),
    };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate => cmd_simulate(&cfg, out, cli.seed),
        Command::Identify { data, method } => cmd_identify(&cfg, data, method, out, cli.seed),
        Command::Montecarlo { method } => cmd_montecarlo(&cfg, out, cli.seed, method.as_deref()),
        Command::Freqresp { model, theta } => cmd_freqresp(&cfg, model.as_deref(), theta.as_deref(), out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
