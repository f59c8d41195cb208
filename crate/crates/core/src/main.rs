use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccs_search::config::parse_config;
use ccs_search::sweep::{run_sweep, OutputFormat};
use ccs_search::{CcsParams, ObservationModel};

#[derive(Debug, Parser)]
#[command(
    name = "ccs-search",
    version,
    about = "Anomaly search with multiple plays under delay and switching costs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a policy/cost sweep and write one row per (policy, c).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the KL divergences of a Rayleigh model.
    Kl {
        #[arg(long)]
        sigma_f: f64,
        #[arg(long)]
        sigma_g: f64,
    },
    /// Print the case and the rate function I*.
    Rate {
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "L", default_value_t = 1)]
        l: usize,
        #[arg(long)]
        sigma_f: f64,
        #[arg(long)]
        sigma_g: f64,
    },
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run {
            config,
            out,
            format,
            jobs,
        } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| format!("reading {}: {e}", config.display()))?;
            let config = parse_config(&text)?;
            for warning in &config.warnings {
                eprintln!("warning: {warning}");
            }
            let file =
                File::create(&out).map_err(|e| format!("creating {}: {e}", out.display()))?;
            let mut sink = BufWriter::new(file);
            let rows = run_sweep(&config, format, jobs, &mut sink)?;
            sink.flush()?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Kl { sigma_f, sigma_g } => {
            let kl = ObservationModel::rayleigh(sigma_f, sigma_g)?.kl();
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "D(f||g) = {:.4}", kl.d_f_g)?;
            writeln!(stdout, "D(g||f) = {:.4}", kl.d_g_f)?;
        }
        Command::Rate {
            m,
            k,
            l,
            sigma_f,
            sigma_g,
        } => {
            let kl = ObservationModel::rayleigh(sigma_f, sigma_g)?.kl();
            // The cost does not enter the case split or the rate.
            let params = CcsParams::new(m, k, l, 0.5, kl)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "case = {}", params.case())?;
            writeln!(stdout, "I* = {:.5}", params.rate())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
