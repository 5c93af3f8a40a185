//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::im::{ImConfig, ImLookupTable};
use crate::neural::{model_load, model_save, train_model_with};
use crate::sim::complexity::{complexity_report, ComplexityInputs};
use crate::sim::{dataset_from_csv, dataset_to_csv, generate_dataset, run_ber_sweep, Link, ReceiverKind, RunConfig, SimPlan};
use crate::DeepModel;

#[derive(Debug, Parser)]
#[command(name = "smxim", version, about = "SMX-MIMO index-modulation link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Preset name or path to a TOML config.
    #[arg(long, short)]
    config: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a fine-detector training set as CSV.
    GenData {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
        /// Number of IM groups.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a fine-detector model and write it to a model file.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, short)]
        out: PathBuf,
        /// Train on this CSV instead of generating data.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Suppress per-epoch loss lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Monte Carlo BER sweep, written as CSV.
    Ber {
        #[command(flatten)]
        config: ConfigArg,
        /// Model file for the deep receiver.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated subset of zf, ml, deep.
        #[arg(long, value_delimiter = ',')]
        receivers: Option<Vec<ReceiverKind>>,
        /// Comma-separated SNR grid in dB.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        snr_db: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        min_errors: Option<u64>,
        #[arg(long)]
        max_bits: Option<u64>,
        #[arg(long)]
        min_bits: Option<u64>,
        /// Disable receiver noise.
        #[arg(long)]
        no_noise: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Complex-multiplication counts per receiver.
    Complexity {
        #[command(flatten)]
        config: ConfigArg,
        /// Real multiplications per tanh.
        #[arg(long, default_value_t = 0)]
        lambda: u64,
        /// Real multiplications per sigmoid.
        #[arg(long, default_value_t = 0)]
        delta: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the IM lookup table as CSV.
    DumpTable {
        /// Take u, v and q from this config.
        #[arg(long, short)]
        config: Option<String>,
        #[arg(long, default_value_t = 4)]
        u: usize,
        #[arg(long, default_value_t = 2)]
        v: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => out.write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            write!(out, "{e}")?;
            return Ok(());
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            bail!("{} (see --help)", first.trim_start_matches("error: "));
        }
    };
    match cli.command {
        Command::GenData {
            config,
            out: path,
            size,
            snr_db,
            seed,
        } => {
            let cfg = RunConfig::load(&config.config)?;
            let link = Link::new(&cfg.system)?;
            let data = generate_dataset(
                &link,
                snr_db.unwrap_or(cfg.train.snr_db),
                size.unwrap_or(cfg.train.size),
                seed.unwrap_or(cfg.train.seed),
            )?;
            write_output(Some(&path), &dataset_to_csv(&data)?, out)?;
            writeln!(out, "wrote {} examples to {}", data.len(), path.display())?;
        }
        Command::Train {
            config,
            out: path,
            data,
            size,
            epochs,
            seed,
            quiet,
        } => {
            let mut cfg = RunConfig::load(&config.config)?;
            if let Some(s) = size {
                cfg.train.size = s;
            }
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            cfg.validate()?;
            let dataset = match data {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
                    dataset_from_csv(&text)?
                }
                None => {
                    let link = Link::new(&cfg.system)?;
                    generate_dataset(&link, cfg.train.snr_db, cfg.train.size, cfg.train.seed)?
                }
            };
            let dims = cfg.model_dims()?;
            let epochs = cfg.train.epochs;
            let outcome = train_model_with(&dataset, dims, &cfg.train.training_config(), |epoch, loss| {
                if !quiet {
                    let _ = writeln!(out, "epoch {}/{epochs} loss {loss:.6}", epoch + 1);
                }
            })?;
            model_save(&outcome.model, &path)?;
            writeln!(out, "wrote model to {}", path.display())?;
        }
        Command::Ber {
            config,
            model,
            receivers,
            snr_db,
            seed,
            min_errors,
            max_bits,
            min_bits,
            no_noise,
            out: path,
        } => {
            let mut cfg = RunConfig::load(&config.config)?;
            let s = &mut cfg.sim;
            let explicit = receivers.is_some();
            if let Some(r) = receivers {
                s.receivers = r;
            }
            if let Some(v) = snr_db {
                s.snr_db = v;
            }
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = min_errors {
                s.min_errors = v;
            }
            if let Some(v) = max_bits {
                s.max_bits = v;
            }
            if let Some(v) = min_bits {
                s.min_bits = v;
            }
            if model.is_none() && s.receivers.contains(&ReceiverKind::Deep) {
                if explicit {
                    bail!("the deep receiver needs --model <file>");
                }
                s.receivers.retain(|r| *r != ReceiverKind::Deep);
                if s.receivers.is_empty() {
                    bail!("the deep receiver needs --model <file>");
                }
            }
            cfg.validate()?;
            let link = Link::new(&cfg.system)?;
            let model: Option<DeepModel> = model
                .map(|p| model_load(&p).with_context(|| format!("cannot load model {}", p.display())))
                .transpose()?;
            let mut plan = SimPlan::from_settings(&cfg.sim);
            plan.noiseless = no_noise;
            let report = run_ber_sweep(&link, &plan, model.as_ref())?;
            write_output(path.as_deref(), &report.to_csv(), out)?;
        }
        Command::Complexity {
            config,
            lambda,
            delta,
            out: path,
        } => {
            let cfg = RunConfig::load(&config.config)?;
            let report = complexity_report(&ComplexityInputs::from_config(&cfg, lambda, delta)?)?;
            write_output(path.as_deref(), &report.render(), out)?;
        }
        Command::DumpTable { config, u, v, out: path } => {
            let table = match config {
                Some(c) => {
                    let cfg = RunConfig::load(&c)?;
                    ImLookupTable::for_config(&cfg.system.im()?)
                }
                None => ImLookupTable::for_config(&ImConfig::new(u, v, 2)?),
            };
            write_output(path.as_deref(), &table.to_csv(), out)?;
        }
    }
    Ok(())
}

/// Runs with the process arguments; returns the exit status.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let mut stdout = std::io::stdout().lock();
    match run_with(args, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            1
        }
    }
}
