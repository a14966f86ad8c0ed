//! `gpos` command-line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gpos_core::geodata::SnapshotFormat;
use gpos_core::simnet::Protocol;
use thiserror::Error;

use crate::config::{parse_format, parse_protocol, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {1}", .0.display())]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{0}")]
    Geo(#[from] gpos_core::geodata::GeoError),
    #[error("{0}")]
    Gpos(#[from] gpos_core::gpos::GposError),
    #[error("{0}")]
    Metric(#[from] gpos_core::metrics::MetricError),
    #[error("{0}")]
    Reconfig(#[from] gpos_core::reconfig::ReconfigError),
    #[error("{0}")]
    Sim(#[from] gpos_core::simnet::SimError),
}

#[derive(Parser)]
#[command(name = "gpos", version, about = "Geospatial decentralization analysis for PoS validator sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load snapshots, drop incomplete records, merge nearby validators.
    Preprocess(Flags),
    /// GEC, Gini variants, Nakamoto coefficients, entropy and KDE grids.
    Metrics(Flags),
    /// Per-validator geospatial diversity index.
    Gdi(Flags),
    /// Linear and exponential voting power.
    Weights(Flags),
    /// Minimum coalition stake and sybil curves.
    Attack(Flags),
    /// Epoch reconfiguration, or replay of a dispute event log.
    Reconfig(Flags),
    /// Broadcast or gossip consensus simulation.
    Simulate(Flags),
    /// Lambda grid of GEC, latency and throughput.
    Sweep(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Snapshot file; repeat for several chains.
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<SnapshotFormat>,
    /// Proximity merge radius in km (0 disables).
    #[arg(long)]
    merge_radius: Option<f64>,
    /// Merge until at most this many validators remain.
    #[arg(long)]
    target_count: Option<usize>,
    /// Comma-separated lambda grid.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    /// Comma-separated alpha grid for the exponential variant.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Comma-separated thresholds; fractions like 1/3 are accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction)]
    threshold: Vec<f64>,
    #[arg(long, value_parser = parse_protocol)]
    protocol: Option<Protocol>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Event log for `reconfig` replay.
    #[arg(long)]
    events: Option<PathBuf>,
}

fn parse_fraction(text: &str) -> Result<f64, String> {
    let parsed = match text.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in `{text}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in `{text}`"))?;
            a / b
        }
        None => text.trim().parse().map_err(|_| format!("cannot parse `{text}`"))?,
    };
    if parsed.is_finite() {
        Ok(parsed)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

impl Flags {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if !self.input.is_empty() {
            cfg.input = self.input;
        }
        if self.format.is_some() {
            cfg.format = self.format;
        }
        if let Some(r) = self.merge_radius {
            cfg.merge_radius_km = r;
        }
        if self.target_count.is_some() {
            cfg.target_count = self.target_count;
        }
        if !self.lambda.is_empty() {
            cfg.lambdas = self.lambda;
        }
        if !self.alpha.is_empty() {
            cfg.alphas = self.alpha;
        }
        if !self.threshold.is_empty() {
            cfg.thresholds = self.threshold;
        }
        if let Some(p) = self.protocol {
            cfg.simulation.protocol = p;
        }
        if let Some(r) = self.rounds {
            cfg.simulation.rounds = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        if self.events.is_some() {
            cfg.reconfig.events = self.events;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (name, flags): (&'static str, Flags) = match cli.command {
        Command::Preprocess(f) => ("preprocess", f),
        Command::Metrics(f) => ("metrics", f),
        Command::Gdi(f) => ("gdi", f),
        Command::Weights(f) => ("weights", f),
        Command::Attack(f) => ("attack", f),
        Command::Reconfig(f) => ("reconfig", f),
        Command::Simulate(f) => ("simulate", f),
        Command::Sweep(f) => ("sweep", f),
    };
    let cfg = flags.resolve()?;
    commands::execute(name, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gpos: {e}");
            ExitCode::FAILURE
        }
    }
}
