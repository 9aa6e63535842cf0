// SPDX-License-Identifier: Apache-2.0

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use cesa::metrics::{DEFAULT_EXHAUSTIVE_CAP, DEFAULT_RUNS, DEFAULT_SAMPLES};
use cesa::{AdderConfig, Variant};
use clap::{Parser, Subcommand, ValueEnum};

/// Overrides the default output directory of `smooth` and `kmeans`.
pub const OUTPUT_DIR_ENV: &str = "CESA_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "cesa", version, about = "Carry-estimating approximate adder models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct AdderArgs {
    /// Operand width in bits.
    #[arg(long, short = 'n')]
    width: u32,
    /// Block size in bits (defaults to the width).
    #[arg(long, short = 'k')]
    block: Option<u32>,
    #[arg(long, value_parser = parse_variant, default_value = "cesa")]
    variant: Variant,
}

impl AdderArgs {
    fn config(&self) -> anyhow::Result<AdderConfig> {
        Ok(AdderConfig::new(
            self.width,
            self.block.unwrap_or(self.width),
            self.variant,
        )?)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exhaustive,
    MonteCarlo,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Add two operands and show estimated vs exact boundary carries.
    Add {
        #[command(flatten)]
        adder: AdderArgs,
        a: u64,
        b: u64,
        /// Print a JSON record instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate ER/MED/MRED and unit-gate cost over a configuration grid.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "8")]
        widths: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        blocks: Vec<u32>,
        #[arg(long, value_delimiter = ',', value_parser = parse_variant, default_value = "cesa,cesa-perl")]
        variants: Vec<Variant>,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: ModeArg,
        /// Samples per Monte Carlo run.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Widest adder evaluated exhaustively.
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
        exhaustive_cap: u32,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Defaults to the output file extension, else json.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run the exhaustive invariant suite at one width.
    Verify {
        #[arg(long, short = 'n', value_parser = clap::value_parser!(u32).range(2..=12))]
        width: u32,
        #[arg(long)]
        json: bool,
    },
    /// Unit-gate delay and area estimate.
    Cost {
        #[command(flatten)]
        adder: AdderArgs,
        #[arg(long)]
        json: bool,
    },
    /// Gaussian smoothing with approximate accumulation, scored by PSNR/SSIM.
    Smooth {
        /// width:block:variant, repeatable.
        #[arg(long = "config", value_parser = parse_config,
              default_values = ["32:8:cesa", "32:8:cesa-perl"])]
        configs: Vec<AdderConfig>,
        /// Binary PGM input; the built-in test image when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        kernel_sigma: f64,
        #[arg(long, default_value_t = 8)]
        scale_bits: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// K-means with approximate accumulation, compared to the exact baseline.
    Kmeans {
        #[arg(long = "config", value_parser = parse_config,
              default_values = ["32:4:cesa-perl", "32:8:cesa-perl", "32:16:cesa-perl"])]
        configs: Vec<AdderConfig>,
        /// Headerless CSV of real coordinates; the built-in dataset when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        clusters: usize,
        #[arg(long, default_value_t = cesa::apps::kmeans::DEFAULT_MAX_ITER)]
        max_iter: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: cesa::AdderError| e.to_string())
}

fn parse_config(s: &str) -> Result<AdderConfig, String> {
    s.parse().map_err(|e: cesa::AdderError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
