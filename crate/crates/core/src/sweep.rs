// SPDX-License-Identifier: Apache-2.0

//! Error/cost sweeps over a grid of adder configurations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adder::{AdderConfig, Variant};
use crate::cost;
use crate::exec::Exec;
use crate::metrics::{
    evaluate_exhaustive_with, evaluate_monte_carlo_with, ErrorReport, MetricsError, Mode,
    DEFAULT_EXHAUSTIVE_CAP, DEFAULT_RUNS, DEFAULT_SAMPLES,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub widths: Vec<u32>,
    pub block_sizes: Vec<u32>,
    pub variants: Vec<Variant>,
    pub mode: Mode,
    /// Samples per Monte Carlo run.
    pub samples: u64,
    pub runs: u32,
    pub seed: u64,
    pub exhaustive_cap: u32,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            widths: vec![8],
            block_sizes: vec![2, 4, 8],
            variants: vec![Variant::Cesa, Variant::CesaPerl],
            mode: Mode::Exhaustive,
            samples: DEFAULT_SAMPLES,
            runs: DEFAULT_RUNS,
            seed: 0,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

/// One evaluated configuration: the error report plus unit-gate costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub report: ErrorReport,
    pub critical_path_levels: u32,
    pub gate_count: u32,
}

/// A grid point that was not evaluated, and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub width: u32,
    pub block_size: u32,
    pub variant: Variant,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("no valid configuration in sweep ({skipped} skipped)")]
    AllInvalid { skipped: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Evaluates every `(width, block, variant)` combination in that nesting
/// order. Invalid combinations are listed in `skipped`.
pub fn run_sweep(spec: &SweepSpec, exec: Exec) -> Result<SweepOutput, SweepError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &width in &spec.widths {
        for &block_size in &spec.block_sizes {
            for &variant in &spec.variants {
                let skip = |reason: String| Skipped {
                    width,
                    block_size,
                    variant,
                    reason,
                };
                let config = match AdderConfig::new(width, block_size, variant) {
                    Ok(c) => c,
                    Err(e) => {
                        skipped.push(skip(e.to_string()));
                        continue;
                    }
                };
                let report = match spec.mode {
                    Mode::Exhaustive => {
                        evaluate_exhaustive_with(&config, spec.exhaustive_cap, exec)
                    }
                    Mode::MonteCarlo => evaluate_monte_carlo_with(
                        &config,
                        spec.samples,
                        spec.runs,
                        spec.seed,
                        exec,
                    ),
                };
                let report = match report {
                    Ok(r) => r,
                    Err(e @ MetricsError::TooWide { .. }) => {
                        skipped.push(skip(e.to_string()));
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let c = cost::estimate(&config);
                rows.push(SweepRow {
                    report,
                    critical_path_levels: c.critical_path_levels,
                    gate_count: c.gate_count,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(SweepError::AllInvalid {
            skipped: skipped.len(),
        });
    }
    Ok(SweepOutput {
        spec: spec.clone(),
        rows,
        skipped,
    })
}
