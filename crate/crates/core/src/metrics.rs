// SPDX-License-Identifier: Apache-2.0

//! Error metrics of an approximate adder against the exact oracle: error
//! rate (ER), mean error distance (MED) and mean relative error distance
//! (MRED), plus per-boundary carry mismatch rates.
//!
//! Results are compared as `(n+1)`-bit extended values so that overflowing
//! operand pairs are measured with their carry-out.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adder::{estimate_signals, true_carry, AddResult, AdderConfig, AdderError, Variant};
use crate::exec::Exec;

/// Widest adder evaluated exhaustively unless the caller raises the cap.
pub const DEFAULT_EXHAUSTIVE_CAP: u32 = 12;
/// Hard upper bound for a raised cap (`2^32` operand pairs).
pub const MAX_EXHAUSTIVE_WIDTH: u32 = 16;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_RUNS: u32 = 12;

/// Samples per Monte Carlo chunk. Each chunk owns one RNG stream.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Adder(#[from] AdderError),
    #[error("exhaustive evaluation of width {width} exceeds cap {cap}")]
    TooWide { width: u32, cap: u32 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("run count must be at least 1")]
    NoRuns,
    #[error("boundary statistics need an approximate variant, got exact")]
    ExactVariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Exhaustive,
    MonteCarlo,
}

/// ER/MED/MRED of one adder configuration.
///
/// For Monte Carlo reports `sample_count` is the number of samples per run
/// and the metrics are means of the per-run values. Exhaustive reports carry
/// seed 0 and a single run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub config: AdderConfig,
    pub er: f64,
    pub med: f64,
    pub mred: f64,
    pub sample_count: u64,
    pub run_count: u32,
    pub seed: u64,
    pub mode: Mode,
}

/// `|approx - exact|` on extended values.
pub fn error_distance(approx: &AddResult, exact: &AddResult) -> u128 {
    approx.extended_value.abs_diff(exact.extended_value)
}

/// Error distance divided by the exact extended value; 0 when the exact
/// sum is 0.
pub fn relative_error_distance(approx: &AddResult, exact: &AddResult) -> f64 {
    relative(approx.extended_value, exact.extended_value)
}

#[inline]
fn relative(approx: u128, exact: u128) -> f64 {
    if exact == 0 {
        0.0
    } else {
        approx.abs_diff(exact) as f64 / exact as f64
    }
}

/// Exact counts plus a chunk-local relative-distance sum.
#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    samples: u64,
    errors: u64,
    distance: u128,
    relative: f64,
}

impl Tally {
    #[inline]
    fn record(&mut self, config: &AdderConfig, a: u64, b: u64) {
        let approx = config.add_extended(a, b);
        let exact = a as u128 + b as u128;
        self.samples += 1;
        if approx != exact {
            self.errors += 1;
            self.distance += approx.abs_diff(exact);
            self.relative += relative(approx, exact);
        }
    }

    fn merge(mut self, other: &Tally) -> Tally {
        self.samples += other.samples;
        self.errors += other.errors;
        self.distance += other.distance;
        self.relative += other.relative;
        self
    }

    fn rates(&self) -> (f64, f64, f64) {
        let n = self.samples as f64;
        (
            self.errors as f64 / n,
            self.distance as f64 / n,
            self.relative / n,
        )
    }
}

fn check_cap(width: u32, cap: u32) -> Result<(), MetricsError> {
    if width > cap || width > MAX_EXHAUSTIVE_WIDTH {
        return Err(MetricsError::TooWide {
            width,
            cap: cap.min(MAX_EXHAUSTIVE_WIDTH),
        });
    }
    Ok(())
}

/// Evaluates every one of the `2^(2n)` operand pairs.
pub fn evaluate_exhaustive(config: &AdderConfig) -> Result<ErrorReport, MetricsError> {
    evaluate_exhaustive_with(config, DEFAULT_EXHAUSTIVE_CAP, Exec::default())
}

pub fn evaluate_exhaustive_with(
    config: &AdderConfig,
    cap: u32,
    exec: Exec,
) -> Result<ErrorReport, MetricsError> {
    let n = config.width();
    check_cap(n, cap)?;
    let side = 1u64 << n;
    // one chunk per value of the first operand
    let tally = exec
        .map(side as usize, |a| {
            let mut t = Tally::default();
            for b in 0..side {
                t.record(config, a as u64, b);
            }
            t
        })
        .iter()
        .fold(Tally::default(), Tally::merge);
    let (er, med, mred) = tally.rates();
    Ok(ErrorReport {
        config: *config,
        er,
        med,
        mred,
        sample_count: tally.samples,
        run_count: 1,
        seed: 0,
        mode: Mode::Exhaustive,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` under master seed `seed`.
pub fn run_seed(seed: u64, run: u32) -> u64 {
    splitmix64(seed ^ splitmix64(run as u64))
}

/// Draws `len` operand pairs of chunk `chunk` of the stream seeded by `seed`.
fn chunk_pairs(seed: u64, chunk: u64, len: u64, mask: u64) -> impl Iterator<Item = (u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    (0..len).map(move |_| (rng.next_u64() & mask, rng.next_u64() & mask))
}

fn chunk_len(samples: u64, chunk: u64) -> u64 {
    (samples - chunk * CHUNK).min(CHUNK)
}

pub fn evaluate_monte_carlo(
    config: &AdderConfig,
    samples: u64,
    runs: u32,
    seed: u64,
) -> Result<ErrorReport, MetricsError> {
    evaluate_monte_carlo_with(config, samples, runs, seed, Exec::default())
}

/// Uniform random operand pairs over `[0, 2^n)`; ER/MED/MRED are computed
/// per run and averaged. Run `r` draws from the stream seeded by
/// [`run_seed`]`(seed, r)`, so results do not depend on scheduling.
pub fn evaluate_monte_carlo_with(
    config: &AdderConfig,
    samples: u64,
    runs: u32,
    seed: u64,
    exec: Exec,
) -> Result<ErrorReport, MetricsError> {
    if samples == 0 {
        return Err(MetricsError::NoSamples);
    }
    if runs == 0 {
        return Err(MetricsError::NoRuns);
    }
    let chunks = samples.div_ceil(CHUNK);
    let mask = config.operand_mask();
    let tallies = exec.map((runs as u64 * chunks) as usize, |job| {
        let run = (job as u64 / chunks) as u32;
        let chunk = job as u64 % chunks;
        let mut t = Tally::default();
        for (a, b) in chunk_pairs(run_seed(seed, run), chunk, chunk_len(samples, chunk), mask) {
            t.record(config, a, b);
        }
        t
    });

    let (mut er, mut med, mut mred) = (0.0, 0.0, 0.0);
    for run in tallies.chunks(chunks as usize) {
        let (e, m, r) = run.iter().fold(Tally::default(), Tally::merge).rates();
        er += e;
        med += m;
        mred += r;
    }
    let runs_f = runs as f64;
    Ok(ErrorReport {
        config: *config,
        er: er / runs_f,
        med: med / runs_f,
        mred: mred / runs_f,
        sample_count: samples,
        run_count: runs,
        seed,
        mode: Mode::MonteCarlo,
    })
}

/// How operand pairs are chosen for boundary statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// All `2^(2n)` pairs, subject to [`DEFAULT_EXHAUSTIVE_CAP`].
    Exhaustive,
    Random { samples: u64, seed: u64 },
}

/// How often the estimated carry at each inner block boundary disagrees
/// with the true ripple carry at that bit position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStats {
    pub config: AdderConfig,
    /// Boundary `i` sits between block `i` and block `i + 1`.
    pub per_boundary_mismatch: Vec<f64>,
    pub overall_mismatch: f64,
    /// Share of boundaries where the SU fires (both top pairs propagate).
    pub sel_active_fraction: f64,
    pub sample_count: u64,
}

#[derive(Clone, Debug)]
struct BoundaryTally {
    samples: u64,
    mismatches: Vec<u64>,
    sel: u64,
}

impl BoundaryTally {
    fn new(boundaries: usize) -> Self {
        BoundaryTally {
            samples: 0,
            mismatches: vec![0; boundaries],
            sel: 0,
        }
    }

    #[inline]
    fn record(&mut self, config: &AdderConfig, a: u64, b: u64) {
        self.samples += 1;
        let k = config.block_size();
        for (i, m) in self.mismatches.iter_mut().enumerate() {
            let blk = config.block_operands(a, b, i as u32);
            let s = estimate_signals(blk.a, blk.b, k, config.variant());
            self.sel += s.sel as u64;
            *m += (s.c_out != true_carry(a, b, (i as u32 + 1) * k)) as u64;
        }
    }

    fn merge(mut self, other: &BoundaryTally) -> Self {
        self.samples += other.samples;
        self.sel += other.sel;
        for (m, o) in self.mismatches.iter_mut().zip(&other.mismatches) {
            *m += o;
        }
        self
    }
}

pub fn boundary_mismatch_stats(
    config: &AdderConfig,
    sampling: Sampling,
) -> Result<BoundaryStats, MetricsError> {
    boundary_mismatch_stats_with(config, sampling, Exec::default())
}

pub fn boundary_mismatch_stats_with(
    config: &AdderConfig,
    sampling: Sampling,
    exec: Exec,
) -> Result<BoundaryStats, MetricsError> {
    if config.variant() == Variant::Exact {
        return Err(MetricsError::ExactVariant);
    }
    let boundaries = config.estimated_boundaries() as usize;
    let parts = match sampling {
        Sampling::Exhaustive => {
            let n = config.width();
            check_cap(n, DEFAULT_EXHAUSTIVE_CAP)?;
            let side = 1u64 << n;
            exec.map(side as usize, |a| {
                let mut t = BoundaryTally::new(boundaries);
                for b in 0..side {
                    t.record(config, a as u64, b);
                }
                t
            })
        }
        Sampling::Random { samples, seed } => {
            if samples == 0 {
                return Err(MetricsError::NoSamples);
            }
            let chunks = samples.div_ceil(CHUNK);
            let mask = config.operand_mask();
            exec.map(chunks as usize, |c| {
                let mut t = BoundaryTally::new(boundaries);
                let c = c as u64;
                for (a, b) in chunk_pairs(seed, c, chunk_len(samples, c), mask) {
                    t.record(config, a, b);
                }
                t
            })
        }
    };
    let total = parts
        .iter()
        .fold(BoundaryTally::new(boundaries), BoundaryTally::merge);

    let samples = total.samples as f64;
    let per_boundary_mismatch: Vec<f64> =
        total.mismatches.iter().map(|&m| m as f64 / samples).collect();
    let slots = samples * boundaries as f64;
    let (overall_mismatch, sel_active_fraction) = if boundaries == 0 {
        (0.0, 0.0)
    } else {
        (
            total.mismatches.iter().sum::<u64>() as f64 / slots,
            total.sel as f64 / slots,
        )
    };
    Ok(BoundaryStats {
        config: *config,
        per_boundary_mismatch,
        overall_mismatch,
        sel_active_fraction,
        sample_count: total.samples,
    })
}
