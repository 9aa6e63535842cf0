// SPDX-License-Identifier: Apache-2.0

//! Software models of the carry-estimating simultaneous adder (CESA) and
//! CESA with propagating error rectification logic (CESA-PERL).
//!
//! - [`adder`]: bit-exact adders and the exact ripple-carry oracle.
//! - [`metrics`]: ER / MED / MRED and per-boundary carry mismatch rates.
//! - [`cost`]: unit-gate delay and area model.
//! - [`apps`]: Gaussian smoothing with PSNR/SSIM, fixed-point K-means.
//! - [`sweep`], [`verify`]: configuration sweeps and the invariant suite.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is on
//! (default); see [`Exec`].

pub mod adder;
pub mod apps;
pub mod cost;
pub mod exec;
pub mod metrics;
pub mod sweep;
pub mod verify;

pub use adder::{
    add_approx, add_exact, block_sum, ceu, estimate_block_carry, perl, su, AddResult,
    AdderConfig, AdderError, BlockOperands, CarrySignals, Variant, Word,
};
pub use cost::{area_estimate, delay_estimate, CostEstimate};
pub use exec::Exec;
pub use metrics::{
    boundary_mismatch_stats, error_distance, evaluate_exhaustive, evaluate_monte_carlo,
    relative_error_distance, BoundaryStats, ErrorReport, Mode, Sampling,
};
