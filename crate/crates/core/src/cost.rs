// SPDX-License-Identifier: Apache-2.0

//! Unit-gate delay and area model. Every 2-input gate (XOR included) costs
//! one delay level and one area unit.

use serde::{Deserialize, Serialize};

use crate::adder::{AdderConfig, Variant};

/// Levels through one full-adder carry stage.
pub const FULL_ADDER_CARRY_LEVELS: u32 = 2;
pub const FULL_ADDER_GATES: u32 = 5;
/// CEU and PERL evaluate in two levels.
pub const CEU_LEVELS: u32 = 2;
/// SU/CEU/PERL in parallel, then the selection stage.
pub const CEU_PERL_SELECT_LEVELS: u32 = 4;
pub const CEU_GATES: u32 = 4;
pub const PERL_GATES: u32 = 4;
pub const SU_GATES: u32 = 3;
pub const MUX_GATES: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub critical_path_levels: u32,
    pub gate_count: u32,
    pub config: AdderConfig,
}

fn ripple_levels(bits: u32) -> u32 {
    FULL_ADDER_CARRY_LEVELS * bits
}

fn estimator_gates(variant: Variant) -> u32 {
    match variant {
        Variant::Exact => 0,
        Variant::Cesa => CEU_GATES,
        Variant::CesaPerl => CEU_GATES + PERL_GATES + SU_GATES + MUX_GATES,
    }
}

/// Critical path: the carry estimate of the previous block followed by a
/// `k`-bit ripple. A single-block adder has no estimate on its path.
fn critical_path(config: &AdderConfig) -> u32 {
    let n = config.width();
    let k = config.block_size();
    match config.variant() {
        Variant::Exact => ripple_levels(n),
        _ if k == n => ripple_levels(n),
        Variant::Cesa => CEU_LEVELS + ripple_levels(k),
        Variant::CesaPerl => CEU_PERL_SELECT_LEVELS + ripple_levels(k),
    }
}

fn gate_count(config: &AdderConfig) -> u32 {
    FULL_ADDER_GATES * config.width()
        + config.estimated_boundaries() * estimator_gates(config.variant())
}

pub fn delay_estimate(config: &AdderConfig) -> CostEstimate {
    estimate(config)
}

pub fn area_estimate(config: &AdderConfig) -> CostEstimate {
    estimate(config)
}

/// Delay and area in one record.
pub fn estimate(config: &AdderConfig) -> CostEstimate {
    CostEstimate {
        critical_path_levels: critical_path(config),
        gate_count: gate_count(config),
        config: *config,
    }
}

/// Fractional critical-path reduction against an `n`-bit ripple-carry adder.
pub fn delay_reduction_vs_ripple(config: &AdderConfig) -> f64 {
    let ripple = ripple_levels(config.width()) as f64;
    1.0 - critical_path(config) as f64 / ripple
}
