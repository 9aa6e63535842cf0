// SPDX-License-Identifier: Apache-2.0

//! Exhaustive invariant suite over every operand pair of a small width.

use serde::Serialize;
use thiserror::Error;

use crate::adder::{
    block_sum, ceu, estimate_signals, perl, su, true_carry, AdderConfig, Variant,
};
use crate::exec::Exec;
use crate::metrics::{
    boundary_mismatch_stats_with, evaluate_exhaustive_with, MetricsError, Sampling,
    DEFAULT_EXHAUSTIVE_CAP,
};

pub const MAX_VERIFY_WIDTH: u32 = DEFAULT_EXHAUSTIVE_CAP;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("verify width {0} outside 2..={MAX_VERIFY_WIDTH}")]
    Width(u32),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub config: Option<AdderConfig>,
    pub a: u64,
    pub b: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantOutcome {
    pub name: &'static str,
    /// Number of individual checks performed.
    pub checked: u64,
    pub counterexample: Option<Counterexample>,
}

impl InvariantOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelActivity {
    pub config: AdderConfig,
    pub sel_active_fraction: f64,
    pub overall_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub width: u32,
    pub outcomes: Vec<InvariantOutcome>,
    pub boundaries: Vec<SelActivity>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(InvariantOutcome::passed)
    }

    pub fn outcome(&self, name: &str) -> Option<&InvariantOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

/// All approximate configurations of width `n`, smallest block first.
pub fn approximate_configs(n: u32) -> Vec<AdderConfig> {
    let mut out = Vec::new();
    for variant in [Variant::Cesa, Variant::CesaPerl] {
        for k in 1..=n {
            if let Ok(c) = AdderConfig::new(n, k, variant) {
                out.push(c);
            }
        }
    }
    out
}

/// Checks `f` on every operand pair of every config. `f` returns the number
/// of checks it made and an optional violation message.
fn over_pairs<F>(
    name: &'static str,
    configs: &[AdderConfig],
    n: u32,
    exec: Exec,
    f: F,
) -> InvariantOutcome
where
    F: Fn(&AdderConfig, u64, u64) -> (u64, Option<String>) + Sync + Send,
{
    let side = 1u64 << n;
    let mut checked = 0;
    for config in configs {
        let parts = exec.map(side as usize, |a| {
            let a = a as u64;
            let mut count = 0;
            for b in 0..side {
                let (c, bad) = f(config, a, b);
                count += c;
                if let Some(detail) = bad {
                    return (
                        count,
                        Some(Counterexample {
                            config: Some(*config),
                            a,
                            b,
                            detail,
                        }),
                    );
                }
            }
            (count, None)
        });
        for (c, bad) in parts {
            checked += c;
            if bad.is_some() {
                return InvariantOutcome {
                    name,
                    checked,
                    counterexample: bad,
                };
            }
        }
    }
    InvariantOutcome {
        name,
        checked,
        counterexample: None,
    }
}

fn single(name: &'static str, checked: u64, failure: Option<String>) -> InvariantOutcome {
    InvariantOutcome {
        name,
        checked,
        counterexample: failure.map(|detail| Counterexample {
            config: None,
            a: 0,
            b: 0,
            detail,
        }),
    }
}

/// Top-two-pair combinations whose carry-out does not depend on the carry
/// coming from below, checked against 2-bit ripple addition; and whether
/// the CEU agrees on all of them.
pub fn locally_determined_combinations() -> (u32, bool) {
    let mut determined = 0;
    let mut ceu_agrees = true;
    for bits in 0u64..16 {
        // a = (a_hi, a_lo), b = (b_hi, b_lo)
        let a = ((bits >> 3) & 1) << 1 | ((bits >> 1) & 1);
        let b = ((bits >> 2) & 1) << 1 | (bits & 1);
        let (_, c0) = block_sum(a, b, false, 2).expect("2-bit operands");
        let (_, c1) = block_sum(a, b, true, 2).expect("2-bit operands");
        if c0 == c1 {
            determined += 1;
            let est = ceu(a & 2 != 0, b & 2 != 0, a & 1 != 0, b & 1 != 0);
            ceu_agrees &= est == c0;
        }
    }
    (determined, ceu_agrees)
}

#[inline]
fn pair_propagates(a: u64, b: u64, i: u32) -> bool {
    ((a ^ b) >> i) & 1 == 1
}

/// Runs the full invariant suite exhaustively at width `n` (2..=12).
pub fn verify_width(n: u32, exec: Exec) -> Result<VerifyReport, VerifyError> {
    if !(2..=MAX_VERIFY_WIDTH).contains(&n) {
        return Err(VerifyError::Width(n));
    }
    let configs = approximate_configs(n);
    let exact_n = AdderConfig::exact(n).expect("width checked");
    let mut outcomes = Vec::new();

    outcomes.push(over_pairs("commutativity", &configs, n, exec, |c, a, b| {
        let (x, y) = (c.cascade(a, b), c.cascade(b, a));
        (1, (x != y).then(|| format!("{x:?} != {y:?}")))
    }));

    let identity_side = 1u64 << n;
    let identity_bad = configs.iter().find_map(|c| {
        (0..identity_side).find_map(|x| {
            let (l, r) = (c.add_extended(x, 0), c.add_extended(0, x));
            (l != x as u128 || r != x as u128).then(|| Counterexample {
                config: Some(*c),
                a: x,
                b: 0,
                detail: format!("x + 0 = {l}, 0 + x = {r}"),
            })
        })
    });
    outcomes.push(InvariantOutcome {
        name: "additive-identity",
        checked: configs.len() as u64 * identity_side,
        counterexample: identity_bad,
    });

    let single_block: Vec<_> = configs
        .iter()
        .copied()
        .filter(|c| c.block_size() == n)
        .collect();
    outcomes.push(over_pairs("single-block-exactness", &single_block, n, exec, |c, a, b| {
        let (x, y) = (c.add_extended(a, b), exact_n.add_extended(a, b));
        (1, (x != y).then(|| format!("approx {x} != exact {y}")))
    }));

    outcomes.push(over_pairs("local-determination", &configs, n, exec, |c, a, b| {
        let k = c.block_size();
        let mut count = 0;
        for i in 0..c.estimated_boundaries() {
            let blk = c.block_operands(a, b, i);
            let s = estimate_signals(blk.a, blk.b, k, c.variant());
            if !s.sel {
                count += 1;
                let t = true_carry(a, b, (i + 1) * k);
                if s.c_out != t {
                    return (
                        count,
                        Some(format!("boundary {i}: sel = 0, estimate {} != true {t}", s.c_out)),
                    );
                }
            }
        }
        (count, None)
    }));

    outcomes.push(over_pairs("under-estimation", &configs, n, exec, |c, a, b| {
        let k = c.block_size();
        let bounds = c.cascade(a, b).boundaries;
        for i in 0..c.estimated_boundaries() {
            let est = (bounds >> i) & 1 == 1;
            if est && !true_carry(a, b, (i + 1) * k) {
                return (1, Some(format!("boundary {i}: estimated 1, true carry 0")));
            }
        }
        let (x, y) = (c.add_extended(a, b), a as u128 + b as u128);
        (1, (x > y).then(|| format!("approx {x} > exact {y}")))
    }));

    let perl_configs: Vec<_> = configs
        .iter()
        .copied()
        .filter(|c| c.variant() == Variant::CesaPerl)
        .collect();
    outcomes.push(over_pairs(
        "perl-mismatch-precondition",
        &perl_configs,
        n,
        exec,
        |c, a, b| {
            let k = c.block_size();
            let bounds = c.cascade(a, b).boundaries;
            let mut count = 0;
            for i in 0..c.estimated_boundaries() {
                let est = (bounds >> i) & 1 == 1;
                let top = (i + 1) * k;
                if est != true_carry(a, b, top) {
                    count += 1;
                    if !(1..=4).all(|d| pair_propagates(a, b, top - d)) {
                        return (
                            count,
                            Some(format!("boundary {i} mismatches without four propagate pairs")),
                        );
                    }
                }
            }
            (count, None)
        },
    ));

    let halves: Vec<_> = configs
        .iter()
        .copied()
        .filter(|c| c.block_count() == 2)
        .collect();
    outcomes.push(over_pairs("single-boundary-error-shape", &halves, n, exec, |c, a, b| {
        let diff = (a as u128 + b as u128).abs_diff(c.add_extended(a, b));
        let step = 1u128 << c.block_size();
        (1, (diff != 0 && diff != step).then(|| format!("error {diff} not in {{0, {step}}}")))
    }));

    let perl_ceu_bad = (0u8..16).find(|&i| {
        let (w, x, y, z) = (i & 8 != 0, i & 4 != 0, i & 2 != 0, i & 1 != 0);
        perl(w, x, y, z) != ceu(w, x, y, z)
    });
    outcomes.push(single(
        "perl-equals-ceu",
        16,
        perl_ceu_bad.map(|i| format!("inputs {i:04b} differ")),
    ));

    let (determined, agrees) = locally_determined_combinations();
    let sel_zero = (0u8..16)
        .filter(|&i| !su(i & 8 != 0, i & 4 != 0, i & 2 != 0, i & 1 != 0))
        .count();
    outcomes.push(single(
        "ceu-determines-12-of-16",
        16,
        (determined != 12 || !agrees || sel_zero != 12).then(|| {
            format!("{determined} combinations determined, ceu agrees: {agrees}, su = 0 on {sel_zero}")
        }),
    ));

    let mut boundaries = Vec::new();
    let mut bound_checks = 0;
    let mut bound_bad = None;
    for c in &configs {
        let stats = boundary_mismatch_stats_with(c, Sampling::Exhaustive, exec)?;
        let limit = match c.variant() {
            Variant::CesaPerl => 1.0 / 16.0,
            _ => 0.25,
        };
        bound_checks += 1;
        if bound_bad.is_none() && stats.overall_mismatch > limit {
            bound_bad = Some(format!(
                "{c}: boundary mismatch {} above {limit}",
                stats.overall_mismatch
            ));
        }
        boundaries.push(SelActivity {
            config: *c,
            sel_active_fraction: stats.sel_active_fraction,
            overall_mismatch: stats.overall_mismatch,
        });
    }
    outcomes.push(single("boundary-mismatch-bounds", bound_checks, bound_bad));

    let mut ers = Vec::new();
    for c in &configs {
        ers.push((*c, evaluate_exhaustive_with(c, MAX_VERIFY_WIDTH, exec)?.er));
    }
    let mut perl_checks = 0;
    let mut perl_bad = None;
    for &(c, er) in ers.iter().filter(|(c, _)| c.variant() == Variant::CesaPerl) {
        let cesa = ers
            .iter()
            .find(|(o, _)| o.variant() == Variant::Cesa && o.block_size() == c.block_size());
        if let Some(&(_, cesa_er)) = cesa {
            perl_checks += 1;
            if er > cesa_er && perl_bad.is_none() {
                perl_bad = Some(format!("{c}: er {er} above cesa {cesa_er}"));
            }
        }
    }
    outcomes.push(single("perl-not-worse", perl_checks, perl_bad));

    let mut mono_checks = 0;
    let mut mono_bad = None;
    for variant in [Variant::Cesa, Variant::CesaPerl] {
        let series: Vec<_> = ers.iter().filter(|(c, _)| c.variant() == variant).collect();
        for w in series.windows(2) {
            mono_checks += 1;
            if w[1].1 > w[0].1 && mono_bad.is_none() {
                mono_bad = Some(format!(
                    "{} er {} above {} er {}",
                    w[1].0, w[1].1, w[0].0, w[0].1
                ));
            }
        }
    }
    outcomes.push(single("er-monotone-in-block-size", mono_checks, mono_bad));

    let exact = evaluate_exhaustive_with(&exact_n, MAX_VERIFY_WIDTH, exec)?;
    outcomes.push(single(
        "exact-zero-distance",
        exact.sample_count,
        (exact.med != 0.0 || exact.er != 0.0).then(|| format!("exact med {}", exact.med)),
    ));

    Ok(VerifyReport {
        width: n,
        outcomes,
        boundaries,
    })
}
