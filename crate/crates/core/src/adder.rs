// SPDX-License-Identifier: Apache-2.0

//! Bit-exact model of the carry-estimating simultaneous adder (CESA), its
//! variant with propagating error rectification logic (CESA-PERL), and the
//! exact ripple-carry adder used as the oracle.
//!
//! Operands are split little-endian into `n / k` blocks of `k` bits. Every
//! block is an exact `k`-bit ripple adder. The carry into block `i > 0` is
//! not the ripple carry of block `i - 1`: it is estimated from the top bit
//! pairs of block `i - 1` alone, so all blocks can be summed concurrently.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Widest operand the model supports; any operand fits in a `u64`.
pub const MAX_WIDTH: u32 = 64;
/// Smallest block the CEU can estimate from (two bit pairs).
pub const CESA_MIN_BLOCK: u32 = 2;
/// Smallest block CEU + PERL can estimate from (four bit pairs).
pub const PERL_MIN_BLOCK: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdderError {
    #[error("width {0} outside supported range 2..={MAX_WIDTH}")]
    WidthOutOfRange(u32),
    #[error("block size {block} does not divide width {width}")]
    BlockDoesNotDivide { width: u32, block: u32 },
    #[error("block size below minimum {minimum} ({variant} with k = {block})")]
    BlockBelowMinimum {
        variant: Variant,
        block: u32,
        minimum: u32,
    },
    #[error("operand {value} does not fit in {width} bits")]
    OperandOutOfRange { value: u64, width: u32 },
    #[error("operand width {found} does not match adder width {expected}")]
    WidthMismatch { expected: u32, found: u32 },
    #[error("the exact adder has no carry estimator")]
    NoEstimator,
    #[error("unknown variant `{0}` (expected exact, cesa or cesa-perl)")]
    UnknownVariant(String),
    #[error("malformed config `{0}` (expected width:block:variant)")]
    MalformedConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Whole-width ripple carry.
    Exact,
    /// Carry estimate unit only.
    Cesa,
    /// Carry estimate unit with PERL rectification selected by the SU.
    CesaPerl,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Exact, Variant::Cesa, Variant::CesaPerl];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Cesa => "cesa",
            Variant::CesaPerl => "cesa-perl",
        }
    }

    /// Smallest legal block size, `None` for the exact adder.
    pub fn min_block(self) -> Option<u32> {
        match self {
            Variant::Exact => None,
            Variant::Cesa => Some(CESA_MIN_BLOCK),
            Variant::CesaPerl => Some(PERL_MIN_BLOCK),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = AdderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "exact" | "rca" | "ripple" => Ok(Variant::Exact),
            "cesa" => Ok(Variant::Cesa),
            "cesa-perl" | "cesaperl" | "perl" => Ok(Variant::CesaPerl),
            _ => Err(AdderError::UnknownVariant(s.to_string())),
        }
    }
}

/// Bit width, block size and variant of an adder. Always valid once built.
///
/// The exact variant ignores the block size for arithmetic; it is kept only
/// to decide where [`AddResult::boundary_carries`] are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct AdderConfig {
    width: u32,
    block_size: u32,
    variant: Variant,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    width: u32,
    block_size: u32,
    variant: Variant,
}

impl TryFrom<RawConfig> for AdderConfig {
    type Error = AdderError;

    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        AdderConfig::new(raw.width, raw.block_size, raw.variant)
    }
}

impl From<AdderConfig> for RawConfig {
    fn from(c: AdderConfig) -> Self {
        RawConfig {
            width: c.width,
            block_size: c.block_size,
            variant: c.variant,
        }
    }
}

impl AdderConfig {
    pub fn new(width: u32, block_size: u32, variant: Variant) -> Result<Self, AdderError> {
        if !(2..=MAX_WIDTH).contains(&width) {
            return Err(AdderError::WidthOutOfRange(width));
        }
        if let Some(minimum) = variant.min_block() {
            if block_size < minimum {
                return Err(AdderError::BlockBelowMinimum {
                    variant,
                    block: block_size,
                    minimum,
                });
            }
        }
        if block_size == 0 || block_size > width || !width.is_multiple_of(block_size) {
            return Err(AdderError::BlockDoesNotDivide {
                width,
                block: block_size,
            });
        }
        Ok(AdderConfig {
            width,
            block_size,
            variant,
        })
    }

    /// Whole-width exact adder with a single boundary at the carry-out.
    pub fn exact(width: u32) -> Result<Self, AdderError> {
        Self::new(width, width, Variant::Exact)
    }

    pub fn cesa(width: u32, block_size: u32) -> Result<Self, AdderError> {
        Self::new(width, block_size, Variant::Cesa)
    }

    pub fn cesa_perl(width: u32, block_size: u32) -> Result<Self, AdderError> {
        Self::new(width, block_size, Variant::CesaPerl)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Number of summation blocks, `n / k`.
    pub fn block_count(&self) -> u32 {
        self.width / self.block_size
    }

    /// Number of estimated inter-block carries, `n / k - 1`.
    pub fn estimated_boundaries(&self) -> u32 {
        match self.variant {
            Variant::Exact => 0,
            _ => self.block_count() - 1,
        }
    }

    /// Mask of the `n` operand bits.
    pub fn operand_mask(&self) -> u64 {
        low_mask(self.width)
    }

    /// Same adder with another variant, if that variant accepts the block size.
    pub fn with_variant(&self, variant: Variant) -> Result<Self, AdderError> {
        Self::new(self.width, self.block_size, variant)
    }

    /// Operands of block `index` (0 = least significant).
    pub fn block_operands(&self, a: u64, b: u64, index: u32) -> BlockOperands {
        let k = self.block_size;
        let shift = index * k;
        let mask = low_mask(k);
        BlockOperands {
            a: (a >> shift) & mask,
            b: (b >> shift) & mask,
            block_index: index,
        }
    }

    /// `(n+1)`-bit result of adding two in-range operands: sum plus
    /// carry-out shifted to bit `n`. Allocation-free path for sweeps.
    #[inline]
    pub fn add_extended(&self, a: u64, b: u64) -> u128 {
        let c = self.cascade(a, b);
        c.sum as u128 | ((c.carry_out as u128) << self.width)
    }

    /// Raw block cascade. `boundaries` bit `i` holds the carry leaving block `i`.
    #[inline]
    pub(crate) fn cascade(&self, a: u64, b: u64) -> Cascade {
        debug_assert!(a <= self.operand_mask() && b <= self.operand_mask());
        let n = self.width;
        let k = self.block_size;
        let blocks = n / k;
        if self.variant == Variant::Exact {
            let full = a as u128 + b as u128;
            let mut boundaries = 0u64;
            for i in 0..blocks {
                boundaries |= (true_carry(a, b, (i + 1) * k) as u64) << i;
            }
            return Cascade {
                sum: full as u64 & low_mask(n),
                carry_out: (full >> n) & 1 == 1,
                boundaries,
            };
        }

        let mask = low_mask(k);
        let mut carry_in = false;
        let mut sum = 0u64;
        let mut boundaries = 0u64;
        let mut carry_out = false;
        for i in 0..blocks {
            let shift = i * k;
            let x = (a >> shift) & mask;
            let y = (b >> shift) & mask;
            let (s, ripple) = ripple_block(x, y, carry_in, k);
            sum |= s << shift;
            if i + 1 < blocks {
                let estimate = estimate_signals(x, y, k, self.variant).c_out;
                boundaries |= (estimate as u64) << i;
                carry_in = estimate;
            } else {
                carry_out = ripple;
                boundaries |= (ripple as u64) << i;
            }
        }
        Cascade {
            sum,
            carry_out,
            boundaries,
        }
    }
}

impl fmt::Display for AdderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.width, self.block_size, self.variant)
    }
}

/// Parses the compact `width:block:variant` form, e.g. `32:8:cesa-perl`.
impl FromStr for AdderConfig {
    type Err = AdderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || AdderError::MalformedConfig(s.to_string());
        let mut parts = s.trim().split(':');
        let (Some(w), Some(k), Some(v), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(malformed());
        };
        let width = w.trim().parse().map_err(|_| malformed())?;
        let block = k.trim().parse().map_err(|_| malformed())?;
        AdderConfig::new(width, block, v.trim().parse()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Cascade {
    pub sum: u64,
    pub carry_out: bool,
    pub boundaries: u64,
}

/// An `n`-bit unsigned operand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    value: u64,
    width: u32,
}

impl Word {
    pub fn new(value: u64, width: u32) -> Result<Self, AdderError> {
        if !(1..=MAX_WIDTH).contains(&width) {
            return Err(AdderError::WidthOutOfRange(width));
        }
        if value > low_mask(width) {
            return Err(AdderError::OperandOutOfRange { value, width });
        }
        Ok(Word { value, width })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }
}

/// One `k`-bit slice of each operand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockOperands {
    pub a: u64,
    pub b: u64,
    pub block_index: u32,
}

/// Carry estimation signals of one block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CarrySignals {
    pub c_ceu: bool,
    /// `None` for CESA, which has no PERL.
    pub c_perl: Option<bool>,
    /// SU output. Computed for both variants, only CESA-PERL acts on it.
    pub sel: bool,
    pub c_out: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddResult {
    pub sum: Word,
    pub carry_out: bool,
    /// Carry leaving each block: the estimates at the `n / k - 1` inner
    /// boundaries followed by the final carry-out.
    pub boundary_carries: Vec<bool>,
    /// `sum + carry_out * 2^n`.
    pub extended_value: u128,
}

impl AddResult {
    fn from_cascade(c: Cascade, config: &AdderConfig) -> Self {
        let n = config.width;
        AddResult {
            sum: Word {
                value: c.sum,
                width: n,
            },
            carry_out: c.carry_out,
            boundary_carries: (0..config.block_count())
                .map(|i| (c.boundaries >> i) & 1 == 1)
                .collect(),
            extended_value: c.sum as u128 | ((c.carry_out as u128) << n),
        }
    }
}

#[inline]
pub(crate) fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

#[inline]
fn bit(x: u64, i: u32) -> bool {
    (x >> i) & 1 == 1
}

/// Carry estimate unit: `a_hi.b_hi + a_lo.b_lo.(a_hi + b_hi)`.
#[inline]
pub fn ceu(a_hi: bool, b_hi: bool, a_lo: bool, b_lo: bool) -> bool {
    (a_hi & b_hi) | (a_lo & b_lo & (a_hi | b_hi))
}

/// Propagating error rectification logic. Same gates as the CEU, fed with
/// bit pairs `k-3` and `k-4`.
#[inline]
pub fn perl(a_hi: bool, b_hi: bool, a_lo: bool, b_lo: bool) -> bool {
    (a_hi & b_hi) | (a_lo & b_lo & (a_hi | b_hi))
}

/// Selection unit: set when both top pairs propagate, i.e. the CEU cannot
/// decide the carry locally.
#[inline]
pub fn su(a_hi: bool, b_hi: bool, a_lo: bool, b_lo: bool) -> bool {
    (a_hi ^ b_hi) & (a_lo ^ b_lo)
}

#[inline]
pub(crate) fn estimate_signals(x: u64, y: u64, k: u32, variant: Variant) -> CarrySignals {
    let (ah, bh, al, bl) = (bit(x, k - 1), bit(y, k - 1), bit(x, k - 2), bit(y, k - 2));
    let c_ceu = ceu(ah, bh, al, bl);
    let sel = su(ah, bh, al, bl);
    match variant {
        Variant::CesaPerl => {
            let c_perl = perl(bit(x, k - 3), bit(y, k - 3), bit(x, k - 4), bit(y, k - 4));
            CarrySignals {
                c_ceu,
                c_perl: Some(c_perl),
                sel,
                c_out: if sel { c_perl } else { c_ceu },
            }
        }
        _ => CarrySignals {
            c_ceu,
            c_perl: None,
            sel,
            c_out: c_ceu,
        },
    }
}

/// Estimated carry out of one block. Depends only on the block's own bits.
pub fn estimate_block_carry(
    block: BlockOperands,
    config: &AdderConfig,
) -> Result<CarrySignals, AdderError> {
    if config.variant == Variant::Exact {
        return Err(AdderError::NoEstimator);
    }
    let k = config.block_size;
    for v in [block.a, block.b] {
        if v > low_mask(k) {
            return Err(AdderError::OperandOutOfRange { value: v, width: k });
        }
    }
    Ok(estimate_signals(block.a, block.b, k, config.variant))
}

#[inline]
fn ripple_block(a: u64, b: u64, carry_in: bool, k: u32) -> (u64, bool) {
    let t = a as u128 + b as u128 + carry_in as u128;
    (t as u64 & low_mask(k), (t >> k) & 1 == 1)
}

/// Exact `k`-bit ripple addition of one block: `(sum mod 2^k, carry out)`.
pub fn block_sum(a: u64, b: u64, carry_in: bool, k: u32) -> Result<(u64, bool), AdderError> {
    if !(1..=MAX_WIDTH).contains(&k) {
        return Err(AdderError::WidthOutOfRange(k));
    }
    for v in [a, b] {
        if v > low_mask(k) {
            return Err(AdderError::OperandOutOfRange { value: v, width: k });
        }
    }
    Ok(ripple_block(a, b, carry_in, k))
}

/// True ripple carry into bit `position` (carry out of bits `0..position`).
#[inline]
pub fn true_carry(a: u64, b: u64, position: u32) -> bool {
    let m = low_mask(position);
    ((a & m) as u128 + (b & m) as u128) >> position & 1 == 1
}

fn check_operands(a: &Word, b: &Word, width: u32) -> Result<(), AdderError> {
    for w in [a, b] {
        if w.width != width {
            return Err(AdderError::WidthMismatch {
                expected: width,
                found: w.width,
            });
        }
    }
    Ok(())
}

/// Adds two words with the configured adder.
///
/// Block 0 gets carry-in 0, block `i > 0` gets the estimated carry of block
/// `i - 1`. The carry-out of the last block is its own ripple carry, so a
/// single-block adder is exact.
pub fn add_approx(a: Word, b: Word, config: &AdderConfig) -> Result<AddResult, AdderError> {
    check_operands(&a, &b, config.width)?;
    Ok(AddResult::from_cascade(
        config.cascade(a.value, b.value),
        config,
    ))
}

/// Whole-width ripple-carry addition.
pub fn add_exact(a: Word, b: Word, width: u32) -> Result<AddResult, AdderError> {
    let config = AdderConfig::exact(width)?;
    add_approx(a, b, &config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w8(v: u64) -> Word {
        Word::new(v, 8).unwrap()
    }

    fn bits4(i: u8) -> (bool, bool, bool, bool) {
        (i & 8 != 0, i & 4 != 0, i & 2 != 0, i & 1 != 0)
    }

    #[test]
    fn ceu_cases() {
        assert!(ceu(true, true, false, false));
        assert!(!ceu(false, false, true, true));
        assert!(ceu(true, false, true, true));
        assert!(!ceu(false, true, false, true));
    }

    #[test]
    fn perl_matches_ceu_everywhere() {
        assert!(perl(true, false, true, true));
        assert!(!perl(false, false, false, false));
        for i in 0..16 {
            let (a, b, c, d) = bits4(i);
            assert_eq!(perl(a, b, c, d), ceu(a, b, c, d));
        }
    }

    #[test]
    fn su_cases() {
        assert!(su(true, false, false, true));
        assert!(!su(true, true, false, true));
        assert!(!su(false, false, false, false));
    }

    #[test]
    fn estimate_15_plus_1() {
        let block = BlockOperands {
            a: 0b1111,
            b: 0b0001,
            block_index: 0,
        };
        let cesa = AdderConfig::cesa(8, 4).unwrap();
        let s = estimate_block_carry(block, &cesa).unwrap();
        assert!(s.sel);
        assert!(!s.c_ceu);
        assert_eq!(s.c_perl, None);
        assert!(!s.c_out);

        let perl_cfg = AdderConfig::cesa_perl(8, 4).unwrap();
        let s = estimate_block_carry(block, &perl_cfg).unwrap();
        assert_eq!(s.c_perl, Some(true));
        assert!(s.c_out);
        assert!(true_carry(0b1111, 0b0001, 4));

        let zero = BlockOperands {
            a: 0,
            b: 0,
            block_index: 0,
        };
        assert!(!estimate_block_carry(zero, &cesa).unwrap().c_out);
        assert!(!estimate_block_carry(zero, &perl_cfg).unwrap().c_out);
    }

    #[test]
    fn estimate_rejects_exact_and_wide_blocks() {
        let exact = AdderConfig::exact(8).unwrap();
        let block = BlockOperands {
            a: 1,
            b: 1,
            block_index: 0,
        };
        assert_eq!(
            estimate_block_carry(block, &exact),
            Err(AdderError::NoEstimator)
        );
        let cesa = AdderConfig::cesa(8, 4).unwrap();
        let wide = BlockOperands {
            a: 16,
            b: 0,
            block_index: 0,
        };
        assert!(estimate_block_carry(wide, &cesa).is_err());
    }

    #[test]
    fn block_sum_cases() {
        assert_eq!(block_sum(0b1111, 0b0001, false, 4), Ok((0, true)));
        assert_eq!(block_sum(0, 0, true, 4), Ok((1, false)));
        assert_eq!(block_sum(0b1010, 0b0101, false, 4), Ok((0b1111, false)));
        assert!(block_sum(16, 0, false, 4).is_err());
        assert_eq!(
            block_sum(u64::MAX, 1, false, 64),
            Ok((0, true))
        );
    }

    #[test]
    fn config_validation() {
        assert!(AdderConfig::cesa(8, 1).is_err());
        assert!(AdderConfig::cesa(8, 2).is_ok());
        assert!(AdderConfig::cesa(8, 3).is_err());
        assert!(matches!(
            AdderConfig::cesa_perl(8, 2),
            Err(AdderError::BlockBelowMinimum { minimum: 4, .. })
        ));
        assert!(AdderConfig::cesa_perl(12, 6).is_ok());
        assert!(AdderConfig::new(65, 5, Variant::Cesa).is_err());
        assert!(AdderConfig::new(1, 1, Variant::Exact).is_err());
        assert!(AdderConfig::new(8, 3, Variant::Exact).is_err());
        assert!(AdderConfig::new(64, 64, Variant::CesaPerl).is_ok());
        let msg = AdderConfig::cesa_perl(8, 2).unwrap_err().to_string();
        assert!(msg.contains("block size below minimum 4"), "{msg}");
    }

    #[test]
    fn config_parse_and_display() {
        let c: AdderConfig = "32:8:cesa-perl".parse().unwrap();
        assert_eq!(c, AdderConfig::cesa_perl(32, 8).unwrap());
        assert_eq!(c.to_string(), "32:8:cesa-perl");
        assert!("32:8".parse::<AdderConfig>().is_err());
        assert!("32:8:foo".parse::<AdderConfig>().is_err());
        assert!("32:3:cesa".parse::<AdderConfig>().is_err());
    }

    #[test]
    fn config_serde_validates() {
        let c = AdderConfig::cesa(16, 4).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"width":16,"block_size":4,"variant":"cesa"}"#);
        assert_eq!(serde_json::from_str::<AdderConfig>(&json).unwrap(), c);
        assert!(serde_json::from_str::<AdderConfig>(
            r#"{"width":16,"block_size":2,"variant":"cesa-perl"}"#
        )
        .is_err());
    }

    #[test]
    fn word_range() {
        assert!(Word::new(255, 8).is_ok());
        assert!(Word::new(256, 8).is_err());
        assert!(Word::new(u64::MAX, 64).is_ok());
    }

    #[test]
    fn add_15_plus_1() {
        let cesa = AdderConfig::cesa(8, 4).unwrap();
        let r = add_approx(w8(15), w8(1), &cesa).unwrap();
        assert_eq!(r.extended_value, 0);
        assert_eq!(r.sum.value(), 0);
        assert!(!r.carry_out);
        assert_eq!(r.boundary_carries, vec![false, false]);

        let perl_cfg = AdderConfig::cesa_perl(8, 4).unwrap();
        let r = add_approx(w8(15), w8(1), &perl_cfg).unwrap();
        assert_eq!(r.extended_value, 16);
        assert_eq!(r.sum.value(), 0b0001_0000);
    }

    #[test]
    fn add_exact_cases() {
        let r = add_exact(w8(255), w8(255), 8).unwrap();
        assert_eq!(r.extended_value, 510);
        assert!(r.carry_out);
        assert_eq!(r.boundary_carries, vec![true]);
        assert_eq!(add_exact(w8(15), w8(1), 8).unwrap().extended_value, 16);

        let blocked = AdderConfig::new(8, 4, Variant::Exact).unwrap();
        let r = add_approx(w8(15), w8(1), &blocked).unwrap();
        assert_eq!(r.boundary_carries, vec![true, false]);
        assert_eq!(r.extended_value, 16);
    }

    #[test]
    fn width_mismatch_rejected() {
        let cesa = AdderConfig::cesa(16, 4).unwrap();
        assert_eq!(
            add_approx(w8(1), w8(1), &cesa),
            Err(AdderError::WidthMismatch {
                expected: 16,
                found: 8
            })
        );
    }

    #[test]
    fn zero_plus_zero() {
        for c in ["8:2:cesa", "8:4:cesa-perl", "8:8:exact", "64:4:cesa-perl"] {
            let cfg: AdderConfig = c.parse().unwrap();
            let z = Word::new(0, cfg.width()).unwrap();
            let r = add_approx(z, z, &cfg).unwrap();
            assert_eq!(r.extended_value, 0);
            assert!(!r.carry_out);
        }
    }

    #[test]
    fn full_width_64() {
        let cfg = AdderConfig::cesa(64, 64).unwrap();
        assert_eq!(cfg.add_extended(u64::MAX, u64::MAX), 2 * u64::MAX as u128);
        let cfg = AdderConfig::exact(64).unwrap();
        assert_eq!(cfg.add_extended(u64::MAX, 1), 1u128 << 64);
    }
}
