// SPDX-License-Identifier: Apache-2.0

//! End-application benchmarks: Gaussian smoothing scored by PSNR/SSIM and
//! fixed-point K-means, each with the additions routed through an adder.

pub mod image;
pub mod kmeans;
pub mod pgm;
pub mod quality;
pub mod smooth;

use thiserror::Error;

use crate::adder::AdderError;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Adder(#[from] AdderError),
    #[error(transparent)]
    Pgm(#[from] pgm::PgmError),
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("pixel buffer holds {found} values, expected {expected}")]
    PixelCount { expected: usize, found: usize },
    #[error("accumulator needs {needed} bits but the adder is {width} bits wide")]
    AccumulatorOverflow { needed: u32, width: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("{clusters} clusters requested for {points} points")]
    TooManyClusters { clusters: usize, points: usize },
}

/// Bits needed to hold `value`.
pub(crate) fn bits_for(value: u128) -> u32 {
    128 - value.leading_zeros()
}
