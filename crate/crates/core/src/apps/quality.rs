// SPDX-License-Identifier: Apache-2.0

//! PSNR and SSIM of a test image against a reference.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::image::GrayImage;
use super::AppError;
use crate::adder::AdderConfig;
use crate::exec::Exec;

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Peak signal-to-noise ratio in dB. Identical images have no noise and
/// map to `Infinite`, serialised as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Psnr::Infinite
    }
}

impl PartialOrd for Psnr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.db().partial_cmp(&other.db())
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.3} dB"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(v) => s.serialize_f64(*v),
            Psnr::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Psnr::Finite(v)),
            Repr::Text(t) if t == "inf" => Ok(Psnr::Infinite),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad psnr `{t}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub psnr: Psnr,
    pub ssim: f64,
    pub config: AdderConfig,
    pub seed: u64,
}

pub fn mse(reference: &GrayImage, test: &GrayImage) -> Result<f64, AppError> {
    reference.same_dims(test)?;
    let sq: u64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(&a, &b)| (a as i64 - b as i64).pow(2) as u64)
        .sum();
    Ok(sq as f64 / reference.pixels().len() as f64)
}

/// `10 log10(255^2 / MSE)`.
pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<Psnr, AppError> {
    let m = mse(reference, test)?;
    if m == 0.0 {
        return Ok(Psnr::Infinite);
    }
    Ok(Psnr::Finite(10.0 * (PEAK * PEAK / m).log10()))
}

pub fn ssim(reference: &GrayImage, test: &GrayImage) -> Result<f64, AppError> {
    ssim_with(reference, test, Exec::default())
}

/// Mean SSIM over every 8x8 window (stride 1) with uniform weights.
pub fn ssim_with(reference: &GrayImage, test: &GrayImage, exec: Exec) -> Result<f64, AppError> {
    reference.same_dims(test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(AppError::TooSmall {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let count = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let rows = exec.map(h - SSIM_WINDOW + 1, |y0| {
        let mut row_sum = 0.0;
        for x0 in 0..=w - SSIM_WINDOW {
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0u64, 0u64, 0u64, 0u64, 0u64);
            for y in y0..y0 + SSIM_WINDOW {
                for x in x0..x0 + SSIM_WINDOW {
                    let a = reference.get(x, y) as u64;
                    let b = test.get(x, y) as u64;
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            let mx = sx as f64 / count;
            let my = sy as f64 / count;
            let vx = sxx as f64 / count - mx * mx;
            let vy = syy as f64 / count - my * my;
            let cov = sxy as f64 / count - mx * my;
            row_sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
        row_sum
    });
    let windows = ((w - SSIM_WINDOW + 1) * (h - SSIM_WINDOW + 1)) as f64;
    Ok(rows.iter().sum::<f64>() / windows)
}
