// SPDX-License-Identifier: Apache-2.0

//! Integer Gaussian smoothing. Multiplications and the final division are
//! exact; only the accumulation of partial products goes through the adder.

use super::image::GrayImage;
use super::{bits_for, AppError};
use crate::adder::{low_mask, AdderConfig};
use crate::exec::Exec;

pub const DEFAULT_KERNEL_SIZE: usize = 5;
pub const DEFAULT_KERNEL_SIGMA: f64 = 1.0;
pub const DEFAULT_SCALE_BITS: u32 = 8;

/// Square integer kernel, row-major. `weights / 2^shift` approximates the
/// unit-mass Gaussian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntKernel {
    size: usize,
    weights: Vec<u32>,
    shift: u32,
}

impl IntKernel {
    /// Custom kernel; `size` must be odd and the weights non-zero in total.
    pub fn new(size: usize, weights: Vec<u32>, shift: u32) -> Result<Self, AppError> {
        if size.is_multiple_of(2) || weights.len() != size * size {
            return Err(AppError::InvalidParam(format!(
                "kernel needs an odd size and size^2 weights, got size {size} with {} weights",
                weights.len()
            )));
        }
        if weights.iter().all(|&w| w == 0) {
            return Err(AppError::InvalidParam("kernel weights sum to zero".into()));
        }
        Ok(IntKernel {
            size,
            weights,
            shift,
        })
    }

    /// Single centre tap of weight 1.
    pub fn identity(size: usize) -> Result<Self, AppError> {
        let mut weights = vec![0; size * size];
        if size % 2 == 1 {
            weights[size * size / 2] = 1;
        }
        Self::new(size, weights, 0)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    pub fn weight(&self, row: usize, col: usize) -> u32 {
        self.weights[row * self.size + col]
    }

    /// Divisor applied after accumulation.
    pub fn sum(&self) -> u64 {
        self.weights.iter().map(|&w| w as u64).sum()
    }

    /// Largest accumulator value over 8-bit pixels.
    pub fn max_accumulator(&self) -> u64 {
        255 * self.sum()
    }
}

/// Samples a `size x size` Gaussian, normalises it to unit mass, scales by
/// `2^scale_bits` and rounds each tap to the nearest integer.
pub fn gaussian_kernel_int(size: usize, sigma: f64, scale_bits: u32) -> Result<IntKernel, AppError> {
    if size.is_multiple_of(2) || !(sigma > 0.0 && sigma.is_finite()) || !(1..=24).contains(&scale_bits) {
        return Err(AppError::InvalidParam(format!(
            "gaussian kernel needs odd size, sigma > 0 and 1 <= scale_bits <= 24 \
             (size {size}, sigma {sigma}, scale_bits {scale_bits})"
        )));
    }
    let half = (size / 2) as f64;
    let raw: Vec<f64> = (0..size * size)
        .map(|i| {
            let dy = (i / size) as f64 - half;
            let dx = (i % size) as f64 - half;
            (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mass: f64 = raw.iter().sum();
    let scale = (1u64 << scale_bits) as f64;
    let weights = raw.iter().map(|v| (v / mass * scale).round() as u32).collect();
    IntKernel::new(size, weights, scale_bits)
}

/// Fails when `255 * kernel sum` does not fit in the adder width.
pub fn check_accumulator(kernel: &IntKernel, config: &AdderConfig) -> Result<(), AppError> {
    let needed = bits_for(kernel.max_accumulator() as u128);
    if needed > config.width() {
        return Err(AppError::AccumulatorOverflow {
            needed,
            width: config.width(),
        });
    }
    Ok(())
}

#[inline]
fn normalise(acc: u64, divisor: u64) -> u8 {
    ((acc + divisor / 2) / divisor).min(255) as u8
}

fn convolve_rows(
    img: &GrayImage,
    kernel: &IntKernel,
    exec: Exec,
    accumulate: impl Fn(u64, u64) -> u64 + Sync + Send,
) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let half = (kernel.size() / 2) as isize;
    let divisor = kernel.sum();
    let rows = exec.map(h, |y| {
        (0..w)
            .map(|x| {
                let mut acc = 0u64;
                // ascending kernel index
                for ky in 0..kernel.size() {
                    for kx in 0..kernel.size() {
                        let p = img.get_clamped(
                            x as isize + kx as isize - half,
                            y as isize + ky as isize - half,
                        );
                        acc = accumulate(acc, kernel.weight(ky, kx) as u64 * p as u64);
                    }
                }
                normalise(acc, divisor)
            })
            .collect::<Vec<u8>>()
    });
    GrayImage::new(w, h, rows.concat()).expect("dimensions preserved")
}

/// Convolution with native integer addition; the golden reference.
pub fn convolve_reference(img: &GrayImage, kernel: &IntKernel) -> GrayImage {
    convolve_rows(img, kernel, Exec::Sequential, |acc, t| acc + t)
}

pub fn convolve_approx(
    img: &GrayImage,
    kernel: &IntKernel,
    config: &AdderConfig,
) -> Result<GrayImage, AppError> {
    convolve_approx_with(img, kernel, config, Exec::default())
}

/// Convolution whose partial products are accumulated by `config`, with
/// edge replication at the borders. The accumulator is an `n`-bit register.
pub fn convolve_approx_with(
    img: &GrayImage,
    kernel: &IntKernel,
    config: &AdderConfig,
    exec: Exec,
) -> Result<GrayImage, AppError> {
    check_accumulator(kernel, config)?;
    let mask = low_mask(config.width()) as u128;
    Ok(convolve_rows(img, kernel, exec, |acc, t| {
        (config.add_extended(acc, t) & mask) as u64
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::image::test_image;

    #[test]
    fn kernel_shape() {
        let k = gaussian_kernel_int(5, 1.0, 8).unwrap();
        let max = *k.weights().iter().max().unwrap();
        assert_eq!(k.weight(2, 2), max);
        for r in 0..5 {
            for c in 0..5 {
                let w = k.weight(r, c);
                assert_eq!(w, k.weight(c, r));
                assert_eq!(w, k.weight(4 - r, c));
                assert_eq!(w, k.weight(r, 4 - c));
            }
        }
        assert_eq!(k.shift(), 8);
    }

    #[test]
    fn kernel_mass_oracle() {
        // midpoint quadrature of the continuous 2-D Gaussian density
        let sigma: f64 = 1.0;
        let step = 0.01;
        let steps = (16.0 / step) as i32;
        let mut mass = 0.0;
        for i in 0..steps {
            let x = -8.0 + (i as f64 + 0.5) * step;
            let gx = (-x * x / (2.0 * sigma * sigma)).exp();
            for j in 0..steps {
                let y = -8.0 + (j as f64 + 0.5) * step;
                mass += gx * (-y * y / (2.0 * sigma * sigma)).exp() * step * step;
            }
        }
        mass /= 2.0 * std::f64::consts::PI * sigma * sigma;
        let k = gaussian_kernel_int(5, sigma, 8).unwrap();
        let s = k.sum() as f64;
        let target = mass * 256.0;
        assert!(s >= 0.95 * target && s <= 1.05 * target, "sum {s}, target {target}");
    }

    #[test]
    fn kernel_rejects_bad_params() {
        assert!(gaussian_kernel_int(4, 1.0, 8).is_err());
        assert!(gaussian_kernel_int(5, 0.0, 8).is_err());
        assert!(gaussian_kernel_int(5, 1.0, 0).is_err());
    }

    #[test]
    fn exact_matches_reference() {
        let img = test_image();
        let k = gaussian_kernel_int(5, 1.0, 8).unwrap();
        let cfg = AdderConfig::exact(32).unwrap();
        assert_eq!(convolve_approx(&img, &k, &cfg).unwrap(), convolve_reference(&img, &k));
    }

    #[test]
    fn identity_kernel_preserves_image() {
        let img = test_image();
        let k = IntKernel::identity(5).unwrap();
        for c in ["32:4:cesa", "32:8:cesa-perl", "16:2:cesa"] {
            let cfg: AdderConfig = c.parse().unwrap();
            assert_eq!(convolve_approx(&img, &k, &cfg).unwrap(), img);
        }
    }

    #[test]
    fn accumulator_width_checked() {
        let img = test_image();
        let k = gaussian_kernel_int(5, 1.0, 8).unwrap();
        let narrow = AdderConfig::cesa(8, 4).unwrap();
        assert!(matches!(
            convolve_approx(&img, &k, &narrow),
            Err(AppError::AccumulatorOverflow { width: 8, .. })
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let img = test_image();
        let k = gaussian_kernel_int(5, 1.0, 8).unwrap();
        let cfg = AdderConfig::cesa(32, 4).unwrap();
        assert_eq!(
            convolve_approx_with(&img, &k, &cfg, Exec::Sequential).unwrap(),
            convolve_approx_with(&img, &k, &cfg, Exec::Parallel).unwrap()
        );
    }
}
