// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::AppError;

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, AppError> {
        if pixels.len() != width * height {
            return Err(AppError::PixelCount {
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    pub(crate) fn same_dims(&self, other: &GrayImage) -> Result<(), AppError> {
        if self.width != other.width || self.height != other.height {
            return Err(AppError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

pub const TEST_IMAGE_SIZE: usize = 256;

/// Built-in 256x256 test image: a radial gradient with sinusoidal texture
/// and two flat patches with hard edges.
pub fn test_image() -> GrayImage {
    let n = TEST_IMAGE_SIZE;
    let c = (n as f64 - 1.0) / 2.0;
    let r_max = (2.0 * c * c).sqrt();
    let mut pixels = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let (fx, fy) = (x as f64, y as f64);
            let r = ((fx - c).powi(2) + (fy - c).powi(2)).sqrt();
            let mut v = 30.0 + 180.0 * (1.0 - r / r_max);
            v += 18.0 * (fx / 3.0).sin() * (fy / 5.0).cos();
            v += 8.0 * ((fx + 2.0 * fy) / 11.0).sin();
            if (40..100).contains(&x) && (150..210).contains(&y) {
                v = 225.0;
            }
            if (170..230).contains(&x) && (30..70).contains(&y) {
                v = 20.0;
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage {
        width: n,
        height: n,
        pixels,
    }
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma`, rounding and
/// clamping to 0..=255. Pixels are visited in row-major order from a single
/// seeded stream.
pub fn add_noise(img: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage, AppError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(AppError::InvalidParam(format!(
            "noise sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| AppError::InvalidParam(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        pixels: img
            .pixels
            .iter()
            .map(|&p| (p as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_count_checked() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 4]).is_ok());
    }

    #[test]
    fn clamped_access() {
        let img = GrayImage::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(img.get_clamped(-5, -1), 1);
        assert_eq!(img.get_clamped(9, 0), 2);
        assert_eq!(img.get_clamped(1, 7), 4);
    }

    #[test]
    fn test_image_is_textured() {
        let img = test_image();
        assert_eq!((img.width(), img.height()), (256, 256));
        let min = *img.pixels().iter().min().unwrap();
        let max = *img.pixels().iter().max().unwrap();
        assert!(max - min > 150);
    }

    #[test]
    fn zero_noise_is_identity() {
        let img = test_image();
        assert_eq!(add_noise(&img, 0.0, 5).unwrap(), img);
        assert!(add_noise(&img, -1.0, 5).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let img = test_image();
        assert_eq!(add_noise(&img, 10.0, 3).unwrap(), add_noise(&img, 10.0, 3).unwrap());
        assert_ne!(add_noise(&img, 10.0, 3).unwrap(), add_noise(&img, 10.0, 4).unwrap());
    }

    #[test]
    fn noise_spread_on_mid_gray() {
        let img = GrayImage::filled(256, 256, 128);
        let noisy = add_noise(&img, 10.0, 11).unwrap();
        let diffs: Vec<f64> = noisy
            .pixels()
            .iter()
            .map(|&p| p as f64 - 128.0)
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((8.5..=11.5).contains(&sd), "sd = {sd}");
        assert!(mean.abs() < 0.2);
    }
}
