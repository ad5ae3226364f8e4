//! Blind noise estimate from the most homogeneous blocks of an image.

use serde::{Deserialize, Serialize};

use super::{Plane, MIN_BLIND_SIDE};
use crate::num::median;
use crate::{Error, Result, Scalar};

/// MAD to standard deviation for a normal distribution.
const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrConfig {
    pub block: usize,
    /// Share of blocks (lowest residual spread first) treated as homogeneous.
    pub decile: f64,
}

impl Default for SnrConfig {
    fn default() -> Self {
        SnrConfig { block: 32, decile: 0.1 }
    }
}

/// With zero estimated noise `snr_linear` and `snr_db` are `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrResult<T> {
    pub snr_linear: T,
    pub snr_db: T,
    pub noise_sigma: T,
    pub signal: T,
    pub block_count: usize,
}

impl<T: Scalar> SnrResult<T> {
    pub fn is_available(&self) -> bool {
        self.snr_linear.is_finite()
    }
}

pub fn snr<T: Scalar>(image: &Plane<T>) -> Result<SnrResult<T>> {
    snr_with(image, &SnrConfig::default())
}

pub fn snr_with<T: Scalar>(image: &Plane<T>, cfg: &SnrConfig) -> Result<SnrResult<T>> {
    if image.width < MIN_BLIND_SIDE || image.height < MIN_BLIND_SIDE {
        return Err(Error::invalid(format!(
            "SNR needs at least {MIN_BLIND_SIDE}x{MIN_BLIND_SIDE} pixels, got {}x{}",
            image.width, image.height
        )));
    }
    if cfg.block < 3 || !(cfg.decile > 0.0 && cfg.decile <= 1.0) {
        return Err(Error::invalid(format!("bad SNR config {cfg:?}")));
    }
    let (w, h) = (image.width as usize, image.height as usize);
    let b = cfg.block;
    // Residual of a 3x3 box filter has std sigma * sqrt(8/9) on white noise.
    let gain = T::lit(MAD_TO_SIGMA * (9.0f64 / 8.0).sqrt());
    let ninth = T::lit(1.0 / 9.0);

    let mut blocks: Vec<(T, T)> = Vec::new();
    for by in (0..h / b).map(|i| i * b) {
        for bx in (0..w / b).map(|i| i * b) {
            let mut residual = Vec::with_capacity(b * b);
            let mut values = Vec::with_capacity(b * b);
            for y in by..by + b {
                for x in bx..bx + b {
                    values.push(image.get(x, y));
                    if x == 0 || y == 0 || x + 1 >= w || y + 1 >= h {
                        continue;
                    }
                    let mut sum = T::zero();
                    for yy in y - 1..=y + 1 {
                        for xx in x - 1..=x + 1 {
                            sum = sum + image.get(xx, yy);
                        }
                    }
                    residual.push(image.get(x, y) - sum * ninth);
                }
            }
            let med = median(&residual).unwrap_or_else(T::zero);
            let dev: Vec<T> = residual.iter().map(|&r| (r - med).abs()).collect();
            let sigma = median(&dev).unwrap_or_else(T::zero) * gain;
            blocks.push((sigma, median(&values).unwrap_or_else(T::zero)));
        }
    }
    if blocks.is_empty() {
        return Err(Error::EmptyInput("SNR blocks"));
    }
    blocks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Greater));
    let keep = ((blocks.len() as f64 * cfg.decile).ceil() as usize).clamp(1, blocks.len());
    let selected = &blocks[..keep];
    let sigmas: Vec<T> = selected.iter().map(|s| s.0).collect();
    let signals: Vec<T> = selected.iter().map(|s| s.1).collect();
    let noise_sigma = median(&sigmas).unwrap();
    let signal = median(&signals).unwrap();
    let (snr_linear, snr_db) = if noise_sigma > T::zero() {
        let s = (signal / noise_sigma).max(T::zero());
        (s, T::lit(20.0) * s.log10())
    } else {
        (T::infinity(), T::infinity())
    };
    Ok(SnrResult {
        snr_linear,
        snr_db,
        noise_sigma,
        signal,
        block_count: keep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy(mu: f64, sigma: f64, seed: u64) -> Plane<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(mu, sigma).unwrap();
        let data = (0..256 * 256).map(|_| n.sample(&mut rng)).collect();
        Plane::new(256, 256, data).unwrap()
    }

    #[test]
    fn gaussian_noise_fixtures() {
        for (mu, sigma, seed) in [(100.0, 5.0, 1), (50.0, 10.0, 2), (100.0, 5.0, 3)] {
            let r = snr(&noisy(mu, sigma, seed)).unwrap();
            let expected = mu / sigma;
            assert!((r.snr_linear / expected - 1.0).abs() < 0.1, "{r:?}");
            assert!((r.snr_db - 20.0 * r.snr_linear.log10()).abs() < 1e-12);
            assert_eq!(r.block_count, 7);
        }
    }

    #[test]
    fn flat_image_is_sentinel() {
        let r = snr(&Plane::from_fn(128, 96, |_, _| 42.0f64)).unwrap();
        assert!(!r.is_available());
        assert_eq!(r.snr_linear, f64::INFINITY);
        assert_eq!(r.noise_sigma, 0.0);
        assert_eq!(r.signal, 42.0);
    }

    #[test]
    fn constant_offset_keeps_sigma() {
        let img = Plane::from_fn(128, 128, |x, y| ((x * 7 + y * 13) % 17) as f64 + (x as f64 * 0.1).sin());
        let a = snr(&img).unwrap();
        let b = snr(&img.map(|v| v + 37.5)).unwrap();
        assert!((a.noise_sigma - b.noise_sigma).abs() < 1e-9);
        assert!((b.signal - a.signal - 37.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_input() {
        assert!(snr(&Plane::from_fn(64, 32, |_, _| 0.0f64)).is_err());
    }

    #[test]
    fn f32_noise() {
        let img = noisy(100.0, 5.0, 9);
        let img32 = Plane::<f32>::new(256, 256, img.data.iter().map(|&v| v as f32).collect()).unwrap();
        let r = snr(&img32).unwrap();
        assert!((r.snr_linear / 20.0 - 1.0).abs() < 0.1);
    }
}
